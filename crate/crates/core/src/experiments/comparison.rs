use serde_json::json;

use super::{params, Cell, ExperimentError, ExperimentReport, Table};
use crate::discrepancy::{expected_l2sq, iid_expected_l2sq_analytic, Source};
use crate::format::fmt_f64;
use crate::geometry::generating_set;
use crate::optimize::{best_of_runs, Algorithm, OptimizerConfig};
use crate::sampling::derive_seed;

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonOptions {
    /// Repetitions of the final estimates (baselines and optimizer winners).
    pub reps: usize,
    pub optimizers: Vec<Algorithm>,
    pub budget: usize,
    pub lowfi_reps: usize,
    /// Independent optimizer runs per cell; the best by final estimate wins.
    pub runs: usize,
    pub seed: u64,
}

impl Default for ComparisonOptions {
    fn default() -> Self {
        ComparisonOptions {
            reps: 10_000,
            optimizers: Vec::new(),
            budget: OptimizerConfig::DEFAULT_BUDGET,
            lowfi_reps: OptimizerConfig::DEFAULT_LOWFI_REPS,
            runs: 10,
            seed: 0,
        }
    }
}

fn pct(x: f64, base: f64) -> f64 {
    100.0 * (x - base) / base
}

/// Expected squared discrepancy of i.i.d. points, the equivolume
/// stratification and the optimizers' best stratifications, per `N`, with
/// percentage changes relative to the equivolume value.
pub fn comparison_table(
    d: usize,
    ns: &[usize],
    opts: &ComparisonOptions,
) -> Result<ExperimentReport, ExperimentError> {
    if opts.reps < 100 {
        return Err(ExperimentError::Parameter(format!(
            "need at least 100 repetitions, got {}",
            opts.reps
        )));
    }
    if ns.is_empty() {
        return Err(ExperimentError::Parameter("need at least one N".into()));
    }
    let mut columns: Vec<String> = [
        "d",
        "N",
        "iid_analytic",
        "iid_mean",
        "iid_se",
        "equivolume_mean",
        "equivolume_se",
        "iid_pct",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    for alg in &opts.optimizers {
        for suffix in ["lowfi", "mean", "se", "pct", "candidate"] {
            columns.push(format!("{}_{suffix}", alg.name()));
        }
    }
    let mut records = Table::new(columns);
    let mut seeds = Vec::new();
    for &n in ns {
        let cell_seed = derive_seed(opts.seed, n as u64);
        let iid_seed = derive_seed(cell_seed, 0);
        let equi_seed = derive_seed(cell_seed, 1);
        seeds.extend([iid_seed, equi_seed]);
        let iid = expected_l2sq(&Source::iid(d, n), opts.reps, iid_seed)?;
        let equi = expected_l2sq(&Source::stratified(generating_set(d, n)?), opts.reps, equi_seed)?;
        let mut row: Vec<Cell> = vec![
            d.into(),
            n.into(),
            iid_expected_l2sq_analytic(d, n).into(),
            iid.mean_sq.into(),
            iid.std_err.into(),
            equi.mean_sq.into(),
            equi.std_err.into(),
            pct(iid.mean_sq, equi.mean_sq).into(),
        ];
        for (a, &alg) in opts.optimizers.iter().enumerate() {
            let cfg = OptimizerConfig {
                d,
                n,
                budget: opts.budget,
                lowfi_reps: opts.lowfi_reps,
                hifi_reps: opts.reps,
                algorithm: alg,
                master_seed: derive_seed(cell_seed, 2 + a as u64),
            };
            seeds.push(cfg.master_seed);
            let multi = best_of_runs(&cfg, opts.runs)?;
            let best = multi.best_run();
            let (mean, se) = best
                .best_hifi
                .as_ref()
                .map_or((f64::INFINITY, f64::NAN), |e| (e.mean_sq, e.std_err));
            let candidate = best
                .best_candidate
                .values()
                .iter()
                .map(|&v| fmt_f64(v))
                .collect::<Vec<_>>()
                .join(" ");
            row.extend([
                best.best_lowfi.into(),
                mean.into(),
                se.into(),
                pct(mean, equi.mean_sq).into(),
                candidate.into(),
            ]);
        }
        records.push(row);
    }
    let mut report = ExperimentReport::new(
        "comparison",
        params(vec![
            ("d", json!(d)),
            ("Ns", json!(ns)),
            ("reps", json!(opts.reps)),
            (
                "optimizers",
                json!(opts.optimizers.iter().map(|a| a.name()).collect::<Vec<_>>()),
            ),
            ("budget", json!(opts.budget)),
            ("lowfi_reps", json!(opts.lowfi_reps)),
            ("runs", json!(opts.runs)),
            ("seed", json!(opts.seed)),
        ]),
        records,
    );
    report.seeds = seeds;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn baseline_only_table() {
        let opts = ComparisonOptions {
            reps: 2000,
            seed: 3,
            ..Default::default()
        };
        let r = comparison_table(2, &[3, 6], &opts).unwrap();
        assert_eq!(r.records.len(), 2);
        assert_eq!(r.records.columns().len(), 8);
        let iid = r.records.values("iid_mean").unwrap();
        let equi = r.records.values("equivolume_mean").unwrap();
        let p = r.records.values("iid_pct").unwrap();
        for k in 0..2 {
            assert_eq!(p[k], 100.0 * (iid[k] - equi[k]) / equi[k]);
            // roughly a factor of two
            assert!(iid[k] / equi[k] > 1.5 && iid[k] / equi[k] < 2.5);
        }
        assert!(comparison_table(2, &[3], &ComparisonOptions { reps: 10, ..opts }).is_err());
    }

    #[test]
    fn optimizer_columns() {
        let opts = ComparisonOptions {
            reps: 200,
            optimizers: vec![Algorithm::OnePlusOneEs, Algorithm::DiagonalCma],
            budget: 12,
            lowfi_reps: 50,
            runs: 2,
            seed: 1,
        };
        let r = comparison_table(2, &[3], &opts).unwrap();
        assert_eq!(r.records.columns().len(), 18);
        let mean = r.records.values("diagonal_cma_mean").unwrap()[0];
        let equi = r.records.values("equivolume_mean").unwrap()[0];
        let p = r.records.values("diagonal_cma_pct").unwrap()[0];
        assert_eq!(p, 100.0 * (mean - equi) / equi);
        assert_eq!(r, comparison_table(2, &[3], &opts).unwrap());
    }
}
