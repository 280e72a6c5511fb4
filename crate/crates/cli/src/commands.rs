//! Subcommand implementations. Each returns the bytes to write and a default
//! file name for directory outputs.

use std::time::Instant;

use diagslice::discrepancy::{expected_l2sq, iid_expected_l2sq_analytic, Source};
use diagslice::experiments::{
    comparison_table, convergence_experiment, kde_summary, reference_data,
    reference_pointsets_report, volume_deviation_experiment, ComparisonOptions, ExperimentReport,
    KdeInput,
};
use diagslice::format::fmt_f64;
use diagslice::geometry::{generating_set, hybrid_set, normal_approx_set, Partition};
use diagslice::optimize::{best_of_runs, Algorithm, MultiRun, OptimizerConfig};
use diagslice::sampling::{sample_iid, sample_stratified, RngSpec};
use serde_json::json;

use crate::args::*;
use crate::CliError;

pub struct Output {
    pub bytes: Vec<u8>,
    pub file_stem: String,
    pub format: Format,
}

fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::Writer::from_writer(Vec::new())
}

fn finish_csv(w: csv::Writer<Vec<u8>>) -> Result<Vec<u8>, CliError> {
    w.into_inner().map_err(|e| CliError::Io(e.to_string()))
}

fn to_json<T: serde::Serialize>(v: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("output serialises");
    s.push('\n');
    s.into_bytes()
}

fn build_partition(d: usize, n: usize, method: Method) -> Result<Partition, CliError> {
    Ok(match method {
        Method::Exact => generating_set(d, n)?,
        Method::Normal => normal_approx_set(d, n)?,
        Method::Hybrid => hybrid_set(d, n)?,
    })
}

fn method_name(m: Method) -> &'static str {
    match m {
        Method::Exact => "exact",
        Method::Normal => "normal",
        Method::Hybrid => "hybrid",
    }
}

fn algorithm(a: Algo) -> Algorithm {
    match a {
        Algo::Es => Algorithm::OnePlusOneEs,
        Algo::Cma => Algorithm::DiagonalCma,
    }
}

/// The point source selected by `--iid`, `--cuts` or `--method`, and its
/// label.
fn build_source(a: &SourceArgs) -> Result<(Source, String), CliError> {
    if a.iid {
        let n = a
            .strata
            .ok_or_else(|| CliError::Usage("--iid needs the number of points -N".into()))?;
        if n == 0 {
            return Err(CliError::Usage("-N must be at least 1".into()));
        }
        Partition::whole(a.dim)?;
        return Ok((Source::iid(a.dim, n), "iid".into()));
    }
    if let Some(F64List(cuts)) = &a.cuts {
        if let Some(n) = a.strata {
            if n != cuts.len() + 1 {
                return Err(CliError::Usage(format!(
                    "-N {n} disagrees with {} cuts (which give {} strata)",
                    cuts.len(),
                    cuts.len() + 1
                )));
            }
        }
        // user-supplied cuts: any rejection is an input error
        let part = Partition::new(a.dim, cuts.clone()).map_err(|e| CliError::Usage(e.to_string()))?;
        return Ok((Source::stratified(part), "cuts".into()));
    }
    let n = a
        .strata
        .ok_or_else(|| CliError::Usage("give -N (with --method), --cuts, or --iid with -N".into()))?;
    let part = build_partition(a.dim, n, a.method)?;
    Ok((Source::stratified(part), method_name(a.method).into()))
}

pub fn partition(a: &PartitionArgs) -> Result<Output, CliError> {
    let part = build_partition(a.dim, a.strata, a.method)?;
    let d = part.dim();
    let scale = (d as f64).sqrt();
    let vols = part.volumes();
    let bytes = match a.output.format {
        Format::Csv => {
            let mut w = csv_writer();
            w.write_record(["stratum", "r_lower", "r_upper", "p_lower", "p_upper", "volume"])?;
            for (s, v) in vols.iter().enumerate() {
                let (lo, hi) = part.bounds(s);
                w.write_record([
                    s.to_string(),
                    fmt_f64(lo),
                    fmt_f64(hi),
                    fmt_f64(lo / scale),
                    fmt_f64(hi / scale),
                    fmt_f64(*v),
                ])?;
            }
            finish_csv(w)?
        }
        Format::Json => to_json(&json!({
            "d": d,
            "N": part.strata(),
            "method": method_name(a.method),
            "r": part.cuts(),
            "p": part.to_diagonal().values(),
            "volumes": vols,
        })),
    };
    Ok(Output {
        bytes,
        file_stem: format!("partition_{}_{d}d_{}", method_name(a.method), part.strata()),
        format: a.output.format,
    })
}

pub fn sample(a: &SampleArgs) -> Result<Output, CliError> {
    let (source, label) = build_source(&a.source)?;
    let spec = RngSpec::new(a.seed, a.stream);
    let ps = match &source {
        Source::Iid { d, n } => sample_iid(*d, *n, spec)?,
        Source::Stratified { partition } => sample_stratified(partition, spec)?,
    };
    let bytes = match a.output.format {
        Format::Csv => {
            let mut buf = Vec::new();
            ps.write_csv(&mut buf)?;
            buf
        }
        Format::Json => to_json(&ps),
    };
    Ok(Output {
        bytes,
        file_stem: format!("sample_{label}_{}d_{}", source.dim(), source.points()),
        format: a.output.format,
    })
}

pub fn discrepancy(a: &DiscrepancyArgs) -> Result<Output, CliError> {
    let (source, label) = build_source(&a.source)?;
    let est = expected_l2sq(&source, a.reps, a.seed)?;
    let analytic = iid_expected_l2sq_analytic(est.d, est.n);
    let bytes = match a.output.format {
        Format::Csv => {
            let mut w = csv_writer();
            w.write_record(["d", "N", "source", "reps", "seed", "mean_sq", "std_err", "iid_analytic"])?;
            w.write_record([
                est.d.to_string(),
                est.n.to_string(),
                label.clone(),
                est.reps.to_string(),
                a.seed.to_string(),
                fmt_f64(est.mean_sq),
                fmt_f64(est.std_err),
                fmt_f64(analytic),
            ])?;
            finish_csv(w)?
        }
        Format::Json => to_json(&json!({
            "seed": a.seed,
            "estimate": est,
            "iid_analytic": analytic,
        })),
    };
    Ok(Output {
        bytes,
        file_stem: format!("discrepancy_{label}_{}d_{}", est.d, est.n),
        format: a.output.format,
    })
}

fn join_values(v: &[f64]) -> String {
    v.iter().map(|&x| fmt_f64(x)).collect::<Vec<_>>().join(";")
}

fn runs_csv(multi: &MultiRun) -> Result<Vec<u8>, CliError> {
    let mut w = csv_writer();
    w.write_record([
        "run",
        "seed",
        "algorithm",
        "d",
        "N",
        "evaluations",
        "best_lowfi",
        "best_lowfi_se",
        "hifi_mean",
        "hifi_se",
        "best",
        "p",
    ])?;
    for (k, r) in multi.runs.iter().enumerate() {
        let (hm, hs) = r
            .best_hifi
            .as_ref()
            .map_or((f64::NAN, f64::NAN), |e| (e.mean_sq, e.std_err));
        w.write_record([
            k.to_string(),
            r.config.master_seed.to_string(),
            r.config.algorithm.name().to_string(),
            r.config.d.to_string(),
            r.config.n.to_string(),
            r.eval_count.to_string(),
            fmt_f64(r.best_lowfi),
            fmt_f64(r.best_lowfi_std_err),
            fmt_f64(hm),
            fmt_f64(hs),
            (k == multi.best).to_string(),
            join_values(r.best_candidate.values()),
        ])?;
    }
    finish_csv(w)
}

fn trajectory_csv(multi: &MultiRun) -> Result<Vec<u8>, CliError> {
    let mut w = csv_writer();
    w.write_record(["run", "evaluation", "best_lowfi"])?;
    let best = multi.best_run();
    for &(e, v) in &best.trajectory {
        w.write_record([multi.best.to_string(), e.to_string(), fmt_f64(v)])?;
    }
    finish_csv(w)
}

pub fn optimize(a: &OptimizeArgs) -> Result<Output, CliError> {
    let cfg = OptimizerConfig {
        d: a.dim,
        n: a.strata,
        budget: a.search.budget,
        lowfi_reps: a.search.lowfi_reps,
        hifi_reps: a.hifi_reps,
        algorithm: algorithm(a.search.algo),
        master_seed: a.seed,
    };
    let multi = best_of_runs(&cfg, a.search.runs)?;
    let bytes = match (a.output.format, a.table) {
        (Format::Csv, OptimizeTable::Runs) => runs_csv(&multi)?,
        (Format::Csv, OptimizeTable::Trajectory) => trajectory_csv(&multi)?,
        (Format::Json, _) => to_json(&json!({ "config": cfg, "runs": multi.runs, "best": multi.best })),
    };
    let table = match a.table {
        OptimizeTable::Runs => "runs",
        OptimizeTable::Trajectory => "trajectory",
    };
    Ok(Output {
        bytes,
        file_stem: format!("optimize_{}_{table}_{}d_{}", cfg.algorithm.name(), cfg.d, cfg.n),
        format: a.output.format,
    })
}

fn parse_algos(s: &str) -> Result<Vec<Algorithm>, CliError> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| match t {
            "es" => Ok(Algorithm::OnePlusOneEs),
            "cma" => Ok(Algorithm::DiagonalCma),
            other => Err(CliError::Usage(format!("unknown optimizer '{other}' (expected es or cma)"))),
        })
        .collect()
}

fn kde_inputs(d: usize, ns: &[usize], with_reference: bool) -> Result<Vec<KdeInput>, CliError> {
    let mut sets = Vec::new();
    for &n in ns {
        sets.push(KdeInput {
            label: format!("equivolume_N{n}"),
            coords: generating_set(d, n)?.to_diagonal(),
        });
        if with_reference {
            for s in reference_data().pointsets.iter().filter(|s| s.d == d && s.n == n) {
                sets.push(KdeInput {
                    label: format!("{}_N{n}", s.optimizer),
                    coords: diagslice::geometry::DiagonalCoords::new(d, s.p.clone())?,
                });
            }
        }
    }
    Ok(sets)
}

fn render_report(report: &ExperimentReport, r: &ReportArgs) -> Result<Vec<u8>, CliError> {
    match r.output.format {
        Format::Json => Ok(report.to_json_string().into_bytes()),
        Format::Csv => {
            let table = match (r.table, &report.summary) {
                (ReportTable::Records, _) | (ReportTable::Auto, None) => &report.records,
                (ReportTable::Summary | ReportTable::Auto, Some(s)) => s,
                (ReportTable::Summary, None) => {
                    return Err(CliError::Usage(format!(
                        "experiment {} has no summary table; use --table records",
                        report.experiment
                    )))
                }
            };
            let mut buf = Vec::new();
            table.write_csv(&mut buf)?;
            Ok(buf)
        }
    }
}

pub fn experiment(cmd: &ExperimentCommand) -> Result<Output, CliError> {
    let start = Instant::now();
    let (report, r) = match cmd {
        ExperimentCommand::Convergence { dims, strata, report } => {
            (convergence_experiment(&dims.0, *strata)?, report)
        }
        ExperimentCommand::VolumeDeviation { dim, ns, report } => {
            (volume_deviation_experiment(*dim, &ns.0)?, report)
        }
        ExperimentCommand::Comparison {
            dim,
            ns,
            reps,
            algos,
            budget,
            lowfi_reps,
            runs,
            seed,
            report,
        } => {
            let opts = ComparisonOptions {
                reps: *reps,
                optimizers: parse_algos(algos)?,
                budget: *budget,
                lowfi_reps: *lowfi_reps,
                runs: *runs,
                seed: *seed,
            };
            (comparison_table(*dim, &ns.0, &opts)?, report)
        }
        ExperimentCommand::ReferencePointsets {
            dims,
            max_n,
            reps,
            seed,
            report,
        } => (
            reference_pointsets_report(dims.as_ref().map(|d| d.0.as_slice()), *max_n, *reps, *seed)?,
            report,
        ),
        ExperimentCommand::Kde {
            dim,
            ns,
            with_reference,
            grid,
            report,
        } => {
            let sets = kde_inputs(*dim, &ns.0, *with_reference)?;
            (kde_summary(&sets, *grid)?, report)
        }
    };
    let mut report = report;
    if r.timing {
        report.wall_clock_secs = Some(start.elapsed().as_secs_f64());
    }
    let bytes = render_report(&report, r)?;
    let name = report.file_name();
    Ok(Output {
        bytes,
        file_stem: name.trim_end_matches(".csv").to_string(),
        format: r.output.format,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn algorithm_lists() {
        assert_eq!(parse_algos("").unwrap(), vec![]);
        assert_eq!(
            parse_algos("es, cma").unwrap(),
            vec![Algorithm::OnePlusOneEs, Algorithm::DiagonalCma]
        );
        assert!(parse_algos("ngopt").is_err());
    }

    #[test]
    fn source_selection() {
        let base = SourceArgs {
            dim: 2,
            strata: Some(4),
            method: Method::Exact,
            cuts: None,
            iid: false,
        };
        assert_eq!(build_source(&base).unwrap().1, "exact");
        let cuts = SourceArgs {
            cuts: Some(F64List(vec![0.5, 1.0])),
            ..base.clone()
        };
        assert!(matches!(build_source(&cuts), Err(CliError::Usage(_))));
        let cuts = SourceArgs { strata: None, ..cuts };
        assert_eq!(build_source(&cuts).unwrap().0.points(), 3);
        let iid = SourceArgs { iid: true, ..base };
        assert_eq!(build_source(&iid).unwrap().1, "iid");
    }
}
