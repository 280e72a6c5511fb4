//! Black-box search for cut positions that minimise the expected squared L2
//! discrepancy of the stratified sample.
//!
//! The search space is the vector of diagonal coordinates `p_1..p_{N-1}` in
//! `[0, sqrt(d)]`. Candidates are made feasible by [`sort_project`] and scored
//! by a low-fidelity Monte-Carlo estimate; the final best candidate is
//! re-scored with a high-fidelity estimate.

mod cma;
mod es;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::discrepancy::{expected_l2sq, DiscrepancyEstimate, Source};
use crate::geometry::{check_dim, from_diagonal, DiagonalCoords};
use crate::sampling::{derive_seed, RngSpec};

pub use cma::{run_diagonal_cma, CmaParams};
pub use es::{run_one_plus_one_es, OneFifthRule};

/// Seed tags reserved for the search itself and for the final re-scoring;
/// evaluation `e` (0-based) uses tag `e`.
const SEARCH_TAG: u64 = u64::MAX - 1;
const HIFI_TAG: u64 = u64::MAX;
const RUNS_TAG: u64 = u64::MAX - 2;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OptimizeError {
    #[error("invalid optimizer configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    OnePlusOneEs,
    DiagonalCma,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::OnePlusOneEs => "one_plus_one_es",
            Algorithm::DiagonalCma => "diagonal_cma",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub d: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub budget: usize,
    pub lowfi_reps: usize,
    pub hifi_reps: usize,
    pub algorithm: Algorithm,
    pub master_seed: u64,
}

impl OptimizerConfig {
    pub const DEFAULT_BUDGET: usize = 1000;
    pub const DEFAULT_LOWFI_REPS: usize = 1500;
    pub const DEFAULT_HIFI_REPS: usize = 10_000;

    pub fn new(d: usize, n: usize, algorithm: Algorithm) -> Self {
        OptimizerConfig {
            d,
            n,
            budget: Self::DEFAULT_BUDGET,
            lowfi_reps: Self::DEFAULT_LOWFI_REPS,
            hifi_reps: Self::DEFAULT_HIFI_REPS,
            algorithm,
            master_seed: 0,
        }
    }

    /// Dimension of the search space, `N - 1`.
    pub fn search_dim(&self) -> usize {
        self.n - 1
    }

    pub fn bound(&self) -> f64 {
        (self.d as f64).sqrt()
    }

    pub fn validate(&self) -> Result<(), OptimizeError> {
        check_dim(self.d).map_err(|e| OptimizeError::Config(e.to_string()))?;
        if self.n < 2 {
            return Err(OptimizeError::Config(format!(
                "need at least 2 strata to have a cut to optimise, got N = {}",
                self.n
            )));
        }
        if self.budget < 1 {
            return Err(OptimizeError::Config("budget must be at least 1".into()));
        }
        if self.lowfi_reps < 2 || self.hifi_reps < 2 {
            return Err(OptimizeError::Config(format!(
                "repetition counts must be at least 2, got lowfi = {}, hifi = {}",
                self.lowfi_reps, self.hifi_reps
            )));
        }
        Ok(())
    }

    fn search_rng(&self) -> rand_chacha::ChaCha8Rng {
        RngSpec::new(derive_seed(self.master_seed, SEARCH_TAG), 0).rng()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizerRun {
    pub config: OptimizerConfig,
    pub best_candidate: DiagonalCoords,
    pub best_lowfi: f64,
    pub best_lowfi_std_err: f64,
    /// `None` when every evaluated candidate was degenerate.
    pub best_hifi: Option<DiscrepancyEstimate>,
    /// `(evaluation index, best-so-far value)`, 1-based.
    pub trajectory: Vec<(usize, f64)>,
    pub eval_count: usize,
}

impl OptimizerRun {
    pub fn hifi_mean(&self) -> f64 {
        self.best_hifi.as_ref().map_or(f64::INFINITY, |e| e.mean_sq)
    }
}

/// Clamps every coordinate to `[0, sqrt(d)]` and sorts ascending. NaN maps
/// to 0.
pub fn sort_project(x: &[f64], d: usize) -> DiagonalCoords {
    let bound = (d as f64).sqrt();
    let mut p: Vec<f64> = x
        .iter()
        .map(|&v| if v.is_nan() { 0.0 } else { v.clamp(0.0, bound) })
        .collect();
    p.sort_by(f64::total_cmp);
    DiagonalCoords::new(d, p).expect("projected coordinates are sorted and in bounds")
}

/// Low-fidelity score; degenerate candidates (coinciding cuts, cuts on a
/// corner, strata below the sampler's minimum volume) score `+inf`.
pub fn evaluate(candidate: &DiagonalCoords, reps: usize, master_seed: u64) -> f64 {
    evaluate_estimate(candidate, reps, master_seed).map_or(f64::INFINITY, |e| e.mean_sq)
}

pub fn evaluate_estimate(
    candidate: &DiagonalCoords,
    reps: usize,
    master_seed: u64,
) -> Option<DiscrepancyEstimate> {
    let part = from_diagonal(candidate).ok()?;
    expected_l2sq(&Source::stratified(part), reps, master_seed).ok()
}

/// Budget-counting evaluator shared by the search loops.
pub(crate) struct Evaluator<'a> {
    cfg: &'a OptimizerConfig,
    count: usize,
    best: Option<(DiagonalCoords, f64, f64)>,
    trajectory: Vec<(usize, f64)>,
}

impl<'a> Evaluator<'a> {
    pub(crate) fn new(cfg: &'a OptimizerConfig) -> Self {
        Evaluator {
            cfg,
            count: 0,
            best: None,
            trajectory: Vec::with_capacity(cfg.budget),
        }
    }

    pub(crate) fn remaining(&self) -> usize {
        self.cfg.budget - self.count
    }

    /// Scores a projected candidate and records the best-so-far value.
    pub(crate) fn eval(&mut self, candidate: &DiagonalCoords) -> f64 {
        debug_assert!(self.remaining() > 0);
        let seed = derive_seed(self.cfg.master_seed, self.count as u64);
        self.count += 1;
        let (value, se) = match evaluate_estimate(candidate, self.cfg.lowfi_reps, seed) {
            Some(e) => (e.mean_sq, e.std_err),
            None => (f64::INFINITY, f64::NAN),
        };
        let improved = match &self.best {
            None => true,
            Some((_, best, _)) => value < *best,
        };
        if improved {
            self.best = Some((candidate.clone(), value, se));
        }
        let best = self.best.as_ref().map_or(f64::INFINITY, |b| b.1);
        self.trajectory.push((self.count, best));
        value
    }

    pub(crate) fn finish(self) -> OptimizerRun {
        let cfg = self.cfg.clone();
        let (best_candidate, best_lowfi, best_lowfi_std_err) =
            self.best.expect("budget >= 1 guarantees one evaluation");
        let best_hifi = evaluate_estimate(
            &best_candidate,
            cfg.hifi_reps,
            derive_seed(cfg.master_seed, HIFI_TAG),
        );
        OptimizerRun {
            config: cfg,
            best_candidate,
            best_lowfi,
            best_lowfi_std_err,
            best_hifi,
            trajectory: self.trajectory,
            eval_count: self.count,
        }
    }
}

/// Runs the configured algorithm once.
pub fn optimize(cfg: &OptimizerConfig) -> Result<OptimizerRun, OptimizeError> {
    match cfg.algorithm {
        Algorithm::OnePlusOneEs => run_one_plus_one_es(cfg),
        Algorithm::DiagonalCma => run_diagonal_cma(cfg),
    }
}

/// Seed of independent run `k` derived from a master seed.
pub fn run_seed(master_seed: u64, k: usize) -> u64 {
    derive_seed(derive_seed(master_seed, RUNS_TAG), k as u64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultiRun {
    pub runs: Vec<OptimizerRun>,
    /// Index of the run with the lowest high-fidelity score.
    pub best: usize,
}

impl MultiRun {
    pub fn best_run(&self) -> &OptimizerRun {
        &self.runs[self.best]
    }
}

/// `runs` independent runs (run `k` seeded by [`run_seed`]), executed in
/// parallel; the best is chosen by high-fidelity score, ties to the lower
/// index.
pub fn best_of_runs(cfg: &OptimizerConfig, runs: usize) -> Result<MultiRun, OptimizeError> {
    cfg.validate()?;
    if runs == 0 {
        return Err(OptimizeError::Config("need at least one run".into()));
    }
    let results: Vec<Result<OptimizerRun, OptimizeError>> = (0..runs)
        .into_par_iter()
        .map(|k| {
            let mut c = cfg.clone();
            c.master_seed = run_seed(cfg.master_seed, k);
            optimize(&c)
        })
        .collect();
    let runs = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    let mut best = 0;
    for (k, r) in runs.iter().enumerate() {
        if r.hifi_mean() < runs[best].hifi_mean() {
            best = k;
        }
    }
    Ok(MultiRun { runs, best })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sort_project_examples() {
        let p = sort_project(&[0.9, 0.3, 1.5], 2);
        assert_eq!(p.values(), &[0.3, 0.9, 2f64.sqrt()]);
        let sorted = [0.1, 0.5, 1.2];
        assert_eq!(sort_project(&sorted, 2).values(), &sorted);
        assert_eq!(sort_project(&[0.4, 0.4], 3).values(), &[0.4, 0.4]);
        assert_eq!(sort_project(&[f64::NAN, -1.0], 2).values(), &[0.0, 0.0]);
    }

    #[test]
    fn degenerate_candidates_score_infinity() {
        let tied = sort_project(&[0.5, 0.5], 2);
        assert_eq!(evaluate(&tied, 50, 0), f64::INFINITY);
        let corner = sort_project(&[0.0, 0.5], 2);
        assert_eq!(evaluate(&corner, 50, 0), f64::INFINITY);
        let fine = sort_project(&[0.5, 0.9], 2);
        assert!(evaluate(&fine, 50, 0).is_finite());
    }

    #[test]
    fn config_validation() {
        let mut cfg = OptimizerConfig::new(2, 4, Algorithm::DiagonalCma);
        assert!(cfg.validate().is_ok());
        assert_eq!(cfg.search_dim(), 3);
        cfg.n = 1;
        assert!(cfg.validate().is_err());
        cfg.n = 4;
        cfg.budget = 0;
        assert!(cfg.validate().is_err());
        cfg.budget = 10;
        cfg.lowfi_reps = 1;
        assert!(cfg.validate().is_err());
        cfg.lowfi_reps = 2;
        cfg.d = 13;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn evaluator_tracks_best_and_budget() {
        let mut cfg = OptimizerConfig::new(2, 3, Algorithm::OnePlusOneEs);
        cfg.budget = 3;
        cfg.lowfi_reps = 20;
        cfg.hifi_reps = 20;
        let mut ev = Evaluator::new(&cfg);
        let a = ev.eval(&sort_project(&[0.5, 0.5], 2));
        assert_eq!(a, f64::INFINITY);
        let b = ev.eval(&sort_project(&[0.4, 0.9], 2));
        assert!(b.is_finite());
        assert_eq!(ev.remaining(), 1);
        let run = ev.finish();
        assert_eq!(run.eval_count, 2);
        assert_eq!(run.trajectory, vec![(1, f64::INFINITY), (2, b)]);
        assert_eq!(run.best_lowfi, b);
        assert!(run.best_hifi.is_some());
    }
}
