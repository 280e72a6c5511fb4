use rand::Rng;
use rand_distr::StandardNormal;

use super::{sort_project, Evaluator, OptimizeError, OptimizerConfig, OptimizerRun};

/// Multiplicative 1/5-th success rule on `log(sigma)`: a success multiplies
/// sigma by `exp(1/3)`, a failure by `exp(-1/12)`. Four failures cancel one
/// success, so sigma is stationary at a success rate of 1/5.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OneFifthRule {
    log_sigma: f64,
}

impl OneFifthRule {
    pub const SUCCESS: f64 = 1.0 / 3.0;
    pub const FAILURE: f64 = -1.0 / 12.0;

    pub fn new(sigma: f64) -> Self {
        OneFifthRule {
            log_sigma: sigma.ln(),
        }
    }

    pub fn sigma(&self) -> f64 {
        self.log_sigma.exp()
    }

    pub fn log_sigma(&self) -> f64 {
        self.log_sigma
    }

    pub fn update(&mut self, success: bool) {
        self.log_sigma += if success { Self::SUCCESS } else { Self::FAILURE };
    }
}

/// Initial step size `0.3 sqrt(d) / sqrt(N - 1)`.
pub(crate) fn initial_sigma(cfg: &OptimizerConfig) -> f64 {
    0.3 * cfg.bound() / (cfg.search_dim() as f64).sqrt()
}

/// Elitist (1+1)-ES with isotropic Gaussian mutation.
///
/// The parent starts uniform in the bounds. Each step scores
/// `sort_project(parent + sigma * N(0, I))` and keeps the child when its value
/// is not worse than the parent's. A degenerate child (`+inf`) always counts
/// as a failure.
pub fn run_one_plus_one_es(cfg: &OptimizerConfig) -> Result<OptimizerRun, OptimizeError> {
    cfg.validate()?;
    let mut rng = cfg.search_rng();
    let n = cfg.search_dim();
    let bound = cfg.bound();
    let mut ev = Evaluator::new(cfg);

    let start: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * bound).collect();
    let mut parent = sort_project(&start, cfg.d);
    let mut parent_value = ev.eval(&parent);
    let mut step = OneFifthRule::new(initial_sigma(cfg));

    let mut x = vec![0.0; n];
    while ev.remaining() > 0 {
        let sigma = step.sigma();
        for (xi, &pi) in x.iter_mut().zip(parent.values()) {
            let z: f64 = rng.sample(StandardNormal);
            *xi = pi + sigma * z;
        }
        let child = sort_project(&x, cfg.d);
        let value = ev.eval(&child);
        let success = value.is_finite() && value <= parent_value;
        if success {
            parent = child;
            parent_value = value;
        }
        step.update(success);
    }
    Ok(ev.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimize::Algorithm;

    fn small_cfg(n: usize, budget: usize, seed: u64) -> OptimizerConfig {
        OptimizerConfig {
            d: 2,
            n,
            budget,
            lowfi_reps: 100,
            hifi_reps: 200,
            algorithm: Algorithm::OnePlusOneEs,
            master_seed: seed,
        }
    }

    #[test]
    fn step_rule_constants() {
        let mut s = OneFifthRule::new(0.5);
        let start = s.log_sigma();
        for k in 1..=7 {
            s.update(false);
            assert!((s.log_sigma() - (start - k as f64 / 12.0)).abs() < 1e-15);
        }
        let before = s.log_sigma();
        s.update(true);
        assert!((s.log_sigma() - before - 1.0 / 3.0).abs() < 1e-15);
        let mut t = OneFifthRule::new(0.5);
        t.update(true);
        for _ in 0..4 {
            t.update(false);
        }
        assert!((t.sigma() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn budget_one_returns_initial_candidate() {
        let run = run_one_plus_one_es(&small_cfg(3, 1, 5)).unwrap();
        assert_eq!(run.eval_count, 1);
        assert_eq!(run.trajectory.len(), 1);
        assert_eq!(run.trajectory[0].1, run.best_lowfi);
    }

    #[test]
    fn trajectory_is_monotone_and_run_is_deterministic() {
        let cfg = small_cfg(4, 60, 11);
        let a = run_one_plus_one_es(&cfg).unwrap();
        assert_eq!(a.eval_count, 60);
        assert!(a.trajectory.windows(2).all(|w| w[1].1 <= w[0].1));
        let p = a.best_candidate.values();
        assert!(p.windows(2).all(|w| w[0] <= w[1]));
        assert!(p.iter().all(|&v| (0.0..=2f64.sqrt()).contains(&v)));
        let b = run_one_plus_one_es(&cfg).unwrap();
        assert_eq!(a, b);
    }
}
