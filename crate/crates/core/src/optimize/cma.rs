use rand::Rng;
use rand_distr::StandardNormal;

use super::{sort_project, Evaluator, OptimizeError, OptimizerConfig, OptimizerRun};

/// Strategy parameters of the separable (diagonal-covariance) CMA-ES, with
/// the usual defaults for search dimension `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct CmaParams {
    pub lambda: usize,
    pub mu: usize,
    pub weights: Vec<f64>,
    pub mu_eff: f64,
    pub c_sigma: f64,
    pub d_sigma: f64,
    pub c_c: f64,
    pub c_cov: f64,
    pub mu_cov: f64,
    pub chi_n: f64,
}

impl CmaParams {
    pub fn new(n: usize) -> Self {
        let nf = n as f64;
        let lambda = 4 + (3.0 * nf.ln()).floor() as usize;
        let mu = lambda / 2;
        let raw: Vec<f64> = (1..=mu)
            .map(|i| (mu as f64 + 0.5).ln() - (i as f64).ln())
            .collect();
        let total: f64 = raw.iter().sum();
        let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
        let mu_eff = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();
        let c_sigma = (mu_eff + 2.0) / (nf + mu_eff + 5.0);
        let d_sigma =
            1.0 + 2.0 * (((mu_eff - 1.0) / (nf + 1.0)).sqrt() - 1.0).max(0.0) + c_sigma;
        let c_c = 4.0 / (nf + 4.0);
        let mu_cov = mu_eff;
        let full = (1.0 / mu_cov) * 2.0 / (nf + 2f64.sqrt()).powi(2)
            + (1.0 - 1.0 / mu_cov)
                * ((2.0 * mu_eff - 1.0) / ((nf + 2.0).powi(2) + mu_eff)).min(1.0);
        // the diagonal model learns n parameters instead of n(n+1)/2
        let c_cov = ((nf + 2.0) / 3.0 * full).min(1.0);
        let chi_n = nf.sqrt() * (1.0 - 1.0 / (4.0 * nf) + 1.0 / (21.0 * nf * nf));
        CmaParams {
            lambda,
            mu,
            weights,
            mu_eff,
            c_sigma,
            d_sigma,
            c_c,
            c_cov,
            mu_cov,
            chi_n,
        }
    }
}

/// Separable CMA-ES: Gaussian search distribution with mean `m`, diagonal
/// covariance `C` and global step size `sigma`, adapted by cumulative
/// step-size adaptation and rank-one plus rank-mu updates of `C`.
///
/// Samples are sort-projected before scoring, and the score is attributed to
/// the unprojected sample when ranking. The budget counts individuals; a final
/// generation cut short by the budget is scored but does not update the
/// distribution.
pub fn run_diagonal_cma(cfg: &OptimizerConfig) -> Result<OptimizerRun, OptimizeError> {
    cfg.validate()?;
    let mut rng = cfg.search_rng();
    let n = cfg.search_dim();
    let bound = cfg.bound();
    let par = CmaParams::new(n);
    let mut ev = Evaluator::new(cfg);

    let mut mean: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * bound).collect();
    let mut sigma = 0.3 * bound;
    let mut cov: Vec<f64> = vec![1.0; n];
    let mut p_sigma = vec![0.0; n];
    let mut p_c = vec![0.0; n];
    let mut generation = 0u32;

    let mut z: Vec<Vec<f64>> = vec![vec![0.0; n]; par.lambda];
    let mut fitness = vec![0.0; par.lambda];
    let mut x = vec![0.0; n];
    while ev.remaining() > 0 {
        let size = par.lambda.min(ev.remaining());
        for k in 0..size {
            for j in 0..n {
                z[k][j] = rng.sample(StandardNormal);
                x[j] = mean[j] + sigma * cov[j].sqrt() * z[k][j];
            }
            fitness[k] = ev.eval(&sort_project(&x, cfg.d));
        }
        if size < par.lambda {
            break;
        }
        generation += 1;

        let mut order: Vec<usize> = (0..par.lambda).collect();
        order.sort_by(|&a, &b| fitness[a].total_cmp(&fitness[b]));

        let mut z_w = vec![0.0; n];
        let mut y_w = vec![0.0; n];
        for (w, &k) in par.weights.iter().zip(&order) {
            for j in 0..n {
                z_w[j] += w * z[k][j];
                y_w[j] += w * cov[j].sqrt() * z[k][j];
            }
        }
        for j in 0..n {
            mean[j] += sigma * y_w[j];
        }

        let cs = par.c_sigma;
        let norm_cs = f64::sqrt(cs * (2.0 - cs) * par.mu_eff);
        for j in 0..n {
            p_sigma[j] = (1.0 - cs) * p_sigma[j] + norm_cs * z_w[j];
        }
        let ps_norm = p_sigma.iter().map(|v| v * v).sum::<f64>().sqrt();
        let decay = 1.0 - (1.0 - cs).powi(2 * generation as i32);
        let h_sigma = ps_norm / decay.sqrt() < (1.4 + 2.0 / (n as f64 + 1.0)) * par.chi_n;

        let cc = par.c_c;
        let norm_cc = f64::sqrt(cc * (2.0 - cc) * par.mu_eff);
        for j in 0..n {
            p_c[j] = (1.0 - cc) * p_c[j] + if h_sigma { norm_cc * y_w[j] } else { 0.0 };
        }

        let ccov = par.c_cov;
        let rank_one = ccov / par.mu_cov;
        let rank_mu = ccov * (1.0 - 1.0 / par.mu_cov);
        let stall = if h_sigma { 0.0 } else { cc * (2.0 - cc) };
        for j in 0..n {
            let mut spread = 0.0;
            for (w, &k) in par.weights.iter().zip(&order) {
                spread += w * cov[j] * z[k][j] * z[k][j];
            }
            cov[j] = (1.0 - ccov) * cov[j]
                + rank_one * (p_c[j] * p_c[j] + stall * cov[j])
                + rank_mu * spread;
        }

        sigma *= ((cs / par.d_sigma) * (ps_norm / par.chi_n - 1.0)).exp();
    }
    Ok(ev.finish())
}
