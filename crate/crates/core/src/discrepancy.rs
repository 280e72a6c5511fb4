//! Squared L2 star discrepancy and Monte-Carlo estimates of its expectation.
//!
//! All values are *squared* discrepancies, `∫ (A(y)/N - vol[0,y))^2 dy`.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::geometry::Partition;
use crate::numeric::{mean_and_std_err, CompensatedSum};
use crate::sampling::{fill_uniform, PointSet, RngSpec, SamplingError, StratifiedSampler};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiscrepancyError {
    #[error("the discrepancy of an empty point set is undefined")]
    EmptyPointSet,
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error(transparent)]
    Sampling(#[from] SamplingError),
}

/// Squared L2 star discrepancy of the points in `coords` (row-major, `d`
/// coordinates each), by Warnock's closed form. Each unordered pair is
/// visited once.
pub fn l2sq_raw(d: usize, coords: &[f64]) -> f64 {
    let n = coords.len() / d;
    let nf = n as f64;
    let mut single = CompensatedSum::new();
    let mut pairs = CompensatedSum::new();
    let mut diag = CompensatedSum::new();
    for k in 0..n {
        let xk = &coords[k * d..(k + 1) * d];
        single.add(xk.iter().map(|&x| 0.5 * (1.0 - x * x)).product());
        diag.add(xk.iter().map(|&x| 1.0 - x).product());
        for l in (k + 1)..n {
            let xl = &coords[l * d..(l + 1) * d];
            pairs.add(xk.iter().zip(xl).map(|(&a, &b)| 1.0 - a.max(b)).product());
        }
    }
    let mut total = CompensatedSum::new();
    total.add(3f64.powi(-(d as i32)));
    total.add(-2.0 / nf * single.value());
    total.add((diag.value() + 2.0 * pairs.value()) / (nf * nf));
    total.value().max(0.0)
}

pub fn l2sq(ps: &PointSet) -> Result<f64, DiscrepancyError> {
    if ps.is_empty() {
        return Err(DiscrepancyError::EmptyPointSet);
    }
    Ok(l2sq_raw(ps.dim(), ps.coords()))
}

/// Where the random point sets come from.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Source {
    Stratified { partition: Partition },
    Iid { d: usize, n: usize },
}

impl Source {
    pub fn stratified(partition: Partition) -> Self {
        Source::Stratified { partition }
    }

    pub fn iid(d: usize, n: usize) -> Self {
        Source::Iid { d, n }
    }

    pub fn dim(&self) -> usize {
        match self {
            Source::Stratified { partition } => partition.dim(),
            Source::Iid { d, .. } => *d,
        }
    }

    pub fn points(&self) -> usize {
        match self {
            Source::Stratified { partition } => partition.strata(),
            Source::Iid { n, .. } => *n,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscrepancyEstimate {
    pub mean_sq: f64,
    pub std_err: f64,
    pub reps: usize,
    pub d: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub source: Source,
}

/// Mean and standard error of [`l2sq`] over `reps` independent point sets.
///
/// Repetition `k` draws from stream `k` of `master_seed`, so the estimate is
/// the same for any thread count: per-repetition values are collected in
/// index order and reduced sequentially.
pub fn expected_l2sq(
    source: &Source,
    reps: usize,
    master_seed: u64,
) -> Result<DiscrepancyEstimate, DiscrepancyError> {
    let values = l2sq_samples(source, reps, master_seed)?;
    let (mean_sq, std_err) = mean_and_std_err(&values);
    Ok(DiscrepancyEstimate {
        mean_sq,
        std_err,
        reps,
        d: source.dim(),
        n: source.points(),
        source: source.clone(),
    })
}

/// Per-repetition squared discrepancies, in repetition order.
pub fn l2sq_samples(
    source: &Source,
    reps: usize,
    master_seed: u64,
) -> Result<Vec<f64>, DiscrepancyError> {
    if reps < 2 {
        return Err(DiscrepancyError::Parameter(format!(
            "need at least 2 repetitions, got {reps}"
        )));
    }
    let d = source.dim();
    let n = source.points();
    if d == 0 || n == 0 {
        return Err(DiscrepancyError::Parameter(format!(
            "need d >= 1 and N >= 1, got d = {d}, N = {n}"
        )));
    }
    let sampler = match source {
        Source::Stratified { partition } => Some(StratifiedSampler::new(partition)?),
        Source::Iid { .. } => None,
    };
    let results: Vec<Result<f64, SamplingError>> = (0..reps)
        .into_par_iter()
        .map_init(
            || (vec![0.0; n * d], vec![false; n]),
            |(coords, filled), k| {
                let mut rng = RngSpec::new(master_seed, k as u64).rng();
                match &sampler {
                    Some(s) => {
                        s.sample_into(&mut rng, coords, filled)?;
                    }
                    None => fill_uniform(&mut rng, coords),
                }
                Ok(l2sq_raw(d, coords))
            },
        )
        .collect();
    results
        .into_iter()
        .map(|r| r.map_err(DiscrepancyError::from))
        .collect()
}

/// `E[l2sq]` for `N` i.i.d. uniform points: `(2^-d - 3^-d) / N`.
pub fn iid_expected_l2sq_analytic(d: usize, n: usize) -> f64 {
    let d = d as i32;
    (2f64.powi(-d) - 3f64.powi(-d)) / n as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::generating_set;
    use crate::sampling::sample_iid;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Exact integral of the squared local discrepancy, cell by cell on the
    /// grid spanned by the point coordinates (the counting function is
    /// constant on each open cell).
    fn cellwise_oracle(d: usize, pts: &[Vec<f64>]) -> f64 {
        let n = pts.len() as f64;
        let axes: Vec<Vec<f64>> = (0..d)
            .map(|j| {
                let mut a: Vec<f64> = pts.iter().map(|p| p[j]).collect();
                a.push(0.0);
                a.push(1.0);
                a.sort_by(f64::total_cmp);
                a.dedup();
                a
            })
            .collect();
        let mut idx = vec![0usize; d];
        let mut total = 0.0;
        loop {
            let lo: Vec<f64> = (0..d).map(|j| axes[j][idx[j]]).collect();
            let hi: Vec<f64> = (0..d).map(|j| axes[j][idx[j] + 1]).collect();
            let c = pts
                .iter()
                .filter(|p| p.iter().zip(&lo).all(|(x, a)| x <= a))
                .count() as f64;
            let vol: f64 = lo.iter().zip(&hi).map(|(a, b)| b - a).product();
            let lin: f64 = lo.iter().zip(&hi).map(|(a, b)| (b * b - a * a) / 2.0).product();
            let sq: f64 = lo.iter().zip(&hi).map(|(a, b)| (b.powi(3) - a.powi(3)) / 3.0).product();
            total += c * c / (n * n) * vol - 2.0 * c / n * lin + sq;
            let mut j = 0;
            loop {
                if j == d {
                    return total;
                }
                idx[j] += 1;
                if idx[j] + 1 < axes[j].len() {
                    break;
                }
                idx[j] = 0;
                j += 1;
            }
        }
    }

    fn from_rows(d: usize, rows: &[Vec<f64>]) -> PointSet {
        PointSet::from_points(d, rows).unwrap()
    }

    #[test]
    fn corner_points() {
        let origin = from_rows(2, &[vec![0.0, 0.0]]);
        assert!((l2sq(&origin).unwrap() - 11.0 / 18.0).abs() < 1e-15);
        let far = from_rows(2, &[vec![1.0, 1.0]]);
        assert!((l2sq(&far).unwrap() - 1.0 / 9.0).abs() < 1e-15);
        let empty = from_rows(2, &[]);
        assert_eq!(l2sq(&empty), Err(DiscrepancyError::EmptyPointSet));
    }

    #[test]
    fn matches_cellwise_integration() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..50 {
            let d = rng.random_range(1..=3);
            let n = rng.random_range(1..=10);
            let pts: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..d).map(|_| rng.random::<f64>()).collect())
                .collect();
            let got = l2sq(&from_rows(d, &pts)).unwrap();
            let want = cellwise_oracle(d, &pts);
            assert!((got - want).abs() < 1e-13, "d={d} n={n} {got} vs {want}");
        }
    }

    #[test]
    fn matches_midpoint_grid_d2() {
        let pts = vec![
            vec![0.12, 0.81],
            vec![0.47, 0.33],
            vec![0.90, 0.05],
            vec![0.64, 0.58],
            vec![0.21, 0.17],
        ];
        let m = 2000;
        let h = 1.0 / m as f64;
        let mut acc = 0.0;
        for a in 0..m {
            let y1 = (a as f64 + 0.5) * h;
            for b in 0..m {
                let y2 = (b as f64 + 0.5) * h;
                let c = pts.iter().filter(|p| p[0] < y1 && p[1] < y2).count() as f64;
                let delta = c / 5.0 - y1 * y2;
                acc += delta * delta;
            }
        }
        let grid = acc * h * h;
        let got = l2sq(&from_rows(2, &pts)).unwrap();
        assert!((got - grid).abs() < 1e-5, "{got} vs {grid}");
    }

    #[test]
    fn permutation_invariant() {
        let ps = sample_iid(3, 12, RngSpec::new(4, 0)).unwrap();
        let mut rows: Vec<Vec<f64>> = ps.points().map(|p| p.to_vec()).collect();
        let base = l2sq(&ps).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..10 {
            rows.shuffle(&mut rng);
            let again = l2sq(&from_rows(3, &rows)).unwrap();
            assert!((again - base).abs() <= 2.0 * f64::EPSILON * base);
        }
    }

    #[test]
    fn analytic_iid_values() {
        assert!((iid_expected_l2sq_analytic(2, 20) - 0.006_944_444).abs() < 1e-9);
        assert!((iid_expected_l2sq_analytic(3, 3) - 0.029_321_0).abs() < 1e-7);
        for d in 1..6 {
            for n in 1..20 {
                let a = iid_expected_l2sq_analytic(d, n);
                let b = iid_expected_l2sq_analytic(d, 2 * n);
                assert!((a - 2.0 * b).abs() < 1e-16);
            }
        }
    }

    #[test]
    fn iid_estimate_matches_analytic() {
        for (d, n) in [(2, 3), (3, 7)] {
            let est = expected_l2sq(&Source::iid(d, n), 4000, 9).unwrap();
            let want = iid_expected_l2sq_analytic(d, n);
            assert!((est.mean_sq - want).abs() < 4.0 * est.std_err, "{est:?}");
            assert_eq!(est.reps, 4000);
        }
    }

    #[test]
    fn estimate_is_deterministic_and_seed_dependent() {
        let src = Source::stratified(generating_set(2, 5).unwrap());
        let a = expected_l2sq(&src, 300, 1).unwrap();
        let b = expected_l2sq(&src, 300, 1).unwrap();
        let c = expected_l2sq(&src, 300, 2).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.mean_sq, c.mean_sq);
        assert!(expected_l2sq(&src, 1, 1).is_err());
    }

    #[test]
    fn degenerate_source_is_a_sampling_error() {
        let part = Partition::new(2, vec![1.0, 1.0 + 1e-12]).unwrap();
        let err = expected_l2sq(&Source::stratified(part), 10, 0).unwrap_err();
        assert!(matches!(
            err,
            DiscrepancyError::Sampling(SamplingError::DegenerateStratum { .. })
        ));
    }
}
