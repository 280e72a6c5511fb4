use super::normal::normal_quantile;
use super::solve::solve_lower;
use super::volume::sum_cdf;
use super::{check_dim, GeometryError, Partition};
use crate::numeric::factorial;

fn check_strata(n: usize, min: usize) -> Result<(), GeometryError> {
    if n < min {
        return Err(GeometryError::Parameter(format!(
            "number of strata must be at least {min}, got {n}"
        )));
    }
    Ok(())
}

/// Builds the full cut list from the lower half `r_1..r_{floor((N-1)/2)}`,
/// putting `d/2` in the middle for even `N` and mirroring `r_{N-i} = d - r_i`.
fn mirror(d: usize, n: usize, lower: Vec<f64>) -> Vec<f64> {
    let upper = d as f64;
    let mut cuts = lower;
    let lower_len = cuts.len();
    if n.is_multiple_of(2) {
        cuts.push(upper / 2.0);
    }
    for i in (0..lower_len).rev() {
        cuts.push(upper - cuts[i]);
    }
    debug_assert_eq!(cuts.len(), n - 1);
    cuts
}

fn lower_count(n: usize) -> usize {
    (n - 1) / 2
}

/// Equivolume generating set: `r_i` with `vol{sum(x) >= r_i} = 1 - i/N`.
///
/// For `d = 2` this reproduces `sqrt(2i/N)` and `2 - sqrt(2i/N)`.
pub fn generating_set(d: usize, n: usize) -> Result<Partition, GeometryError> {
    check_dim(d)?;
    check_strata(n, 1)?;
    let lower = (1..=lower_count(n))
        .map(|i| solve_lower(d, i as f64 / n as f64))
        .collect();
    let cuts = mirror(d, n, lower);
    let part = Partition::new(d, cuts)?;
    // residual check against the tolerance the solver promises
    let target = 1.0 / n as f64;
    for (s, v) in part.volumes().into_iter().enumerate() {
        if (v - target).abs() > 1e-10 {
            let (lo, hi) = part.bounds(s);
            return Err(GeometryError::NonConvergence {
                lo,
                hi,
                residual: (v - target).abs(),
            });
        }
    }
    Ok(part)
}

fn normal_cut(d: usize, q: f64) -> f64 {
    let df = d as f64;
    df / 2.0 + df.sqrt() / (2.0 * 3f64.sqrt()) * q
}

/// Normal approximation of the generating set:
/// `r_i = d/2 + sqrt(d)/(2 sqrt 3) * Phi^{-1}(i/N)`.
///
/// Cuts that fall outside `(0, d)` are reported as a range error rather than
/// clamped.
pub fn normal_approx_set(d: usize, n: usize) -> Result<Partition, GeometryError> {
    check_dim(d)?;
    if d < 2 {
        return Err(GeometryError::Parameter(
            "the normal approximation needs d >= 2".into(),
        ));
    }
    check_strata(n, 2)?;
    let lower: Vec<f64> = (1..=lower_count(n))
        .map(|i| normal_cut(d, normal_quantile(i as f64 / n as f64)))
        .collect();
    if let Some((i, &r)) = lower.iter().enumerate().find(|(_, &r)| r <= 0.0) {
        return Err(GeometryError::Range {
            index: i + 1,
            value: r,
            d,
        });
    }
    Partition::new(d, mirror(d, n, lower))
}

/// Hybrid cut list together with a flag per cut telling whether it came from
/// the exact volume equation (`true`) or the normal approximation.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridSet {
    pub partition: Partition,
    pub exact: Vec<bool>,
}

pub fn hybrid_set(d: usize, n: usize) -> Result<Partition, GeometryError> {
    hybrid_set_detailed(d, n).map(|h| h.partition)
}

/// Normal approximation in the body of the cube, exact cuts in the two
/// extreme unit segments.
///
/// A target lower volume `i/N <= 1/d!` lies in the corner simplex, where the
/// cut has the closed form `r = (d! i/N)^(1/d)`; the upper segment follows by
/// symmetry. Because the normal quantile undershoots the exact cut in the
/// tails, the first approximate cut can land below the last exact one once
/// `N` is large compared to `d!`. The exact region is then widened cut by cut
/// (solving the volume equation) until the list is strictly increasing.
pub fn hybrid_set_detailed(d: usize, n: usize) -> Result<HybridSet, GeometryError> {
    check_dim(d)?;
    if d < 2 {
        return Err(GeometryError::Parameter(
            "the hybrid construction needs d >= 2".into(),
        ));
    }
    check_strata(n, 2)?;
    let corner = 1.0 / factorial(d);
    let half = lower_count(n);
    let mut lower = Vec::with_capacity(half);
    let mut exact = Vec::with_capacity(half);
    for i in 1..=half {
        let w = i as f64 / n as f64;
        if w <= corner {
            lower.push((factorial(d) * w).powf(1.0 / d as f64));
            exact.push(true);
        } else {
            lower.push(normal_cut(d, normal_quantile(w)));
            exact.push(false);
        }
    }
    let mut m = exact.iter().take_while(|&&e| e).count();
    if m > 0 {
        while m < half && lower[m] <= lower[m - 1] {
            lower[m] = solve_lower(d, (m + 1) as f64 / n as f64);
            exact[m] = true;
            m += 1;
        }
    }
    if let Some((i, &r)) = lower.iter().enumerate().find(|(_, &r)| r <= 0.0) {
        return Err(GeometryError::Range {
            index: i + 1,
            value: r,
            d,
        });
    }
    let mut flags = exact.clone();
    if n.is_multiple_of(2) {
        flags.push(false);
    }
    flags.extend(exact.iter().rev());
    let partition = Partition::new(d, mirror(d, n, lower))?;
    Ok(HybridSet {
        partition,
        exact: flags,
    })
}

/// `|vol{sum <= r} - Phi(2 sqrt(3d) (r/d - 1/2))|`: the error of the normal
/// approximation to the slice volume below `r`.
pub fn normal_cdf_error(d: usize, r: f64) -> f64 {
    let df = d as f64;
    let z = 2.0 * (3.0 * df).sqrt() * (r / df - 0.5);
    (sum_cdf(d, r) - super::normal::normal_cdf(z)).abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{normal_cdf, volume_neg};

    #[test]
    fn square_closed_form_n6() {
        let p = generating_set(2, 6).unwrap();
        let third = (1.0f64 / 3.0).sqrt();
        let two_thirds = (2.0f64 / 3.0).sqrt();
        let expected = [third, two_thirds, 1.0, 2.0 - two_thirds, 2.0 - third];
        assert_eq!(p.cuts().len(), 5);
        for (a, b) in p.cuts().iter().zip(expected) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn single_stratum_has_no_cuts() {
        for d in 1..=12 {
            let p = generating_set(d, 1).unwrap();
            assert!(p.cuts().is_empty());
            assert_eq!(p.volumes(), vec![1.0]);
        }
        assert!(generating_set(3, 0).is_err());
    }

    #[test]
    fn equivolume_d3_n4() {
        let p = generating_set(3, 4).unwrap();
        for v in p.volumes() {
            assert!((v - 0.25).abs() < 1e-10);
        }
        let c = p.cuts();
        assert!((c[0] + c[2] - 3.0).abs() < 1e-10);
        assert_eq!(c[1], 1.5);
    }

    #[test]
    fn generating_set_is_symmetric() {
        for d in 1..=12 {
            for n in [2, 3, 7, 10, 33] {
                let c = generating_set(d, n).unwrap().cuts().to_vec();
                for i in 0..c.len() {
                    assert!((c[i] + c[c.len() - 1 - i] - d as f64).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn normal_set_examples() {
        for d in 2..=12 {
            let p = normal_approx_set(d, 2).unwrap();
            assert_eq!(p.cuts(), &[d as f64 / 2.0]);
        }
        let p = normal_approx_set(5, 100).unwrap();
        let r84 = p.cuts()[83];
        let expected = 2.5 + 5f64.sqrt() / (2.0 * 3f64.sqrt()) * 0.994_457_883_209_753;
        assert!((r84 - expected).abs() < 1e-12, "{r84} vs {expected}");
        let c = p.cuts();
        for i in 0..c.len() {
            assert!((c[i] + c[c.len() - 1 - i] - 5.0).abs() < 1e-14);
        }
    }

    #[test]
    fn normal_set_range_error() {
        // d = 2: r_1 = 1 + Phi^{-1}(1/N)/sqrt(6) <= 0 once N >= 140
        assert!(normal_approx_set(2, 100).is_ok());
        assert!(matches!(
            normal_approx_set(2, 200),
            Err(GeometryError::Range { index: 1, .. })
        ));
        assert!(normal_approx_set(1, 4).is_err());
        assert!(normal_approx_set(3, 1).is_err());
    }

    #[test]
    fn hybrid_examples() {
        let h = hybrid_set(5, 10_000).unwrap();
        assert!((h.cuts()[0] - (120.0f64 / 10_000.0).powf(0.2)).abs() < 1e-15);
        for d in 2..=12 {
            assert_eq!(hybrid_set(d, 2).unwrap().cuts(), &[d as f64 / 2.0]);
        }
        // 1/100 > 1/5! so nothing lands in the corner simplex
        let h = hybrid_set_detailed(5, 100).unwrap();
        assert!(h.exact.iter().all(|e| !e));
        assert_eq!(h.partition, normal_approx_set(5, 100).unwrap());
    }

    #[test]
    fn hybrid_seams_are_repaired() {
        for (d, n) in [(5, 1000), (5, 10_000), (6, 10_000), (3, 1000), (4, 5000)] {
            let h = hybrid_set_detailed(d, n).unwrap();
            let c = h.partition.cuts();
            assert!(c.windows(2).all(|w| w[0] < w[1]), "d={d} n={n}");
            for i in 0..c.len() {
                assert!((c[i] + c[c.len() - 1 - i] - d as f64).abs() < 1e-10);
            }
            // the exact region is a prefix and a suffix
            let k = h.exact.iter().take_while(|&&e| e).count();
            assert!(h.exact[k..c.len() - k].iter().all(|e| !e));
            for i in 0..k {
                let want = (i + 1) as f64 / n as f64;
                let got = volume_neg(d, c[i]).unwrap();
                assert!((got - want).abs() < 1e-12, "d={d} n={n} i={i}");
            }
        }
        // (5, 10000): closed form up to i = 83, widened beyond
        let h = hybrid_set_detailed(5, 10_000).unwrap();
        assert!(h.exact[82]);
        assert!(h.exact[83]);
    }

    #[test]
    fn hybrid_d2_is_exact() {
        // 1/2! = 1/2 so every lower cut is in the corner triangle
        for n in [3, 10, 200, 1001] {
            let h = hybrid_set(2, n).unwrap();
            let g = generating_set(2, n).unwrap();
            for (a, b) in h.cuts().iter().zip(g.cuts()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn normal_error_is_zero_at_centre() {
        assert_eq!(normal_cdf_error(2, 1.0), 0.0);
        let r = 1.3;
        let z = 2.0 * 6f64.sqrt() * (r / 2.0 - 0.5);
        assert!((normal_cdf_error(2, r) - (volume_neg(2, r).unwrap() - normal_cdf(z)).abs()).abs() < 1e-16);
    }
}
