use num_rational::Ratio;
use serde::Serialize;

use super::{check_dim, GeometryError};
use crate::numeric::{binomial, binomial_u64, factorial, factorial_u64, CompensatedSum};

/// `(1/d!) * sum_{j < terms} (-1)^j C(d,j) (x - j)^d`.
///
/// With `terms = floor(x) + 1` this is the Irwin-Hall CDF at `x`; with
/// `x = d - r` and `terms = k` it is the left-hand side of the degree-`d`
/// polynomial whose root gives the cut for a target upper volume.
pub(crate) fn alternating_sum(d: usize, terms: usize, x: f64) -> f64 {
    let mut acc = CompensatedSum::new();
    for j in 0..terms.min(d + 1) {
        let t = binomial(d, j) * (x - j as f64).powi(d as i32);
        acc.add(if j % 2 == 0 { t } else { -t });
    }
    acc.value() / factorial(d)
}

/// Irwin-Hall CDF for `x` in `[0, d/2]`, where every term is small.
fn lower_cdf(d: usize, x: f64) -> f64 {
    alternating_sum(d, x.floor() as usize + 1, x)
}

/// CDF of the coordinate sum at `x`, clamped outside `[0, d]`.
pub(crate) fn sum_cdf(d: usize, x: f64) -> f64 {
    let upper = d as f64;
    if x <= 0.0 {
        0.0
    } else if x >= upper {
        1.0
    } else if x <= upper / 2.0 {
        lower_cdf(d, x)
    } else {
        1.0 - lower_cdf(d, upper - x)
    }
}

/// Density of the coordinate sum (Irwin-Hall density) at `x`.
pub fn slice_density(d: usize, x: f64) -> f64 {
    let upper = d as f64;
    if x < 0.0 || x > upper {
        return 0.0;
    }
    let x = if x > upper / 2.0 { upper - x } else { x };
    if d == 1 {
        return 1.0;
    }
    let mut acc = CompensatedSum::new();
    for j in 0..=(x.floor() as usize).min(d) {
        let t = binomial(d, j) * (x - j as f64).powi(d as i32 - 1);
        acc.add(if j % 2 == 0 { t } else { -t });
    }
    acc.value() / factorial(d - 1)
}

fn check_offset(d: usize, r: f64) -> Result<(), GeometryError> {
    check_dim(d)?;
    if !(0.0..=d as f64).contains(&r) {
        return Err(GeometryError::Domain {
            name: "r",
            value: r,
            range: "[0, d]",
        });
    }
    Ok(())
}

/// Volume of `[0,1]^d ∩ {x : sum(x) <= r}`.
pub fn volume_neg(d: usize, r: f64) -> Result<f64, GeometryError> {
    check_offset(d, r)?;
    Ok(sum_cdf(d, r))
}

/// Volume of `[0,1]^d ∩ {x : sum(x) >= r}`.
///
/// Evaluated as the segment polynomial `(1/d!) sum_{j<k} (-1)^j C(d,j) (d-j-r)^d`
/// with `k = ceil(d - r)` when `r` is in the upper half of the cube, and as
/// the complement of [`volume_neg`] otherwise.
pub fn volume_pos(d: usize, r: f64) -> Result<f64, GeometryError> {
    check_offset(d, r)?;
    let upper = d as f64;
    if r >= upper / 2.0 {
        let k = ((upper - r).ceil() as usize).max(1);
        Ok(alternating_sum(d, k, upper - r))
    } else {
        Ok(1.0 - lower_cdf(d, r))
    }
}

/// Cumulative volumes `f(k) = vol{x : sum(x) <= k}` at the integer offsets
/// `k = 0..=d`, kept both exactly and as floats.
///
/// `f(k)` is also the upper volume at `r = d - k`, so it selects which
/// polynomial branch governs a target volume.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VolumeBreakpoints {
    d: usize,
    f: Vec<f64>,
    #[serde(skip)]
    exact: Vec<Ratio<i64>>,
}

impl VolumeBreakpoints {
    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn values(&self) -> &[f64] {
        &self.f
    }

    pub fn exact(&self) -> &[Ratio<i64>] {
        &self.exact
    }

    /// Smallest `k` in `1..=d` with `f(k-1) <= v <= f(k)`.
    pub fn segment(&self, v: f64) -> usize {
        let k = self.f.partition_point(|&fk| fk < v);
        k.clamp(1, self.d)
    }
}

pub fn breakpoints(d: usize) -> Result<VolumeBreakpoints, GeometryError> {
    check_dim(d)?;
    let denom = factorial_u64(d) as i64;
    let exact: Vec<Ratio<i64>> = (0..=d)
        .map(|k| {
            let num: i64 = (0..k)
                .map(|j| {
                    let t = binomial_u64(d, j) as i64 * ((k - j) as i64).pow(d as u32);
                    if j % 2 == 0 {
                        t
                    } else {
                        -t
                    }
                })
                .sum();
            Ratio::new(num, denom)
        })
        .collect();
    let f = exact
        .iter()
        .map(|q| *q.numer() as f64 / *q.denom() as f64)
        .collect();
    Ok(VolumeBreakpoints { d, f, exact })
}
