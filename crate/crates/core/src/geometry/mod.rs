//! Partitions of the unit cube `[0,1]^d` by hyperplanes `x_1 + ... + x_d = r`
//! orthogonal to the main diagonal.
//!
//! A cut is stored by its *sum coordinate* `r` in `(0, d)`. The optimisers
//! work with the Euclidean distance along the diagonal instead,
//! `p = r / sqrt(d)`, see [`DiagonalCoords`].
//!
//! The volume below a cut is the CDF of the Irwin-Hall distribution (the law
//! of a sum of `d` independent uniforms), evaluated in double precision with a
//! compensated alternating binomial sum. Dimensions are capped at
//! [`MAX_DIM`] because that sum cancels catastrophically as `d` grows.

mod construct;
mod normal;
mod solve;
mod volume;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use construct::{
    generating_set, hybrid_set, hybrid_set_detailed, normal_approx_set, normal_cdf_error, HybridSet,
};
pub use normal::{normal_cdf, normal_quantile};
pub use solve::{solve_r, DEFAULT_TOL};
pub use volume::{breakpoints, slice_density, volume_neg, volume_pos, VolumeBreakpoints};

/// Largest dimension handled in double precision.
pub const MAX_DIM: usize = 12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("dimension {0} is outside the supported range 1..={MAX_DIM}")]
    Dimension(usize),
    #[error("{name} = {value} is outside {range}")]
    Domain {
        name: &'static str,
        value: f64,
        range: &'static str,
    },
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("cut {index} at r = {value} leaves the open interval (0, {d})")]
    Range { index: usize, value: f64, d: usize },
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error(
        "root solve did not reach tolerance: bracket [{lo}, {hi}], residual {residual:e}"
    )]
    NonConvergence { lo: f64, hi: f64, residual: f64 },
}

pub(crate) fn check_dim(d: usize) -> Result<(), GeometryError> {
    if (1..=MAX_DIM).contains(&d) {
        Ok(())
    } else {
        Err(GeometryError::Dimension(d))
    }
}

/// A partition of `[0,1]^d` into `N = cuts.len() + 1` slices.
///
/// Stratum `s` (0-based) is `{x : r_s <= sum(x) < r_{s+1}}` with `r_0 = 0`,
/// `r_N = d`; the last stratum is closed at `d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PartitionRepr")]
pub struct Partition {
    d: usize,
    cuts: Vec<f64>,
}

#[derive(Deserialize)]
struct PartitionRepr {
    d: usize,
    cuts: Vec<f64>,
}

impl TryFrom<PartitionRepr> for Partition {
    type Error = GeometryError;

    fn try_from(repr: PartitionRepr) -> Result<Self, Self::Error> {
        Partition::new(repr.d, repr.cuts)
    }
}

impl Partition {
    /// Validates and wraps a list of sum-coordinate cuts.
    pub fn new(d: usize, cuts: Vec<f64>) -> Result<Self, GeometryError> {
        check_dim(d)?;
        let upper = d as f64;
        for (i, &r) in cuts.iter().enumerate() {
            if !r.is_finite() || r <= 0.0 || r >= upper {
                return Err(GeometryError::Range {
                    index: i + 1,
                    value: r,
                    d,
                });
            }
        }
        if let Some(i) = cuts.windows(2).position(|w| w[0] >= w[1]) {
            return Err(GeometryError::InvalidPartition(format!(
                "cuts must be strictly increasing, but r_{} = {} >= r_{} = {}",
                i + 1,
                cuts[i],
                i + 2,
                cuts[i + 1]
            )));
        }
        let part = Partition { d, cuts };
        if let Some((s, v)) = part
            .volumes()
            .into_iter()
            .enumerate()
            .find(|&(_, v)| v <= 0.0)
        {
            return Err(GeometryError::InvalidPartition(format!(
                "stratum {s} has non-positive volume {v:e}"
            )));
        }
        Ok(part)
    }

    /// The trivial partition with a single stratum.
    pub fn whole(d: usize) -> Result<Self, GeometryError> {
        Partition::new(d, Vec::new())
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn cuts(&self) -> &[f64] {
        &self.cuts
    }

    /// Number of strata.
    pub fn strata(&self) -> usize {
        self.cuts.len() + 1
    }

    /// Lower and upper sum-coordinate bounds of stratum `s`.
    pub fn bounds(&self, s: usize) -> (f64, f64) {
        let lo = if s == 0 { 0.0 } else { self.cuts[s - 1] };
        let hi = if s == self.cuts.len() {
            self.d as f64
        } else {
            self.cuts[s]
        };
        (lo, hi)
    }

    pub fn stratum_volume(&self, s: usize) -> f64 {
        let (lo, hi) = self.bounds(s);
        slab_volume(self.d, lo, hi)
    }

    pub fn volumes(&self) -> Vec<f64> {
        (0..self.strata()).map(|s| self.stratum_volume(s)).collect()
    }

    /// Stratum index of a point with coordinate sum `sum`, using the
    /// lower-closed tie rule.
    pub fn locate(&self, sum: f64) -> usize {
        self.cuts.partition_point(|&c| c <= sum)
    }

    pub fn to_diagonal(&self) -> DiagonalCoords {
        to_diagonal(self)
    }
}

/// Volume of `{x in [0,1]^d : lo <= sum(x) <= hi}`, taking the difference on
/// whichever side of the centre keeps both terms small.
fn slab_volume(d: usize, lo: f64, hi: f64) -> f64 {
    let centre = d as f64 / 2.0;
    if lo >= centre {
        volume_pos(d, lo).unwrap_or(f64::NAN) - volume_pos(d, hi).unwrap_or(f64::NAN)
    } else {
        volume_neg(d, hi).unwrap_or(f64::NAN) - volume_neg(d, lo).unwrap_or(f64::NAN)
    }
}

/// Cut positions measured as Euclidean distance from the origin along the
/// main diagonal, `p_i = r_i / sqrt(d)`, each in `[0, sqrt(d)]`.
///
/// Unlike [`Partition`], ties are allowed: this is the optimiser's search
/// space, where coinciding cuts are representable but score as degenerate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagonalCoords {
    d: usize,
    p: Vec<f64>,
}

impl DiagonalCoords {
    pub fn new(d: usize, p: Vec<f64>) -> Result<Self, GeometryError> {
        check_dim(d)?;
        let bound = (d as f64).sqrt();
        if let Some(&v) = p.iter().find(|v| !(0.0..=bound).contains(*v)) {
            return Err(GeometryError::Domain {
                name: "p",
                value: v,
                range: "[0, sqrt(d)]",
            });
        }
        if p.windows(2).any(|w| w[0] > w[1]) {
            return Err(GeometryError::InvalidPartition(
                "diagonal coordinates must be sorted ascending".into(),
            ));
        }
        Ok(DiagonalCoords { d, p })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn values(&self) -> &[f64] {
        &self.p
    }

    pub fn into_values(self) -> Vec<f64> {
        self.p
    }

    pub fn to_partition(&self) -> Result<Partition, GeometryError> {
        from_diagonal(self)
    }
}

pub fn to_diagonal(part: &Partition) -> DiagonalCoords {
    let scale = (part.d as f64).sqrt();
    DiagonalCoords {
        d: part.d,
        p: part.cuts.iter().map(|r| r / scale).collect(),
    }
}

/// Converts back to sum coordinates. Fails when the cuts do not form a valid
/// partition (ties, cuts on the cube's corners).
pub fn from_diagonal(dc: &DiagonalCoords) -> Result<Partition, GeometryError> {
    let scale = (dc.d as f64).sqrt();
    Partition::new(dc.d, dc.p.iter().map(|p| p * scale).collect())
}

/// Berry-Esseen bound on `sup_t |F_{Z_d}(t) - Phi(t)|` for the standardised
/// sum of `d` uniforms: `C * rho / (sigma^3 * sqrt(d))` with `C = 0.4748`,
/// `sigma = 1/(2 sqrt 3)` and `rho = E|U - 1/2|^3 = 1/32`.
pub fn berry_esseen_bound(d: usize) -> f64 {
    const SHEVTSOVA_C: f64 = 0.4748;
    let inv_sigma = 2.0 * 3f64.sqrt();
    SHEVTSOVA_C * inv_sigma.powi(3) / (32.0 * (d as f64).sqrt())
}
