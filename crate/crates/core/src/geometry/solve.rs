use super::volume::{alternating_sum, breakpoints, slice_density, volume_pos};
use super::{check_dim, GeometryError};

/// Default tolerance on the volume residual of [`solve_r`].
pub const DEFAULT_TOL: f64 = 1e-12;

const BISECTION_STEPS: usize = 60;
const NEWTON_STEPS: usize = 8;

/// Offset `r` with `volume_pos(d, r) = v`.
///
/// The target is located between two integer offsets with the breakpoint
/// table, so the governing polynomial is fixed and monotone on the bracket.
/// 60 bisection steps are followed by at most 8 Newton steps on the same
/// polynomial. The solve always runs on the half of the cube where the target
/// volume is at most 1/2, which keeps tiny slice volumes accurate in relative
/// terms.
pub fn solve_r(d: usize, v: f64, tol: f64) -> Result<f64, GeometryError> {
    check_dim(d)?;
    if !(0.0..=1.0).contains(&v) {
        return Err(GeometryError::Domain {
            name: "V",
            value: v,
            range: "[0, 1]",
        });
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(GeometryError::Domain {
            name: "tol",
            value: tol,
            range: "(0, inf)",
        });
    }
    if v == 1.0 {
        return Ok(0.0);
    }
    if v == 0.0 {
        return Ok(d as f64);
    }
    let upper = d as f64;
    let (r, lo, hi) = if v >= 0.5 {
        // lower half: vol{sum <= r} = 1 - v, exact by Sterbenz
        let root = bracketed_lower(d, 1.0 - v);
        (root.value, root.lo, root.hi)
    } else {
        let root = bracketed_lower(d, v);
        (upper - root.value, upper - root.hi, upper - root.lo)
    };
    let residual = (volume_pos(d, r)? - v).abs();
    if residual <= tol {
        Ok(r)
    } else {
        Err(GeometryError::NonConvergence { lo, hi, residual })
    }
}

struct Root {
    value: f64,
    lo: f64,
    hi: f64,
}

/// Offset `s` in `[0, d/2]` with `vol{x : sum(x) <= s} = w`, for `w` in
/// `(0, 1/2]`.
///
/// The caller checks the residual; this never fails for valid `d`.
pub(crate) fn solve_lower(d: usize, w: f64) -> f64 {
    bracketed_lower(d, w).value
}

fn bracketed_lower(d: usize, w: f64) -> Root {
    debug_assert!(w > 0.0 && w <= 0.5);
    let half = d as f64 / 2.0;
    if w == 0.5 {
        return Root {
            value: half,
            lo: half,
            hi: half,
        };
    }
    // f(k) = vol{sum <= k}; pick the unit segment [k-1, k] containing w
    let bp = breakpoints(d).expect("dimension checked by caller");
    let k = bp.segment(w);
    let mut lo = (k - 1) as f64;
    let mut hi = (k as f64).min(half);
    let terms = k; // j = 0..k-1 covers every non-zero term on [k-1, k]
    let g = |s: f64| alternating_sum(d, terms, s) - w;

    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        let gm = g(mid);
        if gm == 0.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if gm < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }

    let mut best = 0.5 * (lo + hi);
    let mut best_res = g(best).abs();
    let mut s = best;
    for _ in 0..NEWTON_STEPS {
        let gs = g(s);
        let slope = slice_density(d, s);
        if gs == 0.0 || slope <= 0.0 {
            break;
        }
        let next = s - gs / slope;
        if !(lo..=hi).contains(&next) || next == s {
            break;
        }
        s = next;
        let res = g(s).abs();
        if res < best_res {
            best = s;
            best_res = res;
        }
    }

    Root {
        value: best,
        lo,
        hi,
    }
}
