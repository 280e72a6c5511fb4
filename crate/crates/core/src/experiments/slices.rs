use rayon::prelude::*;
use serde_json::json;

use super::{params, Cell, ExperimentError, ExperimentReport, Table};
use crate::geometry::{
    berry_esseen_bound, check_dim, generating_set, normal_approx_set, normal_cdf_error,
};
use crate::numeric::factorial;

/// Error of the normal approximation at the exact equivolume cuts:
/// `|vol{sum <= r_i} - Phi(2 sqrt(3d) (r_i/d - 1/2))|` for every `i`, with a
/// per-dimension summary of the largest error against the Berry-Esseen
/// bound.
pub fn convergence_experiment(dims: &[usize], n: usize) -> Result<ExperimentReport, ExperimentError> {
    if n < 2 {
        return Err(ExperimentError::Parameter(format!("need N >= 2, got {n}")));
    }
    if dims.is_empty() {
        return Err(ExperimentError::Parameter("need at least one dimension".into()));
    }
    for &d in dims {
        check_dim(d)?;
    }
    // (i, r_i, error at r_i) per dimension
    type Rows = Vec<(usize, f64, f64)>;
    let per_dim: Vec<Result<Rows, ExperimentError>> = dims
        .par_iter()
        .map(|&d| {
            let part = generating_set(d, n)?;
            Ok(part
                .cuts()
                .iter()
                .enumerate()
                .map(|(i, &r)| (i + 1, r, normal_cdf_error(d, r)))
                .collect())
        })
        .collect();

    let mut records = Table::new(["d", "N", "i", "r", "error"]);
    let mut summary = Table::new(["d", "N", "sup_error", "argmax_i", "berry_esseen_bound"]);
    for (&d, rows) in dims.iter().zip(per_dim) {
        let rows = rows?;
        let mut sup = (0usize, 0.0f64);
        for &(i, r, err) in &rows {
            records.push(vec![d.into(), n.into(), i.into(), r.into(), err.into()]);
            if err > sup.1 {
                sup = (i, err);
            }
        }
        summary.push(vec![
            d.into(),
            n.into(),
            sup.1.into(),
            sup.0.into(),
            berry_esseen_bound(d).into(),
        ]);
    }
    let mut report = ExperimentReport::new(
        "convergence",
        params(vec![("dims", json!(dims)), ("N", json!(n))]),
        records,
    );
    report.summary = Some(summary);
    Ok(report)
}

/// Index range `(first, last)` (1-based) of slices outside the two extreme
/// unit segments: `ceil(N/d!)` and `N - ceil(N/d!)`.
pub(crate) fn interior_range(d: usize, n: usize) -> (usize, usize) {
    let k = (n as f64 / factorial(d)).ceil() as usize;
    (k, n - k)
}

/// Per-slice volume of the normal-approximation partition and its deviation
/// from `1/N`.
pub fn volume_deviation_experiment(
    d: usize,
    ns: &[usize],
) -> Result<ExperimentReport, ExperimentError> {
    if ns.is_empty() {
        return Err(ExperimentError::Parameter("need at least one N".into()));
    }
    let mut records = Table::new([
        "d",
        "N",
        "i",
        "volume",
        "deviation",
        "relative_deviation",
        "interior",
    ]);
    let mut summary = Table::new([
        "d",
        "N",
        "first_interior",
        "last_interior",
        "max_relative_interior",
        "max_relative_all",
    ]);
    for &n in ns {
        let part = normal_approx_set(d, n)?;
        let target = 1.0 / n as f64;
        let (first, last) = interior_range(d, n);
        let mut max_in = 0.0f64;
        let mut max_all = 0.0f64;
        for (s, v) in part.volumes().into_iter().enumerate() {
            let i = s + 1;
            let dev = v - target;
            let rel = dev / target;
            let interior = (first..=last).contains(&i);
            if interior {
                max_in = max_in.max(rel.abs());
            }
            max_all = max_all.max(rel.abs());
            records.push(vec![
                d.into(),
                n.into(),
                i.into(),
                v.into(),
                dev.into(),
                rel.into(),
                Cell::Bool(interior),
            ]);
        }
        summary.push(vec![
            d.into(),
            n.into(),
            first.into(),
            last.into(),
            max_in.into(),
            max_all.into(),
        ]);
    }
    let mut report = ExperimentReport::new(
        "volume-deviation",
        params(vec![("d", json!(d)), ("Ns", json!(ns))]),
        records,
    );
    report.summary = Some(summary);
    Ok(report)
}
