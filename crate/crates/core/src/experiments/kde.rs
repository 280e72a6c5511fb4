use std::f64::consts::PI;

use serde_json::json;

use super::{params, ExperimentError, ExperimentReport, Table};
use crate::geometry::DiagonalCoords;

/// A labelled set of diagonal coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct KdeInput {
    pub label: String,
    pub coords: DiagonalCoords,
}

/// Scott's rule `sigma * n^(-1/5)` with the sample standard deviation; falls
/// back to `0.1 sqrt(d)` when the spread is zero or there is a single value.
pub fn scott_bandwidth(values: &[f64], d: usize) -> f64 {
    let n = values.len();
    let fallback = 0.1 * (d as f64).sqrt();
    if n < 2 {
        return fallback;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let sd = var.sqrt();
    if sd > 0.0 {
        sd * (n as f64).powf(-0.2)
    } else {
        fallback
    }
}

/// Gaussian kernel density estimate at `x`.
pub fn kde_density(values: &[f64], bandwidth: f64, x: f64) -> f64 {
    let norm = 1.0 / (values.len() as f64 * bandwidth * (2.0 * PI).sqrt());
    norm * values
        .iter()
        .map(|v| (-0.5 * ((x - v) / bandwidth).powi(2)).exp())
        .sum::<f64>()
}

/// Density of each input set, and of all sets pooled when there are several,
/// on `grid` equally spaced points of `[0, sqrt(d)]`.
pub fn kde_summary(sets: &[KdeInput], grid: usize) -> Result<ExperimentReport, ExperimentError> {
    let first = sets
        .first()
        .ok_or_else(|| ExperimentError::Parameter("need at least one point set".into()))?;
    let d = first.coords.dim();
    if sets.iter().any(|s| s.coords.dim() != d) {
        return Err(ExperimentError::Parameter(
            "all point sets must share one dimension".into(),
        ));
    }
    if sets.iter().any(|s| s.coords.values().is_empty()) {
        return Err(ExperimentError::Parameter("point sets must be non-empty".into()));
    }
    if grid < 2 {
        return Err(ExperimentError::Parameter(format!("need a grid of at least 2 points, got {grid}")));
    }
    let bound = (d as f64).sqrt();
    let xs: Vec<f64> = (0..grid)
        .map(|k| bound * k as f64 / (grid - 1) as f64)
        .collect();

    let mut groups: Vec<(String, Vec<f64>)> = sets
        .iter()
        .map(|s| (s.label.clone(), s.coords.values().to_vec()))
        .collect();
    if sets.len() > 1 {
        let pooled = sets.iter().flat_map(|s| s.coords.values().iter().copied()).collect();
        groups.push(("pooled".into(), pooled));
    }

    let mut records = Table::new(["d", "set", "N", "bandwidth", "x", "density"]);
    for (label, values) in &groups {
        let h = scott_bandwidth(values, d);
        for &x in &xs {
            records.push(vec![
                d.into(),
                label.as_str().into(),
                (values.len() + 1).into(),
                h.into(),
                x.into(),
                kde_density(values, h, x).into(),
            ]);
        }
    }
    let labels: Vec<&str> = sets.iter().map(|s| s.label.as_str()).collect();
    Ok(ExperimentReport::new(
        "kde",
        params(vec![("d", json!(d)), ("sets", json!(labels)), ("grid", json!(grid))]),
        records,
    ))
}
