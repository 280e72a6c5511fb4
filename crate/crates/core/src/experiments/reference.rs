//! Optimised cut positions shipped with the crate, and their rescoring.

use std::sync::OnceLock;

use rayon::prelude::*;
use serde::Deserialize;
use serde_json::json;

use super::{params, ExperimentError, ExperimentReport, Table};
use crate::discrepancy::{expected_l2sq, DiscrepancyEstimate, Source};
use crate::geometry::{from_diagonal, DiagonalCoords};
use crate::sampling::derive_seed;

const DATA: &str = include_str!("../../data/reference_pointsets.json");

/// Listed values carry six decimals, so `sqrt(d)` may appear rounded up.
const ROUNDING_SLACK: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct ReferenceBaseline {
    pub d: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub iid: f64,
    pub equivolume: f64,
    pub cma: f64,
    pub ngopt: f64,
    pub es: f64,
}

impl ReferenceBaseline {
    pub fn for_optimizer(&self, optimizer: &str) -> Option<f64> {
        match optimizer {
            "cma" => Some(self.cma),
            "ngopt" => Some(self.ngopt),
            "es" => Some(self.es),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct ReferencePointSet {
    pub d: usize,
    pub optimizer: String,
    #[serde(rename = "N")]
    pub n: usize,
    /// The N printed next to the set, kept verbatim.
    pub row_label: String,
    pub p: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct ReferenceData {
    pub description: String,
    pub repetitions: usize,
    pub discrepancies: Vec<ReferenceBaseline>,
    pub pointsets: Vec<ReferencePointSet>,
}

impl ReferenceData {
    pub fn baseline(&self, d: usize, n: usize) -> Option<&ReferenceBaseline> {
        self.discrepancies.iter().find(|b| b.d == d && b.n == n)
    }

    /// Reported discrepancy of a listed point set.
    pub fn reported(&self, set: &ReferencePointSet) -> Option<f64> {
        self.baseline(set.d, set.n)?.for_optimizer(&set.optimizer)
    }
}

pub fn reference_data() -> &'static ReferenceData {
    static CELL: OnceLock<ReferenceData> = OnceLock::new();
    CELL.get_or_init(|| serde_json::from_str(DATA).expect("embedded reference data parses"))
}

/// Expected squared discrepancy of the stratification given by diagonal
/// coordinates `p`. Values within the listing's rounding above `sqrt(d)` are
/// clamped to `sqrt(d)`; a cut there leaves an empty stratum and is reported
/// as a geometry error.
pub fn score_reference_pointset(
    d: usize,
    p: &[f64],
    reps: usize,
    master_seed: u64,
) -> Result<DiscrepancyEstimate, ExperimentError> {
    let bound = (d as f64).sqrt();
    let clamped: Vec<f64> = p
        .iter()
        .map(|&v| if v > bound && v <= bound + ROUNDING_SLACK { bound } else { v })
        .collect();
    let coords = DiagonalCoords::new(d, clamped)?;
    let part = from_diagonal(&coords)?;
    Ok(expected_l2sq(&Source::stratified(part), reps, master_seed)?)
}

/// Rescoring of every shipped point set matching the filters. `z` compares
/// our estimate with the listed value using `sqrt(2)` times our standard
/// error, i.e. assuming the listed value carries an error of the same size.
pub fn reference_pointsets_report(
    dims: Option<&[usize]>,
    max_n: Option<usize>,
    reps: usize,
    master_seed: u64,
) -> Result<ExperimentReport, ExperimentError> {
    let data = reference_data();
    let sets: Vec<(usize, &ReferencePointSet)> = data
        .pointsets
        .iter()
        .enumerate()
        .filter(|(_, s)| dims.is_none_or(|ds| ds.contains(&s.d)))
        .filter(|(_, s)| max_n.is_none_or(|m| s.n <= m))
        .collect();
    if sets.is_empty() {
        return Err(ExperimentError::Parameter(
            "no reference point set matches the filters".into(),
        ));
    }
    let scores: Vec<Result<DiscrepancyEstimate, ExperimentError>> = sets
        .par_iter()
        .map(|(k, s)| score_reference_pointset(s.d, &s.p, reps, derive_seed(master_seed, *k as u64)))
        .collect();

    let mut records = Table::new([
        "d",
        "N",
        "row_label",
        "optimizer",
        "reported",
        "mean_sq",
        "std_err",
        "z",
        "within_4se",
        "scorable",
        "note",
    ]);
    let mut seeds = Vec::with_capacity(sets.len());
    for ((k, s), score) in sets.iter().zip(scores) {
        seeds.push(derive_seed(master_seed, *k as u64));
        let reported = data.reported(s).unwrap_or(f64::NAN);
        let (mean, se, note) = match score {
            Ok(e) => (e.mean_sq, e.std_err, String::new()),
            Err(e) => (f64::NAN, f64::NAN, e.to_string()),
        };
        let z = (mean - reported) / (2f64.sqrt() * se);
        records.push(vec![
            s.d.into(),
            s.n.into(),
            s.row_label.as_str().into(),
            s.optimizer.as_str().into(),
            reported.into(),
            mean.into(),
            se.into(),
            z.into(),
            (z.abs() <= 4.0).into(),
            mean.is_finite().into(),
            note.into(),
        ]);
    }
    let mut report = ExperimentReport::new(
        "reference-pointsets",
        params(vec![
            ("dims", dims.map_or(json!("all"), |d| json!(d))),
            ("max_N", max_n.map_or(json!(null), |m| json!(m))),
            ("reps", json!(reps)),
            ("seed", json!(master_seed)),
        ]),
        records,
    );
    report.seeds = seeds;
    Ok(report)
}
