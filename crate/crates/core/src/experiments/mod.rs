//! Seeded numerical studies producing tabular reports.

mod comparison;
mod kde;
mod reference;
mod slices;

use std::io::{self, Write};

use serde::ser::{SerializeMap, SerializeStruct};
use serde::{Serialize, Serializer};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::discrepancy::DiscrepancyError;
use crate::format::fmt_f64;
use crate::geometry::GeometryError;
use crate::optimize::OptimizeError;

pub use comparison::{comparison_table, ComparisonOptions};
pub use kde::{kde_density, kde_summary, scott_bandwidth, KdeInput};
pub use reference::{
    reference_data, reference_pointsets_report, score_reference_pointset, ReferenceBaseline,
    ReferenceData, ReferencePointSet,
};
pub use slices::{convergence_experiment, volume_deviation_experiment};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExperimentError {
    #[error("invalid experiment parameter: {0}")]
    Parameter(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Discrepancy(#[from] DiscrepancyError),
    #[error(transparent)]
    Optimize(#[from] OptimizeError),
}

/// One table cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Real(f64),
    Text(String),
    Bool(bool),
}

impl Cell {
    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            Cell::Int(i) => Some(i as f64),
            Cell::Real(x) => Some(x),
            _ => None,
        }
    }

    fn to_text(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Real(x) => fmt_f64(*x),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
        }
    }
}

impl Serialize for Cell {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Cell::Int(i) => s.serialize_i64(*i),
            Cell::Real(x) => s.serialize_f64(*x),
            Cell::Text(t) => s.serialize_str(t),
            Cell::Bool(b) => s.serialize_bool(*b),
        }
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Real(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

/// Rows of named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    columns: Vec<String>,
    rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Table {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width must match the header");
        self.rows.push(row);
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<Cell>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Numeric values of column `name`, one per row.
    pub fn values(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.column(name)?;
        Some(
            self.rows
                .iter()
                .map(|r| r[j].as_f64().unwrap_or(f64::NAN))
                .collect(),
        )
    }

    pub fn write_csv<W: Write>(&self, out: W) -> io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::to_text))?;
        }
        w.flush()
    }
}

struct RowRef<'a>(&'a [String], &'a [Cell]);

impl Serialize for RowRef<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut m = s.serialize_map(Some(self.0.len()))?;
        for (k, v) in self.0.iter().zip(self.1) {
            m.serialize_entry(k, v)?;
        }
        m.end()
    }
}

impl Serialize for Table {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.rows.iter().map(|r| RowRef(&self.columns, r)))
    }
}

/// Result of one experiment: the per-row records, an optional summary and
/// everything needed to reproduce them.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub experiment: String,
    pub parameters: Map<String, Value>,
    pub records: Table,
    pub summary: Option<Table>,
    pub seeds: Vec<u64>,
    /// Left empty by the experiments so reports stay byte-reproducible;
    /// callers that time a run fill it in.
    pub wall_clock_secs: Option<f64>,
    pub software_version: String,
}

impl ExperimentReport {
    pub(crate) fn new(experiment: &str, parameters: Map<String, Value>, records: Table) -> Self {
        ExperimentReport {
            experiment: experiment.to_string(),
            parameters,
            records,
            summary: None,
            seeds: Vec::new(),
            wall_clock_secs: None,
            software_version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }

    /// `<experiment>_<d>d_<N>.csv`; list-valued parameters are joined with
    /// `-`.
    pub fn file_name(&self) -> String {
        let label = |keys: &[&str]| {
            keys.iter()
                .find_map(|k| self.parameters.get(*k))
                .map(|v| match v {
                    Value::Array(a) => a
                        .iter()
                        .map(|x| x.to_string())
                        .collect::<Vec<_>>()
                        .join("-"),
                    other => other.to_string(),
                })
                .unwrap_or_else(|| "all".into())
        };
        format!(
            "{}_{}d_{}.csv",
            self.experiment.replace('-', "_"),
            label(&["d", "dims"]),
            label(&["N", "Ns"])
        )
    }

    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialise");
        s.push('\n');
        s
    }
}

impl Serialize for ExperimentReport {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("ExperimentReport", 7)?;
        st.serialize_field("experiment", &self.experiment)?;
        st.serialize_field("parameters", &self.parameters)?;
        st.serialize_field("seeds", &self.seeds)?;
        st.serialize_field("software_version", &self.software_version)?;
        if let Some(t) = self.wall_clock_secs {
            st.serialize_field("wall_clock_secs", &t)?;
        }
        st.serialize_field("records", &self.records)?;
        if let Some(summary) = &self.summary {
            st.serialize_field("summary", summary)?;
        }
        st.end()
    }
}

pub(crate) fn params(pairs: Vec<(&str, Value)>) -> Map<String, Value> {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn csv_and_json_layout() {
        let mut t = Table::new(["d", "N", "value", "label", "ok"]);
        t.push(vec![2usize.into(), 4usize.into(), 0.1.into(), "a,b".into(), true.into()]);
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "d,N,value,label,ok\n2,4,0.10000000000000001,\"a,b\",true\n"
        );
        let mut r = ExperimentReport::new("demo", params(vec![("d", json!(2)), ("Ns", json!([3, 5]))]), t);
        assert_eq!(r.file_name(), "demo_2d_3-5.csv");
        let v: Value = serde_json::from_str(&r.to_json_string()).unwrap();
        assert_eq!(v["records"][0]["label"], "a,b");
        assert!(v.get("wall_clock_secs").is_none());
        r.wall_clock_secs = Some(1.5);
        let v: Value = serde_json::from_str(&r.to_json_string()).unwrap();
        assert_eq!(v["wall_clock_secs"], 1.5);
    }
}
