//! Metric reports and their CSV / JSON export.
//!
//! Every number leaving the crate is rounded to 9 significant digits when the
//! metric is created, so a report read back from JSON compares equal to the
//! one written, and CSV output is stable across platforms.

use std::fmt;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::protocol::OverheadBits;
use crate::sim::MeanCi;

/// Bumped whenever a field is added, removed or renamed.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Unit {
    Slots,
    Ms,
    Seconds,
    Probability,
    Bits,
    /// Multiples of the per-transmission energy `E0`.
    E0,
    /// Fraction of a device's storage capacity.
    Capacity,
    Count,
    Mse,
    Ratio,
}

impl Unit {
    pub fn as_str(self) -> &'static str {
        match self {
            Unit::Slots => "slots",
            Unit::Ms => "ms",
            Unit::Seconds => "s",
            Unit::Probability => "probability",
            Unit::Bits => "bits",
            Unit::E0 => "E0",
            Unit::Capacity => "capacity",
            Unit::Count => "count",
            Unit::Mse => "mse",
            Unit::Ratio => "ratio",
        }
    }
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Rounds to 9 significant digits. Non-finite values pass through.
pub fn round_sig9(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.8e}").parse().expect("formatted float parses")
}

/// Shortest decimal text of `round_sig9(x)`.
pub fn fmt_sig9(x: f64) -> String {
    format!("{}", round_sig9(x))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    pub name: String,
    pub value: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub unit: Unit,
    /// Value is a lower bound: the event it measures never happened
    /// within the horizon.
    pub censored: bool,
}

impl Metric {
    pub fn point(name: impl Into<String>, value: f64, unit: Unit) -> Self {
        let v = round_sig9(value);
        Self {
            name: name.into(),
            value: v,
            ci_low: v,
            ci_high: v,
            unit,
            censored: false,
        }
    }

    pub fn censored(name: impl Into<String>, bound: f64, unit: Unit) -> Self {
        Self {
            censored: true,
            ..Self::point(name, bound, unit)
        }
    }

    pub fn with_ci(name: impl Into<String>, ci: MeanCi, unit: Unit, censored: bool) -> Self {
        Self {
            name: name.into(),
            value: round_sig9(ci.mean),
            ci_low: round_sig9(ci.low()),
            ci_high: round_sig9(ci.high()),
            unit,
            censored,
        }
    }
}

/// Metrics of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub schema_version: u32,
    pub scenario: String,
    pub seed: u64,
    pub horizon: u64,
    /// The scenario configuration the run used.
    pub config: serde_json::Value,
    pub metrics: Vec<Metric>,
    pub overhead: OverheadBits,
}

impl MetricsReport {
    pub fn new(scenario: &str, seed: u64, horizon: u64, config: serde_json::Value) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            scenario: scenario.to_string(),
            seed,
            horizon,
            config,
            metrics: Vec::new(),
            overhead: OverheadBits::default(),
        }
    }

    pub fn push(&mut self, metric: Metric) {
        debug_assert!(self.get(&metric.name).is_none(), "duplicate metric {}", metric.name);
        self.metrics.push(metric);
    }

    pub fn get(&self, name: &str) -> Option<&Metric> {
        self.metrics.iter().find(|m| m.name == name)
    }

    /// Value of metric `name`; panics if the scenario does not report it.
    pub fn value(&self, name: &str) -> f64 {
        match self.get(name) {
            Some(m) => m.value,
            None => panic!("report for `{}` has no metric `{name}`", self.scenario),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    /// One row per metric: name, value, ci_low, ci_high, unit, censored.
    pub fn metrics_table(&self) -> Table {
        let mut t = Table::new(&["metric", "value", "ci_low", "ci_high", "unit", "censored"]);
        for m in &self.metrics {
            t.push(vec![
                Cell::text(&m.name),
                Cell::num(m.value),
                Cell::num(m.ci_low),
                Cell::num(m.ci_high),
                Cell::text(m.unit.as_str()),
                Cell::Bool(m.censored),
            ]);
        }
        t
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Bool(bool),
    Text(String),
}

impl Cell {
    pub fn num(x: f64) -> Self {
        Cell::Num(round_sig9(x))
    }

    pub fn text(s: &str) -> Self {
        Cell::Text(s.to_string())
    }

    fn render(&self) -> String {
        match self {
            Cell::Num(x) => fmt_sig9(*x),
            Cell::Int(n) => n.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

/// Column-ordered table, the unit of CSV output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width must match the header");
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render)).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
    }

    pub fn write_csv(&self, path: &Path) -> io::Result<()> {
        std::fs::write(path, self.to_csv())
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Fixed-width text rendering for terminals.
    pub fn render_text(&self) -> String {
        let cells: Vec<Vec<String>> = self.rows.iter().map(|r| r.iter().map(Cell::render).collect()).collect();
        let widths: Vec<usize> = (0..self.columns.len())
            .map(|i| cells.iter().map(|r| r[i].len()).chain([self.columns[i].len()]).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        let line = |out: &mut String, items: &[String]| {
            let padded: Vec<String> = items.iter().zip(&widths).map(|(s, w)| format!("{s:>w$}")).collect();
            out.push_str(padded.join("  ").trim_end());
            out.push('\n');
        };
        line(&mut out, &self.columns);
        for r in &cells {
            line(&mut out, r);
        }
        out
    }
}
