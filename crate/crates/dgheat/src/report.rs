//! Tabulated experiment output: a fixed-order CSV table plus a JSON summary
//! with assertion verdicts. Emission is byte-deterministic for a fixed seed:
//! row order is fixed by the drivers, floats are written with Rust's
//! shortest-round-trip formatting, and no hash-ordered containers are
//! involved.

use crate::error::Result;
use serde::Serialize;
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Str(String),
    Int(i64),
    Float(f64),
    Bool(bool),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Str(s) => {
                if s.contains(',') || s.contains('"') || s.contains('\n') {
                    format!("\"{}\"", s.replace('"', "\"\""))
                } else {
                    s.clone()
                }
            }
            Cell::Int(i) => i.to_string(),
            Cell::Float(v) => format!("{v}"),
            Cell::Bool(b) => b.to_string(),
        }
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Str(s.to_string())
    }
}
impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Str(s)
    }
}
impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}
impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}
impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}
impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

/// One checked claim with its measured value.
#[derive(Debug, Clone, Serialize)]
pub struct Assertion {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub bound: f64,
    pub detail: String,
}

impl Assertion {
    pub fn le(name: impl Into<String>, value: f64, bound: f64, detail: impl Into<String>) -> Self {
        Assertion {
            name: name.into(),
            passed: value <= bound,
            value,
            bound,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub experiment: String,
    /// Full parameter/metadata record: mesh-condition constants, tolerances,
    /// seed, grids.
    pub metadata: serde_json::Map<String, serde_json::Value>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub assertions: Vec<Assertion>,
}

impl ExperimentReport {
    pub fn new(experiment: &str, columns: &[&str]) -> Self {
        ExperimentReport {
            experiment: experiment.to_string(),
            metadata: serde_json::Map::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            assertions: Vec::new(),
        }
    }

    pub fn meta(&mut self, key: &str, value: impl Into<serde_json::Value>) {
        self.metadata.insert(key.to_string(), value.into());
    }

    pub fn push_row(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row arity mismatch");
        self.rows.push(row);
    }

    pub fn all_passed(&self) -> bool {
        self.assertions.iter().all(|a| a.passed)
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(Cell::csv).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json_string(&self) -> String {
        #[derive(Serialize)]
        struct Summary<'a> {
            experiment: &'a str,
            metadata: &'a serde_json::Map<String, serde_json::Value>,
            rows: usize,
            all_passed: bool,
            assertions: &'a [Assertion],
        }
        serde_json::to_string_pretty(&Summary {
            experiment: &self.experiment,
            metadata: &self.metadata,
            rows: self.rows.len(),
            all_passed: self.all_passed(),
            assertions: &self.assertions,
        })
        .expect("report serialization")
    }

    /// Write `<base>.csv` and `<base>.json`; returns the paths written.
    pub fn emit(&self, base: &Path) -> Result<(PathBuf, PathBuf)> {
        if let Some(parent) = base.parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent)?;
            }
        }
        let csv_path = base.with_extension("csv");
        let json_path = base.with_extension("json");
        let mut csv = std::fs::File::create(&csv_path)?;
        csv.write_all(self.to_csv_string().as_bytes())?;
        let mut json = std::fs::File::create(&json_path)?;
        json.write_all(self.to_json_string().as_bytes())?;
        Ok((csv_path, json_path))
    }
}
