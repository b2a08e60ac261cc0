//! Run reports: JSON summary, CSV curves, matrix dumps, and atomic file output.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use oscgate_core::ComplexMatrix;
use serde_json::{json, Value};

use crate::config::ExperimentConfig;
use crate::matrix_csv::write_matrix_csv;

/// A table of numbers written as CSV with a header row.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Curve {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let fields: Vec<String> = row.iter().map(|x| format!("{x:?}")).collect();
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        out
    }

    fn to_json(&self) -> Value {
        json!({ "columns": self.columns, "rows": self.rows })
    }
}

/// A named threshold comparison; a failed check flags the whole run.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
}

impl Check {
    /// Passes when `value <= threshold`.
    pub fn at_most(name: &str, value: f64, threshold: f64) -> Self {
        Self { name: name.into(), value, threshold, passed: value <= threshold }
    }
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub config: ExperimentConfig,
    pub summary: serde_json::Map<String, Value>,
    pub points: Vec<Value>,
    pub curves: Vec<Curve>,
    pub matrices: Vec<(String, ComplexMatrix)>,
    pub checks: Vec<Check>,
    pub runtime_seconds: f64,
}

impl RunReport {
    pub fn new(config: ExperimentConfig) -> Self {
        Self {
            config,
            summary: serde_json::Map::new(),
            points: Vec::new(),
            curves: Vec::new(),
            matrices: Vec::new(),
            checks: Vec::new(),
            runtime_seconds: 0.0,
        }
    }

    pub fn failed(&self) -> bool {
        self.checks.iter().any(|c| !c.passed)
    }

    pub fn status(&self) -> &'static str {
        if self.failed() { "FAILED" } else { "OK" }
    }

    pub fn curve(&self, name: &str) -> Option<&Curve> {
        self.curves.iter().find(|c| c.name == name)
    }

    pub fn matrix(&self, name: &str) -> Option<&ComplexMatrix> {
        self.matrices.iter().find(|(n, _)| n == name).map(|(_, m)| m)
    }

    pub fn to_json(&self) -> Value {
        let checks: Vec<Value> = self
            .checks
            .iter()
            .map(|c| json!({ "name": c.name, "value": c.value, "threshold": c.threshold, "passed": c.passed }))
            .collect();
        let matrices: serde_json::Map<String, Value> = self
            .matrices
            .iter()
            .map(|(name, m)| {
                let rows: Vec<Vec<[f64; 2]>> = (0..m.nrows())
                    .map(|r| (0..m.ncols()).map(|c| [m[(r, c)].re, m[(r, c)].im]).collect())
                    .collect();
                (name.clone(), json!(rows))
            })
            .collect();
        let curves: serde_json::Map<String, Value> =
            self.curves.iter().map(|c| (c.name.clone(), c.to_json())).collect();
        json!({
            "experiment": self.config.experiment(),
            "status": self.status(),
            "config": self.config.to_json(),
            "config_text": self.config.to_text(),
            "summary": self.summary,
            "points": self.points,
            "curves": curves,
            "matrices": matrices,
            "checks": checks,
            "runtime_seconds": self.runtime_seconds,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    /// `report.json` plus one CSV per curve and matrix.
    Csv,
    /// `report.json` only, with curves and matrices embedded.
    Json,
}

/// Writes `contents` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, contents: &str) -> std::io::Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })
}

/// Writes every output file and returns their paths.
pub fn write_outputs(report: &RunReport, out: &Path, format: OutputFormat) -> std::io::Result<Vec<PathBuf>> {
    fs::create_dir_all(out)?;
    let mut written = Vec::new();
    if format == OutputFormat::Csv {
        for curve in &report.curves {
            let p = out.join(format!("{}.csv", curve.name));
            write_atomic(&p, &curve.to_csv())?;
            written.push(p);
        }
        for (name, m) in &report.matrices {
            let p = out.join(format!("matrix_{name}.csv"));
            write_atomic(&p, &write_matrix_csv(m))?;
            written.push(p);
        }
    }
    let p = out.join("report.json");
    let mut text = serde_json::to_string_pretty(&report.to_json()).expect("report serializes");
    text.push('\n');
    write_atomic(&p, &text)?;
    written.push(p);
    Ok(written)
}

/// Machine-readable error object.
pub fn error_json(kind: &str, message: &str, line: Option<usize>, field: Option<&str>) -> Value {
    json!({ "error": { "kind": kind, "message": message, "line": line, "field": field } })
}
