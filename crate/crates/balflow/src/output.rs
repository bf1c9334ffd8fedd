//! CSV traces, field dumps and the JSON run manifest.

use std::fs::File;
use std::path::{Path, PathBuf};

use balflow_core::{Error, Geometry, TraceSink};
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::{io_error, HarnessError};

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";

/// Writes each row to disk before returning, so a failing run leaves every
/// recorded row behind.
pub struct CsvSink {
    path: PathBuf,
    writer: csv::Writer<File>,
    width: usize,
    last_t: Option<f64>,
    rows: usize,
}

impl CsvSink {
    pub fn create(path: &Path) -> Result<Self, HarnessError> {
        let writer = csv::Writer::from_path(path).map_err(|e| HarnessError::Io {
            path: path.to_path_buf(),
            source: e.into(),
        })?;
        Ok(Self { path: path.to_path_buf(), writer, width: 0, last_t: None, rows: 0 })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    fn fail(&self, e: impl std::fmt::Display) -> Error {
        Error::Sink(format!("{}: {e}", self.path.display()))
    }
}

impl TraceSink for CsvSink {
    fn begin(&mut self, columns: &[&str]) -> balflow_core::Result<()> {
        if columns.first() != Some(&"t") {
            return Err(self.fail("first trace column must be `t`"));
        }
        if self.width != 0 {
            return Err(self.fail("schema already written"));
        }
        self.width = columns.len();
        self.writer.write_record(columns).map_err(|e| self.fail(e))?;
        self.writer.flush().map_err(|e| self.fail(e))
    }

    fn record(&mut self, row: &[f64]) -> balflow_core::Result<()> {
        if row.len() != self.width {
            return Err(self.fail(format!("row has {} values, schema has {}", row.len(), self.width)));
        }
        if let Some(prev) = self.last_t {
            if !(row[0] > prev) {
                return Err(self.fail(format!("non-increasing time {} after {prev}", row[0])));
            }
        }
        self.last_t = Some(row[0]);
        self.writer.write_record(row.iter().map(|v| format_value(*v))).map_err(|e| self.fail(e))?;
        self.writer.flush().map_err(|e| self.fail(e))?;
        self.rows += 1;
        Ok(())
    }
}

/// Shortest round-trip decimal, in exponent form outside `[1e-5, 1e16)`.
pub fn format_value(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || !a.is_finite() || (1e-5..1e16).contains(&a) {
        v.to_string()
    } else {
        format!("{v:e}")
    }
}

/// Writes a table with a header row; values go through [`format_value`].
pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<(), HarnessError> {
    let to_io = |e: csv::Error| HarnessError::Io { path: path.to_path_buf(), source: e.into() };
    let mut w = csv::Writer::from_path(path).map_err(to_io)?;
    w.write_record(header).map_err(to_io)?;
    for row in rows {
        w.write_record(row.iter().map(|v| format_value(*v))).map_err(to_io)?;
    }
    w.flush().map_err(io_error(path))
}

/// Grid values as `node, a, b, <name>`, where `(a, b)` is `(cos θ, φ)` on
/// the sphere and `(x, y)` on the torus.
pub fn write_field(path: &Path, geom: &Geometry, name: &str, values: &[f64]) -> Result<(), HarnessError> {
    let rows: Vec<Vec<f64>> = values
        .iter()
        .enumerate()
        .map(|(p, v)| {
            let (a, b) = geom.point(p);
            vec![p as f64, a, b, *v]
        })
        .collect();
    write_table(path, &["node", "a", "b", name], &rows)
}

#[derive(Debug, Clone, Serialize)]
pub struct OutputFile {
    pub name: String,
    pub rows: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub run_id: String,
    pub command: String,
    pub config_hash: String,
    pub code_version: String,
    pub seed: u64,
    pub wall_time_seconds: f64,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub files: Vec<OutputFile>,
    pub summary: serde_json::Value,
}

impl Manifest {
    /// Deterministic id derived from the command and the config hash.
    pub fn run_id(command: &str, config: &ExperimentConfig) -> String {
        use sha2::{Digest, Sha256};
        let digest = Sha256::digest(format!("{command}\n{}", config.hash()).as_bytes());
        format!("{digest:x}")[..16].to_string()
    }

    pub fn write(&self, dir: &Path) -> Result<(), HarnessError> {
        let path = dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(&path, text + "\n").map_err(io_error(&path))
    }
}
