//! Time-indexed diagnostic records.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Receives trace rows as a flow advances.
///
/// Rows arrive in strictly increasing `t`; the first column of the schema is
/// always `t`. A sink that persists rows should do so before returning, so
/// that a later numerical failure cannot lose them.
pub trait TraceSink {
    fn begin(&mut self, columns: &[&str]) -> Result<()>;
    fn record(&mut self, row: &[f64]) -> Result<()>;
}

/// In-memory trace: a column schema and rows.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FlowTrace {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl FlowTrace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// All values of a named column.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.column_index(name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    pub fn last(&self) -> Option<&[f64]> {
        self.rows.last().map(|r| r.as_slice())
    }

    pub fn last_value(&self, name: &str) -> Option<f64> {
        let i = self.column_index(name)?;
        self.rows.last().map(|r| r[i])
    }
}

impl TraceSink for FlowTrace {
    fn begin(&mut self, columns: &[&str]) -> Result<()> {
        if columns.first() != Some(&"t") {
            return Err(Error::Sink("first trace column must be `t`".to_string()));
        }
        self.columns = columns.iter().map(|c| c.to_string()).collect();
        self.rows.clear();
        Ok(())
    }

    fn record(&mut self, row: &[f64]) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::Sink(alloc::format!(
                "row has {} values, schema has {}",
                row.len(),
                self.columns.len()
            )));
        }
        if let Some(prev) = self.rows.last() {
            if !(row[0] > prev[0]) {
                return Err(Error::Sink(alloc::format!("non-increasing time {} after {}", row[0], prev[0])));
            }
        }
        self.rows.push(row.to_vec());
        Ok(())
    }
}

/// Forwards every row to two sinks.
pub struct Tee<'a, A: TraceSink + ?Sized, B: TraceSink + ?Sized>(pub &'a mut A, pub &'a mut B);

impl<A: TraceSink + ?Sized, B: TraceSink + ?Sized> TraceSink for Tee<'_, A, B> {
    fn begin(&mut self, columns: &[&str]) -> Result<()> {
        self.0.begin(columns)?;
        self.1.begin(columns)
    }

    fn record(&mut self, row: &[f64]) -> Result<()> {
        self.0.record(row)?;
        self.1.record(row)
    }
}
