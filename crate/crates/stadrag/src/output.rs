//! Plot-ready CSV tables with a `#` metadata header.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::config::ExperimentConfig;
use crate::error::AppError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Locale-independent scientific notation with 12 significant digits.
pub fn num(v: f64) -> String {
    format!("{v:.11e}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub file_name: String,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
    /// Extra `# key=value` lines after the parameter line.
    pub notes: Vec<(String, String)>,
}

impl Table {
    pub fn new(file_name: impl Into<String>, columns: &[&'static str]) -> Self {
        Self { file_name: file_name.into(), columns: columns.to_vec(), rows: Vec::new(), notes: Vec::new() }
    }

    pub fn push_numbers(&mut self, values: &[f64]) {
        self.rows.push(values.iter().map(|&v| num(v)).collect());
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn note(mut self, key: &str, value: impl ToString) -> Self {
        self.notes.push((key.to_owned(), value.to_string()));
        self
    }

    pub fn column(&self, name: &str) -> Option<Vec<&str>> {
        let k = self.columns.iter().position(|c| *c == name)?;
        Some(self.rows.iter().map(|r| r[k].as_str()).collect())
    }

    pub fn write_to<W: Write>(&self, mut out: W, cfg: &ExperimentConfig) -> Result<(), AppError> {
        let params = serde_json::to_string(cfg).expect("config serialises to JSON");
        writeln!(out, "# stadrag {VERSION} params={params}")?;
        for (k, v) in &self.notes {
            writeln!(out, "# {k}={v}")?;
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Writes every table into `dir`, one file each, in order.
pub fn write_tables(dir: &Path, tables: &[Table], cfg: &ExperimentConfig) -> Result<Vec<PathBuf>, AppError> {
    fs::create_dir_all(dir)?;
    tables
        .iter()
        .map(|t| {
            let path = dir.join(&t.file_name);
            let file = fs::File::create(&path)?;
            t.write_to(std::io::BufWriter::new(file), cfg)?;
            Ok(path)
        })
        .collect()
}
