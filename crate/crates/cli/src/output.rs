//! CSV and JSON rendering of experiment rows.

use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use snm_core::experiments::{CurveRow, DebiasRow, VarianceRow};

pub const CURVE_HEADER: [&str; 11] = [
    "family",
    "param",
    "n",
    "stat",
    "population_value",
    "expected_value",
    "ratio_R",
    "quad_error",
    "converged",
    "std_error",
    "note",
];

pub const VARIANCE_HEADER: [&str; 10] = [
    "family",
    "param",
    "n",
    "population_value",
    "expected_value",
    "second_moment",
    "variance",
    "quad_error",
    "converged",
    "note",
];

pub const DEBIAS_HEADER: [&str; 9] =
    ["alpha", "n", "method", "bias", "abs_bias", "std_error", "replications", "clamped", "failures"];

/// Rows that have a fixed CSV header.
pub trait CsvRow: Serialize {
    const HEADER: &'static [&'static str];
}

impl CsvRow for CurveRow {
    const HEADER: &'static [&'static str] = &CURVE_HEADER;
}

impl CsvRow for VarianceRow {
    const HEADER: &'static [&'static str] = &VARIANCE_HEADER;
}

impl CsvRow for DebiasRow {
    const HEADER: &'static [&'static str] = &DEBIAS_HEADER;
}

/// Header plus one record per row. Floats use the shortest representation
/// that round-trips.
pub fn to_csv<T: CsvRow>(rows: &[T]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(T::HEADER)?;
    for row in rows {
        w.serialize(row)?;
    }
    let bytes = w.into_inner().context("flushing CSV")?;
    Ok(String::from_utf8(bytes)?)
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Writes to `path`, or stdout when absent.
pub fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => write_text(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
