//! Serialization helpers shared by every command.

use std::fs;
use std::path::{Path, PathBuf};

use retrosmooth::linalg::{DensityOperator, Matrix};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// A density matrix as written to result files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub dim: usize,
    pub real: Vec<Vec<f64>>,
    pub imag: Vec<Vec<f64>>,
}

impl MatrixJson {
    pub fn from_matrix(m: &Matrix<f64>) -> Self {
        Self { dim: m.rows(), real: m.real_parts(), imag: m.imag_parts() }
    }

    /// Re-validates the stored matrix as a density operator.
    pub fn to_density(&self) -> retrosmooth::Result<DensityOperator<f64>> {
        DensityOperator::new(Matrix::from_parts(&self.real, Some(&self.imag))?)
    }
}

/// Seventeen significant digits, enough to reproduce every `f64` exactly.
pub fn fmt_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_float).unwrap_or_default()
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf, CliError> {
    let path = dir.join(name);
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::io(&path, e))?;
    text.push('\n');
    fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
    Ok(path)
}

/// Writes a CSV file from a header and pre-formatted rows.
pub fn write_csv(dir: &Path, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<PathBuf, CliError> {
    let path = dir.join(name);
    let mut w = csv::Writer::from_path(&path).map_err(|e| CliError::io(&path, e))?;
    w.write_record(header).map_err(|e| CliError::io(&path, e))?;
    for row in rows {
        w.write_record(row).map_err(|e| CliError::io(&path, e))?;
    }
    w.flush().map_err(|e| CliError::io(&path, e))?;
    Ok(path)
}
