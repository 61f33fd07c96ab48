//! JSON matrix files: `{"dim": n, "entries": [[re, im], ...]}`, row-major.

use std::fs;
use std::path::Path;

use num_complex::Complex64;
use opcake_core::HermitianMatrix;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixFile {
    pub dim: usize,
    pub entries: Vec<[f64; 2]>,
}

impl MatrixFile {
    pub fn from_matrix(m: &HermitianMatrix) -> Self {
        Self {
            dim: m.dim(),
            entries: m.to_row_major().into_iter().map(|z| [z.re, z.im]).collect(),
        }
    }

    pub fn to_matrix(&self) -> Result<HermitianMatrix, CliError> {
        if self.entries.len() != self.dim * self.dim {
            return Err(CliError::Usage(format!(
                "matrix file declares dim {} but has {} entries",
                self.dim,
                self.entries.len()
            )));
        }
        let entries: Vec<Complex64> = self.entries.iter().map(|&[re, im]| Complex64::new(re, im)).collect();
        Ok(HermitianMatrix::from_row_major(self.dim, &entries)?)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Usage(format!("malformed matrix file: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("matrix files are plain data")
    }
}

/// Reads and validates a Hermitian matrix from `path`.
pub fn read_matrix(path: &Path) -> Result<HermitianMatrix, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    MatrixFile::parse(&text)
        .and_then(|f| f.to_matrix())
        .map_err(|e| e.context(&path.display().to_string()))
}
