//! JSON model documents.
//!
//! ```json
//! {"type": "dense", "A": [[-1.0]], "B": [[1.0]], "weight_C": [[4.0]]}
//! {"type": "spectral", "lambdas": [-1.0, -2.0], "b_diag": [1.0, 1.0]}
//! {"type": "landau", "n_modes": 8, "rho_minus": 0.2, "rho_plus": 0.8}
//! ```

use serde::{Deserialize, Serialize};

use super::{apply_control_weight, make_dense_model, make_spectral_model, ControlProblem, Matrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ModelKind {
    Dense {
        #[serde(rename = "A")]
        a: Vec<Vec<f64>>,
        #[serde(rename = "B")]
        b: Vec<Vec<f64>>,
    },
    Spectral {
        lambdas: Vec<f64>,
        b_diag: Vec<f64>,
    },
    Landau {
        n_modes: usize,
        rho_minus: f64,
        rho_plus: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    #[serde(flatten)]
    pub kind: ModelKind,
    #[serde(rename = "weight_C", default, skip_serializing_if = "Option::is_none")]
    pub weight_c: Option<Vec<Vec<f64>>>,
}

impl ModelDocument {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn build(&self) -> Result<ControlProblem> {
        let base = match &self.kind {
            ModelKind::Dense { a, b } => make_dense_model(rows_to_matrix(a)?, rows_to_matrix(b)?)?,
            ModelKind::Spectral { lambdas, b_diag } => make_spectral_model(lambdas, b_diag)?,
            ModelKind::Landau {
                n_modes,
                rho_minus,
                rho_plus,
            } => crate::landau::build_lg_model(*n_modes, *rho_minus, *rho_plus)?
                .problem()
                .clone(),
        };
        match &self.weight_c {
            Some(c) => apply_control_weight(&base, &rows_to_matrix(c)?),
            None => Ok(base),
        }
    }
}

pub fn rows_to_matrix(rows: &[Vec<f64>]) -> Result<Matrix> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if nrows == 0 || ncols == 0 {
        return Err(Error::Parse("matrix must be non-empty".into()));
    }
    if let Some(bad) = rows.iter().find(|r| r.len() != ncols) {
        return Err(Error::Parse(format!(
            "ragged matrix: expected {ncols} columns, found a row with {}",
            bad.len()
        )));
    }
    Ok(Matrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}
