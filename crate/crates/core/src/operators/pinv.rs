use super::linalg::{ensure_symmetric, Matrix, SymSpectrum, Vector};
use crate::error::{Error, Result};

/// Relative singular-value cutoff used for every rank decision.
pub const DEFAULT_REL_TOL: f64 = 1e-10;

/// Moore–Penrose pseudoinverse of a symmetric matrix, together with the
/// orthogonal projector onto its range.
#[derive(Debug, Clone)]
pub struct PseudoInverse {
    pub source: Matrix,
    pub rank: usize,
    pub tolerance: f64,
    pub inverse_on_range: Matrix,
    pub range_projector: Matrix,
}

impl PseudoInverse {
    pub(crate) fn from_spectrum(source: Matrix, spectrum: &SymSpectrum, rel_tol: f64) -> Self {
        let rank = spectrum.rank(rel_tol);
        let n = source.nrows();
        let cutoff = rel_tol * spectrum.max_abs();
        let kept = |j: usize| rank > 0 && spectrum.values[j].abs() > cutoff;
        let mut inv_cols = spectrum.vectors.clone();
        let mut proj_cols = spectrum.vectors.clone();
        for j in 0..n {
            if kept(j) {
                inv_cols.column_mut(j).scale_mut(1.0 / spectrum.values[j]);
            } else {
                inv_cols.column_mut(j).fill(0.0);
                proj_cols.column_mut(j).fill(0.0);
            }
        }
        let vt = spectrum.vectors.transpose();
        let inverse_on_range = super::linalg::symmetrize(&(inv_cols * &vt));
        let range_projector = super::linalg::symmetrize(&(proj_cols * vt));
        Self {
            source,
            rank,
            tolerance: rel_tol,
            inverse_on_range,
            range_projector,
        }
    }

    pub fn dim(&self) -> usize {
        self.source.nrows()
    }

    pub fn is_full_rank(&self) -> bool {
        self.rank == self.dim()
    }

    pub fn apply(&self, x: &Vector) -> Vector {
        &self.inverse_on_range * x
    }

    /// Norm of the component of `x` orthogonal to the range.
    pub fn off_range_norm(&self, x: &Vector) -> f64 {
        (x - &self.range_projector * x).norm()
    }

    /// Whether `‖(I − Π)x‖ ≤ tol·‖x‖` (true for `x = 0`).
    pub fn contains(&self, x: &Vector, tol: f64) -> bool {
        self.off_range_norm(x) <= tol * x.norm()
    }
}

/// Pseudoinverse of a symmetric matrix; eigenvalues with magnitude below
/// `rel_tol · σ_max` are treated as zero.
pub fn pseudo_inverse(m: &Matrix, rel_tol: f64) -> Result<PseudoInverse> {
    super::linalg::ensure_square(m, "pseudo_inverse input")?;
    if !(rel_tol > 0.0 && rel_tol < 1.0) {
        return Err(Error::OutOfRange(format!("rel_tol {rel_tol} not in (0,1)")));
    }
    ensure_symmetric(m, 1e-10)?;
    let spectrum = SymSpectrum::new(m);
    Ok(PseudoInverse::from_spectrum(m.clone(), &spectrum, rel_tol))
}
