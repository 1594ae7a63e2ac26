//! Small dense kernels shared by the Gramian, energy and Riccati modules.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Relative asymmetry `‖M − Mᵀ‖_F / ‖M‖_F` (zero for the zero matrix).
pub fn asymmetry(m: &Matrix) -> f64 {
    let norm = m.norm();
    if norm == 0.0 {
        return 0.0;
    }
    (m - m.transpose()).norm() / norm
}

pub fn symmetrize(m: &Matrix) -> Matrix {
    (m + m.transpose()) * 0.5
}

pub fn ensure_square(m: &Matrix, what: &str) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "{what} must be square, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

pub fn ensure_symmetric(m: &Matrix, tol: f64) -> Result<()> {
    let a = asymmetry(m);
    if a > tol {
        return Err(Error::NotSymmetric { asymmetry: a });
    }
    Ok(())
}

/// Eigendecomposition of a symmetric matrix with eigenvalues sorted in
/// descending order and eigenvectors as the matching columns.
#[derive(Debug, Clone)]
pub struct SymSpectrum {
    pub values: Vector,
    pub vectors: Matrix,
}

impl SymSpectrum {
    pub fn new(m: &Matrix) -> Self {
        let n = m.nrows();
        if n == 0 {
            return Self {
                values: Vector::zeros(0),
                vectors: Matrix::zeros(0, 0),
            };
        }
        let eig = SymmetricEigen::new(symmetrize(m));
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
        let values = Vector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
        let mut vectors = Matrix::zeros(n, n);
        for (dst, &src) in order.iter().enumerate() {
            vectors.set_column(dst, &eig.eigenvectors.column(src));
        }
        Self { values, vectors }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Number of eigenvalues whose magnitude exceeds `rel_tol · max|λ|`.
    pub fn rank(&self, rel_tol: f64) -> usize {
        let cutoff = rel_tol * self.max_abs();
        if self.max_abs() == 0.0 {
            return 0;
        }
        self.values.iter().filter(|v| v.abs() > cutoff).count()
    }

    /// `V f(Λ) Vᵀ`, symmetrized.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Matrix {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for j in 0..n {
            let s = f(self.values[j]);
            scaled.column_mut(j).scale_mut(s);
        }
        symmetrize(&(scaled * self.vectors.transpose()))
    }
}

/// Symmetric PSD square root; negative round-off eigenvalues are clamped to zero.
pub fn sym_sqrt(m: &Matrix) -> Matrix {
    SymSpectrum::new(m).map(|v| v.max(0.0).sqrt())
}

/// Largest singular value.
pub fn spectral_norm(m: &Matrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .singular_values()
        .iter()
        .fold(0.0_f64, |acc, &s| acc.max(s))
}

pub fn one_norm(m: &Matrix) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0_f64, f64::max)
}

/// Solve a square linear system by LU with partial pivoting.
pub fn solve(a: &Matrix, rhs: &Matrix) -> Result<Matrix> {
    a.clone()
        .lu()
        .solve(rhs)
        .ok_or(Error::Singular("LU factorization is singular"))
}

pub fn solve_vec(a: &Matrix, rhs: &Vector) -> Result<Vector> {
    a.clone()
        .lu()
        .solve(rhs)
        .ok_or(Error::Singular("LU factorization is singular"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spectrum_is_sorted_descending() {
        let m = Matrix::from_diagonal(&Vector::from_vec(vec![0.5, 3.0, -1.0]));
        let s = SymSpectrum::new(&m);
        assert_eq!(s.values.as_slice(), &[3.0, 0.5, -1.0]);
        assert_eq!(s.rank(1e-10), 3);
    }

    #[test]
    fn sqrt_of_diagonal() {
        let m = Matrix::from_diagonal(&Vector::from_vec(vec![4.0, 0.25]));
        let r = sym_sqrt(&m);
        assert!((r[(0, 0)] - 2.0).abs() < 1e-15);
        assert!((r[(1, 1)] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn zero_matrix_has_rank_zero() {
        assert_eq!(SymSpectrum::new(&Matrix::zeros(3, 3)).rank(1e-10), 0);
    }
}
