//! Bartels–Stewart solver for `A X + X Aᵀ + C = 0`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::operators::linalg::{solve, symmetrize, Matrix};

/// Solve `A X + X Aᵀ = −C` for stable `A` by reducing `A` to real Schur form
/// and back-substituting over its quasi-triangular blocks.
pub fn solve_lyapunov(a: &Matrix, c: &Matrix) -> Result<Matrix> {
    let n = a.nrows();
    if n == 0 {
        return Ok(Matrix::zeros(0, 0));
    }
    let (u, t) = a.clone().schur().unpack();
    let f = -(u.transpose() * c * &u);
    let y = solve_quasi_triangular(&t, &f)?;
    let x = &u * y * u.transpose();
    Ok(if c.transpose() == *c { symmetrize(&x) } else { x })
}

/// Diagonal blocks (1×1 or 2×2) of a real quasi-upper-triangular matrix.
fn schur_blocks(t: &Matrix) -> Vec<std::ops::Range<usize>> {
    let n = t.nrows();
    let scale = t.norm().max(f64::MIN_POSITIVE);
    let mut blocks = Vec::new();
    let mut i = 0;
    while i < n {
        if i + 1 < n && t[(i + 1, i)].abs() > 1e-14 * scale {
            blocks.push(i..i + 2);
            i += 2;
        } else {
            blocks.push(i..i + 1);
            i += 1;
        }
    }
    blocks
}

/// Solve `T Y + Y Tᵀ = F` for quasi-upper-triangular `T`.
fn solve_quasi_triangular(t: &Matrix, f: &Matrix) -> Result<Matrix> {
    let n = t.nrows();
    let blocks = schur_blocks(t);
    let mut y = Matrix::zeros(n, n);
    for jb in blocks.iter().rev() {
        for ib in blocks.iter().rev() {
            let (p, q) = (ib.len(), jb.len());
            let mut rhs = f.view((ib.start, jb.start), (p, q)).clone_owned();
            if ib.end < n {
                let t_row = t.view((ib.start, ib.end), (p, n - ib.end));
                let y_col = y.view((ib.end, jb.start), (n - ib.end, q));
                rhs -= t_row * y_col;
            }
            if jb.end < n {
                let y_row = y.view((ib.start, jb.end), (p, n - jb.end));
                let t_row = t.view((jb.start, jb.end), (q, n - jb.end));
                rhs -= y_row * t_row.transpose();
            }
            let t_ii = t.view((ib.start, ib.start), (p, p)).clone_owned();
            let t_jj = t.view((jb.start, jb.start), (q, q)).clone_owned();
            let block = small_sylvester(&t_ii, &t_jj, &rhs)?;
            y.view_mut((ib.start, jb.start), (p, q)).copy_from(&block);
        }
    }
    Ok(y)
}

/// `T_ii Y + Y T_jjᵀ = R` for blocks of size at most 2, via the Kronecker form.
fn small_sylvester(t_ii: &Matrix, t_jj: &Matrix, r: &Matrix) -> Result<Matrix> {
    let (p, q) = (t_ii.nrows(), t_jj.nrows());
    if p == 1 && q == 1 {
        let d = t_ii[(0, 0)] + t_jj[(0, 0)];
        if d == 0.0 {
            return Err(Error::Singular("Lyapunov operator has a zero eigenvalue"));
        }
        return Ok(Matrix::from_element(1, 1, r[(0, 0)] / d));
    }
    // vec(T_ii Y) = (I_q ⊗ T_ii) vec Y ; vec(Y T_jjᵀ) = (T_jj ⊗ I_p) vec Y
    let size = p * q;
    let mut k = DMatrix::zeros(size, size);
    for col in 0..q {
        for i in 0..p {
            for j in 0..p {
                k[(col * p + i, col * p + j)] += t_ii[(i, j)];
            }
        }
    }
    for a in 0..q {
        for b in 0..q {
            for i in 0..p {
                k[(a * p + i, b * p + i)] += t_jj[(a, b)];
            }
        }
    }
    let rhs = Matrix::from_column_slice(size, 1, r.as_slice());
    let sol = solve(&k, &rhs)?;
    Ok(Matrix::from_column_slice(p, q, sol.as_slice()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    fn residual(a: &Matrix, x: &Matrix, c: &Matrix) -> f64 {
        (a * x + x * a.transpose() + c).norm() / (a.norm() * x.norm() + c.norm())
    }

    #[test]
    fn scalar() {
        let x = solve_lyapunov(&dmatrix![-1.0], &dmatrix![1.0]).unwrap();
        assert!((x[(0, 0)] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn diagonal() {
        let x = solve_lyapunov(&dmatrix![-1.0, 0.0; 0.0, -2.0], &Matrix::identity(2, 2)).unwrap();
        assert!((x - dmatrix![0.5, 0.0; 0.0, 0.25]).norm() < 1e-15);
    }

    #[test]
    fn complex_eigenvalues_use_two_by_two_blocks() {
        let a = dmatrix![-0.5, 3.0, 0.2; -3.0, -0.5, 0.0; 0.1, 0.4, -2.0];
        let c = dmatrix![1.0, 0.2, 0.0; 0.2, 2.0, 0.1; 0.0, 0.1, 0.5];
        let x = solve_lyapunov(&a, &c).unwrap();
        assert!(residual(&a, &x, &c) < 1e-14);
        assert_eq!(x, x.transpose());
    }

    #[test]
    fn nonsymmetric_rhs() {
        let a = dmatrix![-1.0, 2.0; 0.0, -3.0];
        let c = dmatrix![0.0, 1.0; 0.0, 0.0];
        let x = solve_lyapunov(&a, &c).unwrap();
        assert!(residual(&a, &x, &c) < 1e-14);
    }
}
