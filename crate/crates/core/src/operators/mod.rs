//! Control-problem models and the dense kernels the rest of the crate uses.
//!
//! A [`ControlProblem`] is the pair `(A, B)` of the state equation
//! `y' = Ay + Bu` on `X = ℝⁿ`, `U = ℝᵐ`, together with the stability data
//! `(M, ω)` such that `‖e^{tA}‖ ≤ M e^{−ωt}`.

mod expm;
pub mod ingest;
pub mod linalg;
mod pinv;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub use expm::expm;
pub use linalg::{Matrix, Vector};
pub use pinv::{pseudo_inverse, PseudoInverse, DEFAULT_REL_TOL};

use crate::error::{Error, Result};
use linalg::{asymmetry, ensure_square, SymSpectrum};

/// Eigenvector-matrix condition numbers above this are treated as defective.
const MAX_EIGVEC_CONDITION: f64 = 1e12;

/// Diagonal (commuting) model: `A = diag(λ)`, `BB* = diag(b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralModel {
    /// Eigenvalues of `A`, sorted descending (stable among ties).
    pub lambdas: Vec<f64>,
    /// Diagonal of `BB*`, permuted together with `lambdas`.
    pub b_diag: Vec<f64>,
}

impl SpectralModel {
    /// Maximal runs of equal eigenvalues, as index ranges into `lambdas`.
    pub fn eigenspaces(&self) -> Vec<std::ops::Range<usize>> {
        let mut out = Vec::new();
        let mut start = 0;
        for i in 1..=self.lambdas.len() {
            if i == self.lambdas.len() || self.lambdas[i] != self.lambdas[start] {
                out.push(start..i);
                start = i;
            }
        }
        out
    }

    pub fn has_simple_spectrum(&self) -> bool {
        self.eigenspaces().iter().all(|r| r.len() == 1)
    }
}

#[derive(Debug, Clone)]
pub struct ControlProblem {
    a: Matrix,
    b: Matrix,
    bbt: Matrix,
    spectral_abscissa: f64,
    bound_m: f64,
    decay_omega: f64,
    commuting: bool,
    coercive: bool,
    spectral: Option<SpectralModel>,
}

impl ControlProblem {
    pub fn a(&self) -> &Matrix {
        &self.a
    }
    pub fn b(&self) -> &Matrix {
        &self.b
    }
    /// `BB*`.
    pub fn bbt(&self) -> &Matrix {
        &self.bbt
    }
    pub fn n(&self) -> usize {
        self.a.nrows()
    }
    pub fn m(&self) -> usize {
        self.b.ncols()
    }
    pub fn spectral_abscissa(&self) -> f64 {
        self.spectral_abscissa
    }
    pub fn bound_m(&self) -> f64 {
        self.bound_m
    }
    pub fn decay_omega(&self) -> f64 {
        self.decay_omega
    }
    /// `A` selfadjoint, invertible and commuting with `BB*`.
    pub fn is_commuting(&self) -> bool {
        self.commuting
    }
    /// `BB*` positive definite.
    pub fn is_coercive(&self) -> bool {
        self.coercive
    }
    pub fn spectral(&self) -> Option<&SpectralModel> {
        self.spectral.as_ref()
    }

    /// Time after which the tail `M e^{−ωt}·scale` falls below `eps`.
    pub fn tail_horizon(&self, scale: f64, eps: f64) -> f64 {
        let arg = scale.max(f64::MIN_POSITIVE) * self.bound_m / eps;
        (arg.ln() / self.decay_omega).max(0.0)
    }
}

/// Build a problem from dense `A` (n×n) and `B` (n×m).
pub fn make_dense_model(a: Matrix, b: Matrix) -> Result<ControlProblem> {
    ensure_square(&a, "A")?;
    let n = a.nrows();
    if n == 0 {
        return Err(Error::DimensionMismatch("state dimension must be positive".into()));
    }
    if b.nrows() != n || b.ncols() == 0 {
        return Err(Error::DimensionMismatch(format!(
            "B must be {n}xm with m >= 1, got {}x{}",
            b.nrows(),
            b.ncols()
        )));
    }
    if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
        return Err(Error::OutOfRange("non-finite matrix entry".into()));
    }
    let eigenvalues = a.complex_eigenvalues();
    let abscissa = eigenvalues
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max);
    if abscissa >= 0.0 {
        return Err(Error::NotStable { abscissa });
    }
    let symmetric = asymmetry(&a) == 0.0;
    let bound_m = if symmetric {
        1.0
    } else {
        eigenvector_condition(&a, eigenvalues.as_slice())?
    };
    let bbt = &b * b.transpose();
    let commuting = symmetric && {
        let comm = &a * &bbt - &bbt * &a;
        comm.norm() <= 1e-12 * (1.0 + a.norm() * bbt.norm())
    };
    let coercive = SymSpectrum::new(&bbt).min() > DEFAULT_REL_TOL * SymSpectrum::new(&bbt).max_abs();
    Ok(ControlProblem {
        a,
        b,
        bbt,
        spectral_abscissa: abscissa,
        bound_m,
        decay_omega: -abscissa,
        commuting,
        coercive,
        spectral: None,
    })
}

/// Build the diagonal model `A = diag(λ)`, `B = diag(√b)`.
pub fn make_spectral_model(lambdas: &[f64], b_diag: &[f64]) -> Result<ControlProblem> {
    if lambdas.len() != b_diag.len() {
        return Err(Error::LengthMismatch {
            expected: lambdas.len(),
            got: b_diag.len(),
        });
    }
    if lambdas.is_empty() {
        return Err(Error::DimensionMismatch("state dimension must be positive".into()));
    }
    if let Some((index, &value)) = b_diag.iter().enumerate().find(|(_, v)| !(**v >= 0.0)) {
        return Err(Error::NegativeWeight { index, value });
    }
    let abscissa = lambdas.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(abscissa < 0.0) || lambdas.iter().any(|l| !l.is_finite()) {
        return Err(Error::NotStable { abscissa });
    }
    let mut order: Vec<usize> = (0..lambdas.len()).collect();
    // Stable sort keeps input order inside repeated eigenvalues.
    order.sort_by(|&i, &j| lambdas[j].total_cmp(&lambdas[i]));
    let lambdas: Vec<f64> = order.iter().map(|&i| lambdas[i]).collect();
    let b_diag: Vec<f64> = order.iter().map(|&i| b_diag[i]).collect();

    let a = DMatrix::from_diagonal(&DVector::from_vec(lambdas.clone()));
    let b = DMatrix::from_diagonal(&DVector::from_iterator(
        b_diag.len(),
        b_diag.iter().map(|v| v.sqrt()),
    ));
    let bbt = DMatrix::from_diagonal(&DVector::from_vec(b_diag.clone()));
    let min_b = b_diag.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(ControlProblem {
        a,
        b,
        bbt,
        spectral_abscissa: abscissa,
        bound_m: 1.0,
        decay_omega: -abscissa,
        commuting: true,
        coercive: min_b > 0.0,
        spectral: Some(SpectralModel { lambdas, b_diag }),
    })
}

/// Replace `B` by `B C^{−1/2}`, turning the weighted energy `½∫⟨Cu,u⟩` into the
/// plain one.
pub fn apply_control_weight(p: &ControlProblem, c: &Matrix) -> Result<ControlProblem> {
    ensure_square(c, "C")?;
    if c.nrows() != p.m() {
        return Err(Error::DimensionMismatch(format!(
            "weight C must be {m}x{m}, got {}x{}",
            c.nrows(),
            c.ncols(),
            m = p.m()
        )));
    }
    linalg::ensure_symmetric(c, 1e-10)?;
    let spectrum = SymSpectrum::new(c);
    let (min, max) = (spectrum.min(), spectrum.max_abs());
    if !(min > DEFAULT_REL_TOL * max) {
        return Err(Error::NotCoercive { min, max });
    }
    let c_inv_sqrt = spectrum.map(|v| 1.0 / v.sqrt());
    let b = p.b() * c_inv_sqrt;
    let weighted = make_dense_model(p.a().clone(), b)?;
    match p.spectral() {
        // Keep the spectral bookkeeping when the weight leaves BB* diagonal.
        Some(s) if weighted.bbt().is_diagonal_within(1e-14) => make_spectral_model(
            &s.lambdas,
            &(0..p.n()).map(|i| weighted.bbt()[(i, i)]).collect::<Vec<_>>(),
        ),
        _ => Ok(weighted),
    }
}

trait DiagonalCheck {
    fn is_diagonal_within(&self, tol: f64) -> bool;
}

impl DiagonalCheck for Matrix {
    fn is_diagonal_within(&self, tol: f64) -> bool {
        let scale = self.norm().max(f64::MIN_POSITIVE);
        self.iter()
            .enumerate()
            .all(|(k, v)| k % (self.nrows() + 1) == 0 || v.abs() <= tol * scale)
    }
}

/// Condition number of a unit-column eigenvector matrix of `a`. Repeated
/// eigenvalues are grouped and must have a full eigenspace.
fn eigenvector_condition(a: &Matrix, eigenvalues: &[Complex64]) -> Result<f64> {
    let n = a.nrows();
    let scale = a.norm().max(1.0);
    let mut sorted: Vec<Complex64> = eigenvalues.to_vec();
    sorted.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));

    let mut clusters: Vec<Vec<Complex64>> = Vec::new();
    for z in sorted {
        match clusters
            .iter_mut()
            .find(|c| (c[0] - z).norm() <= 1e-7 * scale)
        {
            Some(c) => c.push(z),
            None => clusters.push(vec![z]),
        }
    }

    let ac: DMatrix<Complex64> = a.map(|v| Complex64::new(v, 0.0));
    let mut columns: Vec<DVector<Complex64>> = Vec::with_capacity(n);
    for cluster in &clusters {
        let k = cluster.len();
        let center = cluster.iter().sum::<Complex64>() / k as f64;
        let shifted = &ac - DMatrix::<Complex64>::identity(n, n) * center;
        let svd = shifted.svd(false, true);
        let v_t = svd.v_t.expect("requested right singular vectors");
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]));
        let kth = svd.singular_values[idx[k - 1]];
        if kth > 1e-6 * scale {
            return Err(Error::NotDiagonalizable {
                condition: f64::INFINITY,
            });
        }
        for &i in idx.iter().take(k) {
            let row = v_t.row(i);
            let col = DVector::from_iterator(n, row.iter().map(|z| z.conj()));
            let norm = col.norm();
            columns.push(col / Complex64::new(norm, 0.0));
        }
    }
    let v = DMatrix::from_columns(&columns);
    let sv = v.singular_values();
    let max = sv.iter().copied().fold(0.0_f64, f64::max);
    let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    let condition = if min > 0.0 { max / min } else { f64::INFINITY };
    if !(condition <= MAX_EIGVEC_CONDITION) {
        return Err(Error::NotDiagonalizable { condition });
    }
    Ok(condition.max(1.0))
}
