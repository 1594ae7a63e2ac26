//! Controllability Gramians `Q_t`, `Q_∞` and the reachability space
//! `H = R(Q_∞^{1/2})` with inner product `⟨x, y⟩_H = ⟨Q_∞^{−1/2}x, Q_∞^{−1/2}y⟩`.

mod lyapunov;

use serde::Serialize;

pub use lyapunov::solve_lyapunov;

use crate::error::{Error, Result};
use crate::operators::linalg::{spectral_norm, symmetrize, Matrix, SymSpectrum, Vector};
use crate::operators::{expm, ControlProblem, PseudoInverse, DEFAULT_REL_TOL};
use crate::quadrature::composite_gauss_legendre;

/// Membership tolerance for `H` and for the range of `Q_∞`.
pub const MEMBERSHIP_TOL: f64 = 1e-8;

/// Target tail size for truncating integrals over `(−∞, 0]`.
pub const TAIL_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GramianMethod {
    /// Composite 32-node Gauss–Legendre quadrature of `∫₀ᵗ e^{rA}BB*e^{rA*} dr`.
    Quadrature,
    /// RK4 on `Q' = AQ + QA* + BB*`, `Q(0) = 0`.
    MatrixOde,
}

#[derive(Debug, Clone)]
pub struct Gramian {
    /// `f64::INFINITY` for `Q_∞`.
    pub horizon: f64,
    pub matrix: Matrix,
    pub rank: usize,
    pub pinv: PseudoInverse,
}

impl Gramian {
    pub fn from_matrix(horizon: f64, matrix: Matrix) -> Self {
        let matrix = symmetrize(&matrix);
        let spectrum = SymSpectrum::new(&matrix);
        let pinv = PseudoInverse::from_spectrum(matrix.clone(), &spectrum, DEFAULT_REL_TOL);
        Self {
            horizon,
            rank: pinv.rank,
            matrix,
            pinv,
        }
    }

    pub fn is_full_rank(&self) -> bool {
        self.pinv.is_full_rank()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GramianReport {
    pub horizon: serde_json::Value,
    pub rank: usize,
    pub lyapunov_residual: Option<f64>,
}

impl GramianReport {
    pub fn new(p: &ControlProblem, g: &Gramian) -> Self {
        let horizon = if g.horizon.is_finite() {
            serde_json::json!(g.horizon)
        } else {
            serde_json::json!("+inf")
        };
        let lyapunov_residual = (!g.horizon.is_finite()).then(|| lyapunov_residual(p, &g.matrix));
        Self {
            horizon,
            rank: g.rank,
            lyapunov_residual,
        }
    }
}

/// `‖AQ + QA* + BB*‖_F / (‖A‖‖Q‖ + ‖BB*‖)`.
pub fn lyapunov_residual(p: &ControlProblem, q: &Matrix) -> f64 {
    let a = p.a();
    let r = a * q + q * a.transpose() + p.bbt();
    let scale = a.norm() * q.norm() + p.bbt().norm();
    if scale == 0.0 {
        0.0
    } else {
        r.norm() / scale
    }
}

/// `Q_t` on the horizon `t > 0`.
pub fn gramian_finite(p: &ControlProblem, t: f64, method: GramianMethod) -> Result<Gramian> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::HorizonNotPositive(t));
    }
    let matrix = match method {
        GramianMethod::Quadrature => quadrature_gramian(p, t),
        GramianMethod::MatrixOde => ode_gramian(p, t),
    };
    Ok(Gramian::from_matrix(t, matrix))
}

fn quadrature_gramian(p: &ControlProblem, t: f64) -> Matrix {
    let width = (1.0 / p.decay_omega()).min(1.0);
    let (nodes, weights) = composite_gauss_legendre(0.0, t, width);
    let n = p.n();
    let mut q = Matrix::zeros(n, n);
    for (r, w) in nodes.into_iter().zip(weights) {
        let e = expm(p.a(), r);
        q += (&e * p.bbt() * e.transpose()) * w;
    }
    q
}

fn ode_gramian(p: &ControlProblem, t: f64) -> Matrix {
    let a = p.a();
    let at = a.transpose();
    let c = p.bbt();
    let rhs = |q: &Matrix| a * q + q * &at + c;
    let h_max = 2e-3 / spectral_norm(a).max(f64::MIN_POSITIVE);
    let steps = ((t / h_max).ceil() as usize).max(1);
    let h = t / steps as f64;
    let n = p.n();
    let mut q = Matrix::zeros(n, n);
    for _ in 0..steps {
        let k1 = rhs(&q);
        let k2 = rhs(&(&q + &k1 * (0.5 * h)));
        let k3 = rhs(&(&q + &k2 * (0.5 * h)));
        let k4 = rhs(&(&q + &k3 * h));
        q += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    }
    q
}

/// `Q_∞`, the PSD solution of `AQ + QA* + BB* = 0`.
pub fn gramian_infinite(p: &ControlProblem) -> Result<Gramian> {
    if !(p.spectral_abscissa() < 0.0) {
        return Err(Error::NotStable {
            abscissa: p.spectral_abscissa(),
        });
    }
    let q = solve_lyapunov(p.a(), p.bbt())?;
    Ok(Gramian::from_matrix(f64::INFINITY, q))
}

/// Truncation time for integrals over `(−∞, 0]` reaching a state of norm
/// `x_norm`: `max(T0, ln(‖x‖ M / ε) / ω)`, floored at one time unit.
pub fn truncation_horizon(p: &ControlProblem, x_norm: f64, t0: f64) -> f64 {
    t0.max(p.tail_horizon(x_norm, TAIL_EPS)).max(1.0)
}

/// The space `H` materialized through the eigendecomposition of `Q_∞`.
#[derive(Debug, Clone)]
pub struct HSpace {
    pub q_inf: Gramian,
    /// `Q_∞^{1/2}`.
    pub sqrt_q: Matrix,
    /// Pseudoinverse of `Q_∞^{1/2}`, with the same rank decision as `Q_∞`.
    pub sqrt_pinv: PseudoInverse,
    /// Orthonormal basis of `ker Q_∞` (n × (n − rank)).
    pub kernel_basis: Matrix,
}

impl HSpace {
    pub fn n(&self) -> usize {
        self.sqrt_q.nrows()
    }

    pub fn rank(&self) -> usize {
        self.q_inf.rank
    }

    pub fn is_full_rank(&self) -> bool {
        self.q_inf.is_full_rank()
    }

    pub fn require_full_rank(&self) -> Result<()> {
        if self.is_full_rank() {
            Ok(())
        } else {
            Err(Error::RankDeficient {
                rank: self.rank(),
                n: self.n(),
            })
        }
    }

    pub fn contains(&self, x: &Vector) -> bool {
        self.sqrt_pinv.contains(x, MEMBERSHIP_TOL)
    }

    /// `Q_∞^{−1}` (pseudoinverse).
    pub fn q_pinv(&self) -> &Matrix {
        &self.q_inf.pinv.inverse_on_range
    }

    /// `Q_∞^{−1/2}` (pseudoinverse).
    pub fn sqrt_q_pinv(&self) -> &Matrix {
        &self.sqrt_pinv.inverse_on_range
    }

    pub fn norm_sq(&self, x: &Vector) -> Result<f64> {
        h_inner(self, x, x)
    }

    /// Matrix (in `X` coordinates) of the operator `T` seen through the
    /// `H`-orthonormal frame: `Q_∞^{−1/2} T Q_∞^{1/2}`. Symmetric iff `T` is
    /// `H`-selfadjoint; its spectral norm is the `H`-operator norm.
    pub fn to_h_frame(&self, t: &Matrix) -> Matrix {
        self.sqrt_q_pinv() * t * &self.sqrt_q
    }

    /// Inverse of [`HSpace::to_h_frame`].
    pub fn from_h_frame(&self, f: &Matrix) -> Matrix {
        &self.sqrt_q * f * self.sqrt_q_pinv()
    }

    /// Operator norm of `T` acting on `H`.
    pub fn h_operator_norm(&self, t: &Matrix) -> f64 {
        spectral_norm(&self.to_h_frame(t))
    }
}

pub fn h_space(p: &ControlProblem) -> Result<HSpace> {
    let q_inf = gramian_infinite(p)?;
    Ok(h_space_from_gramian(q_inf))
}

pub fn h_space_from_gramian(q_inf: Gramian) -> HSpace {
    let spectrum = SymSpectrum::new(&q_inf.matrix);
    let sqrt_spectrum = SymSpectrum {
        values: spectrum.values.map(|v| v.max(0.0).sqrt()),
        vectors: spectrum.vectors.clone(),
    };
    let sqrt_q = sqrt_spectrum.map(|v| v);
    // √λ > √tol·√λ_max exactly when λ > tol·λ_max.
    let sqrt_pinv =
        PseudoInverse::from_spectrum(sqrt_q.clone(), &sqrt_spectrum, DEFAULT_REL_TOL.sqrt());
    let cutoff = DEFAULT_REL_TOL * spectrum.max_abs();
    let kernel: Vec<_> = (0..spectrum.values.len())
        .filter(|&j| spectrum.max_abs() == 0.0 || spectrum.values[j].abs() <= cutoff)
        .map(|j| spectrum.vectors.column(j).into_owned())
        .collect();
    let n = q_inf.matrix.nrows();
    let kernel_basis = if kernel.is_empty() {
        Matrix::zeros(n, 0)
    } else {
        Matrix::from_columns(&kernel)
    };
    HSpace {
        q_inf,
        sqrt_q,
        sqrt_pinv,
        kernel_basis,
    }
}

/// `⟨x, y⟩_H = ⟨Q_∞^{−1/2}x, Q_∞^{−1/2}y⟩_X`.
pub fn h_inner(h: &HSpace, x: &Vector, y: &Vector) -> Result<f64> {
    check_dim(h.n(), x)?;
    check_dim(h.n(), y)?;
    if !h.contains(x) || !h.contains(y) {
        return Err(Error::NotInH);
    }
    let sx = h.sqrt_q_pinv() * x;
    let sy = h.sqrt_q_pinv() * y;
    Ok(sx.dot(&sy))
}

pub(crate) fn check_dim(n: usize, x: &Vector) -> Result<()> {
    if x.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: x.len(),
        });
    }
    Ok(())
}

/// Whether `x ∈ R(Q_t^{1/2})` up to `tol·‖x‖`.
pub fn reachable_membership(g: &Gramian, x: &Vector, tol: f64) -> bool {
    g.pinv.contains(x, tol)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NullControllability {
    pub holds: bool,
    /// Time after which the reachable ranges stop growing.
    pub t0: f64,
}

/// Checks `R(e^{tA}) ⊆ R(Q_t^{1/2})`. For coercive `BB*` the time `T0` is 0;
/// otherwise it is the smallest point of a 16-step grid on `(0, t]` where the
/// numerical rank of `Q_s` reaches its maximum over the grid.
pub fn null_controllability_check(p: &ControlProblem, t: f64) -> Result<NullControllability> {
    let g = gramian_finite(p, t, GramianMethod::Quadrature)?;
    let e = expm(p.a(), t);
    let outside = &e - &g.pinv.range_projector * &e;
    let holds = outside.norm() <= MEMBERSHIP_TOL * e.norm();
    let t0 = if p.is_coercive() {
        0.0
    } else {
        const STEPS: usize = 16;
        let ranks: Vec<(f64, usize)> = (1..=STEPS)
            .map(|k| {
                let s = t * k as f64 / STEPS as f64;
                gramian_finite(p, s, GramianMethod::Quadrature).map(|g| (s, g.rank))
            })
            .collect::<Result<_>>()?;
        let max_rank = ranks.iter().map(|r| r.1).max().unwrap_or(0);
        ranks
            .iter()
            .find(|r| r.1 == max_rank)
            .map_or(t, |r| r.0)
    };
    Ok(NullControllability { holds, t0 })
}

/// Restriction `A₀` of `A` to `H`, in `X` coordinates.
#[derive(Debug, Clone)]
pub struct A0Operator {
    pub matrix: Matrix,
}

impl A0Operator {
    pub fn new(p: &ControlProblem, h: &HSpace) -> Self {
        let matrix = if h.is_full_rank() {
            p.a().clone()
        } else {
            p.a() * &h.q_inf.pinv.range_projector
        };
        Self { matrix }
    }

    /// `H`-adjoint `A₀* = Q_∞ A* Q_∞^{−1}` (full-rank regime).
    pub fn h_adjoint(&self, h: &HSpace) -> Result<Matrix> {
        h.require_full_rank()?;
        Ok(&h.q_inf.matrix * self.matrix.transpose() * h.q_pinv())
    }
}

/// `‖e^{sA₀*} Q_∞ − Q_∞ e^{sA*}‖_F`.
pub fn semigroup_transpose_identity(p: &ControlProblem, h: &HSpace, s: f64) -> Result<f64> {
    let a0_star = A0Operator::new(p, h).h_adjoint(h)?;
    let q = &h.q_inf.matrix;
    let lhs = expm(&a0_star, s) * q;
    let rhs = q * expm(&p.a().transpose(), s);
    Ok((lhs - rhs).norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{make_dense_model, make_spectral_model};
    use nalgebra::{dmatrix, dvector};

    fn scalar() -> ControlProblem {
        make_spectral_model(&[-1.0], &[1.0]).unwrap()
    }

    fn two_mode() -> ControlProblem {
        make_spectral_model(&[-1.0, -2.0], &[1.0, 1.0]).unwrap()
    }

    #[test]
    fn scalar_finite_gramian_closed_form() {
        let expect = (1.0 - (-2.0f64).exp()) / 2.0;
        for method in [GramianMethod::Quadrature, GramianMethod::MatrixOde] {
            let g = gramian_finite(&scalar(), 1.0, method).unwrap();
            assert!((g.matrix[(0, 0)] - expect).abs() < 1e-12, "{method:?}");
        }
        let g = gramian_finite(&scalar(), 20.0, GramianMethod::Quadrature).unwrap();
        assert!((g.matrix[(0, 0)] - 0.5).abs() < 1e-8);
    }

    #[test]
    fn tiny_horizon() {
        let p = make_dense_model(dmatrix![-1.0, 0.3; 0.0, -2.0], dmatrix![1.0; 2.0]).unwrap();
        let t = 1e-12;
        let g = gramian_finite(&p, t, GramianMethod::Quadrature).unwrap();
        let d = (&g.matrix - p.bbt() * t).norm();
        assert!(d <= 1e-11 * p.bbt().norm() * t, "{d:e}");
        assert!(SymSpectrum::new(&g.matrix).min() >= -1e-10 * g.matrix.norm());
    }

    #[test]
    fn horizon_must_be_positive() {
        for t in [0.0, -1.0, f64::NAN] {
            let err = gramian_finite(&scalar(), t, GramianMethod::Quadrature).unwrap_err();
            assert!(matches!(err, Error::HorizonNotPositive(_)));
        }
    }

    #[test]
    fn infinite_gramians() {
        let g = gramian_infinite(&scalar()).unwrap();
        assert!((g.matrix[(0, 0)] - 0.5).abs() < 1e-15);
        let g = gramian_infinite(&two_mode()).unwrap();
        assert!((&g.matrix - dmatrix![0.5, 0.0; 0.0, 0.25]).norm() < 1e-15);
        let p = make_dense_model(dmatrix![-1.0, 1.0; 0.0, -3.0], Matrix::zeros(2, 1)).unwrap();
        let g = gramian_infinite(&p).unwrap();
        assert_eq!(g.matrix, Matrix::zeros(2, 2));
        assert_eq!(g.rank, 0);
    }

    #[test]
    fn commuting_closed_form() {
        let p = make_spectral_model(&[-0.5, -3.0, -7.0], &[2.0, 0.1, 1.0]).unwrap();
        let g = gramian_infinite(&p).unwrap();
        let closed = -(p.a().clone().try_inverse().unwrap() * p.bbt()) * 0.5;
        assert!((g.matrix - closed).norm() < 1e-15);
    }

    #[test]
    fn h_space_examples() {
        let h = h_space(&two_mode()).unwrap();
        assert!((&h.sqrt_q - dmatrix![0.5f64.sqrt(), 0.0; 0.0, 0.5]).norm() < 1e-15);
        let x = dvector![1.0, 1.0];
        assert!((h_inner(&h, &x, &x).unwrap() - 6.0).abs() < 1e-13);
        assert_eq!(h_inner(&h, &Vector::zeros(2), &x).unwrap(), 0.0);

        let h = h_space(&scalar()).unwrap();
        assert!((h_inner(&h, &dvector![1.0], &dvector![1.0]).unwrap() - 2.0).abs() < 1e-14);

        let h = h_space_from_gramian(Gramian::from_matrix(f64::INFINITY, dmatrix![1.0, 0.0; 0.0, 0.0]));
        assert_eq!(h.rank(), 1);
        assert_eq!(h.kernel_basis.ncols(), 1);
        assert!((h.kernel_basis[(1, 0)].abs() - 1.0).abs() < 1e-15);
        assert_eq!(h_inner(&h, &dvector![0.0, 1.0], &dvector![1.0, 0.0]).unwrap_err(), Error::NotInH);

        let h = h_space_from_gramian(Gramian::from_matrix(f64::INFINITY, Matrix::identity(3, 3)));
        let x = dvector![0.3, -1.2, 2.0];
        assert!((h.norm_sq(&x).unwrap() - x.norm_squared()).abs() < 1e-14);
    }

    #[test]
    fn membership() {
        let g = Gramian::from_matrix(1.0, dmatrix![1.0, 0.0; 0.0, 0.0]);
        assert!(!reachable_membership(&g, &dvector![0.0, 1.0], 1e-8));
        assert!(reachable_membership(&g, &dvector![1.0, 1e-12], 1e-8));
        assert!(reachable_membership(&g, &dvector![0.0, 0.0], 1e-8));
        let g = Gramian::from_matrix(1.0, Matrix::identity(2, 2));
        assert!(reachable_membership(&g, &dvector![-3.0, 7.0], 1e-8));
    }

    #[test]
    fn null_controllability() {
        let nc = null_controllability_check(&scalar(), 0.1).unwrap();
        assert_eq!(nc, NullControllability { holds: true, t0: 0.0 });

        let p = make_spectral_model(&[-1.0, -2.0], &[1.0, 0.0]).unwrap();
        assert!(!null_controllability_check(&p, 1.0).unwrap().holds);

        let p = make_dense_model(dmatrix![-1.0, 2.0; 0.0, -3.0], dmatrix![1.0, 1.0; 0.0, 2.0]).unwrap();
        for t in [0.01, 1.0, 10.0] {
            assert!(null_controllability_check(&p, t).unwrap().holds);
        }
    }

    #[test]
    fn controllable_rank_deficient_b_reports_stabilization_time() {
        // Controllable through the coupling; BB* is singular.
        let p = make_dense_model(dmatrix![-1.0, 1.0; 0.0, -2.0], dmatrix![0.0; 1.0]).unwrap();
        let nc = null_controllability_check(&p, 1.0).unwrap();
        assert!(nc.holds);
        assert!(nc.t0 > 0.0 && nc.t0 <= 1.0);
    }

    #[test]
    fn semigroup_transpose() {
        let h = h_space(&scalar()).unwrap();
        assert_eq!(semigroup_transpose_identity(&scalar(), &h, 0.0).unwrap(), 0.0);
        assert!(semigroup_transpose_identity(&scalar(), &h, 1.0).unwrap() < 1e-12);
        let p = two_mode();
        let h = h_space(&p).unwrap();
        assert!(semigroup_transpose_identity(&p, &h, 0.7).unwrap() < 1e-10);

        let p = make_spectral_model(&[-1.0, -2.0], &[1.0, 0.0]).unwrap();
        let h = h_space(&p).unwrap();
        assert!(matches!(
            semigroup_transpose_identity(&p, &h, 0.5).unwrap_err(),
            Error::RankDeficient { .. }
        ));
    }
}
