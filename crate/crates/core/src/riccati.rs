//! Residuals and certificates for the non-standard algebraic Riccati equation
//!
//! ```text
//! X-form:  A*R + RA + R BB* R = 0                      (unknown R on X)
//! H-form:  ⟨Ax, Q_∞^{−1}Py⟩ + ⟨Q_∞^{−1}Px, Ay⟩ + ⟨B*Q_∞^{−1}Px, B*Q_∞^{−1}Py⟩ = 0
//! ```
//!
//! The two forms are related by `R = Q_∞^{−1}P`. `R = Q_∞^{−1}` and `P = I_H`
//! solve them, `I_H` dominates every solution, and in the commuting case the
//! solutions are exactly the orthogonal projections of `H` commuting with `A₀`.
//!
//! All `H`-metric quantities are computed in the `H`-orthonormal frame
//! `x = Q_∞^{1/2} ξ`, where an operator `T` becomes `Q_∞^{−1/2} T Q_∞^{1/2}`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::energy::AuxiliaryCost;
use crate::error::{Error, Result};
use crate::gramian::{
    check_dim, gramian_finite, h_inner, h_space, GramianMethod, HSpace,
};
use crate::operators::linalg::{symmetrize, Matrix, SymSpectrum, Vector};
use crate::operators::{expm, ControlProblem};

/// Residual threshold separating solutions from non-solutions.
pub const SOLUTION_THRESHOLD: f64 = 1e-9;

/// Default seed for sampled certificates.
pub const DEFAULT_SEED: u64 = 0x5EED;

/// Values of `a` used for the non-diagonal representatives on 2-dimensional
/// eigenspaces.
pub const FAMILY_SAMPLES: [f64; 3] = [0.25, 0.5, 0.75];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolutionForm {
    XForm,
    HForm,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSolution {
    pub form: SolutionForm,
    pub matrix: Matrix,
}

impl CandidateSolution {
    pub fn x_form(matrix: Matrix) -> Self {
        Self {
            form: SolutionForm::XForm,
            matrix,
        }
    }

    pub fn h_form(matrix: Matrix) -> Self {
        Self {
            form: SolutionForm::HForm,
            matrix,
        }
    }

    fn expect(&self, form: SolutionForm) -> Result<()> {
        if self.form != form {
            return Err(Error::WrongForm {
                expected: match form {
                    SolutionForm::XForm => "X-form",
                    SolutionForm::HForm => "H-form",
                },
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolutionReport {
    pub residual_norm: f64,
    pub is_solution: bool,
    /// Smallest eigenvalue of `I − P` on `H`.
    pub maximality_gap: Option<f64>,
    /// Smallest sampled slack in `½⟨Px,x⟩_H ≤ V^P(t,x) ≤ V(t,x)`.
    pub comparison_margin: Option<f64>,
}

impl SolutionReport {
    fn from_residual(residual_norm: f64) -> Self {
        Self {
            residual_norm,
            is_solution: residual_norm <= SOLUTION_THRESHOLD,
            maximality_gap: None,
            comparison_margin: None,
        }
    }
}

fn check_square(p: &ControlProblem, m: &Matrix) -> Result<()> {
    if m.nrows() != p.n() || m.ncols() != p.n() {
        return Err(Error::DimensionMismatch(format!(
            "candidate must be {n}x{n}, got {}x{}",
            m.nrows(),
            m.ncols(),
            n = p.n()
        )));
    }
    Ok(())
}

/// `‖A*R + RA + R BB* R‖_F / (1 + ‖R‖_F)`.
pub fn are_residual_x(p: &ControlProblem, r: &CandidateSolution) -> Result<f64> {
    r.expect(SolutionForm::XForm)?;
    check_square(p, &r.matrix)?;
    let r = &r.matrix;
    let a = p.a();
    let res = a.transpose() * r + r * a + r * p.bbt() * r;
    Ok(res.norm() / (1.0 + r.norm()))
}

/// Matrix of the H-form bilinear form in the `X` canonical basis.
fn h_form_bilinear(p: &ControlProblem, h: &HSpace, pm: &Matrix) -> Matrix {
    let r = h.q_pinv() * pm;
    let a = p.a();
    -(a.transpose() * &r + r.transpose() * a + r.transpose() * p.bbt() * &r)
}

/// Largest `|b(eᵢ, eⱼ)|` over an `H`-orthonormal basis `eᵢ = Q_∞^{1/2}εᵢ`, divided
/// by `1 + ‖P‖_H`.
pub fn are_residual_h(p: &ControlProblem, h: &HSpace, pc: &CandidateSolution) -> Result<f64> {
    pc.expect(SolutionForm::HForm)?;
    h.require_full_rank()?;
    check_square(p, &pc.matrix)?;
    let form = h_form_bilinear(p, h, &pc.matrix);
    let framed = &h.sqrt_q * form * &h.sqrt_q;
    let max = framed.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    Ok(max / (1.0 + h.h_operator_norm(&pc.matrix)))
}

/// Checks `R = Q_∞^{−1}` (X-form) and `P = I_H` (H-form).
pub fn verify_canonical_solutions(p: &ControlProblem) -> Result<(SolutionReport, SolutionReport)> {
    let h = h_space(p)?;
    h.require_full_rank()?;
    let x_res = are_residual_x(p, &CandidateSolution::x_form(h.q_pinv().clone()))?;
    let identity = Matrix::identity(p.n(), p.n());
    let h_res = are_residual_h(p, &h, &CandidateSolution::h_form(identity.clone()))?;
    let mut h_report = SolutionReport::from_residual(h_res);
    h_report.maximality_gap = Some(maximality_check(&h, &CandidateSolution::h_form(identity))?);
    Ok((SolutionReport::from_residual(x_res), h_report))
}

fn require_commuting(p: &ControlProblem) -> Result<()> {
    if !(p.is_commuting() && p.is_coercive()) {
        return Err(Error::NotCommutingModel);
    }
    Ok(())
}

/// `‖A₀P + PA₀ − 2PA₀P‖_H / ‖A₀‖_H` for commuting coercive models.
pub fn commuting_residual(p: &ControlProblem, pc: &CandidateSolution) -> Result<f64> {
    require_commuting(p)?;
    check_square(p, &pc.matrix)?;
    let h = h_space(p)?;
    commuting_residual_in(p, &h, &pc.matrix)
}

fn commuting_residual_in(p: &ControlProblem, h: &HSpace, pm: &Matrix) -> Result<f64> {
    h.require_full_rank()?;
    let a0 = p.a();
    let t = a0 * pm + pm * a0 - pm * a0 * pm * 2.0;
    Ok(h.h_operator_norm(&t) / h.h_operator_norm(a0))
}

/// `[[a, s√(a(1−a))], [s√(a(1−a)), 1−a]]`, a rank-one orthogonal projection.
pub fn projection_family_2d(a: f64, sign: i8) -> Result<Matrix> {
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::OutOfRange(format!("a = {a} not in (0,1)")));
    }
    let s = match sign {
        1 => 1.0,
        -1 => -1.0,
        _ => return Err(Error::OutOfRange(format!("sign {sign} not ±1"))),
    };
    let off = s * (a * (1.0 - a)).sqrt();
    Ok(Matrix::from_row_slice(2, 2, &[a, off, off, 1.0 - a]))
}

/// All diagonal 0/1 projections (in the `H`-orthonormal eigenbasis) plus,
/// for every pair of coordinates sharing an eigenvalue, the rotated
/// representatives from [`projection_family_2d`] at [`FAMILY_SAMPLES`].
pub fn enumerate_commuting_solutions(
    p: &ControlProblem,
    max_count: usize,
) -> Result<Vec<CandidateSolution>> {
    let spectral = p.spectral().ok_or(Error::NotSpectral)?;
    require_commuting(p)?;
    let n = p.n();
    let diagonal_count: u128 = if n >= 127 { u128::MAX } else { 1u128 << n };
    let pairs: Vec<(usize, usize)> = spectral
        .eigenspaces()
        .into_iter()
        .flat_map(|r| {
            let r2 = r.clone();
            r.flat_map(move |i| r2.clone().filter(move |&j| j > i).map(move |j| (i, j)))
        })
        .collect();
    let family_count = (pairs.len() * FAMILY_SAMPLES.len() * 2) as u128;
    let total = diagonal_count.saturating_add(family_count);
    if total > max_count as u128 {
        return Err(Error::TooManySolutions {
            count: total,
            limit: max_count,
        });
    }
    let h = h_space(p)?;
    let mut out = Vec::with_capacity(total as usize);
    for mask in 0..(1usize << n) {
        let diag = Vector::from_iterator(n, (0..n).map(|i| ((mask >> i) & 1) as f64));
        out.push(CandidateSolution::h_form(Matrix::from_diagonal(&diag)));
    }
    for &(i, j) in &pairs {
        for &a in &FAMILY_SAMPLES {
            for sign in [1i8, -1] {
                let block = projection_family_2d(a, sign)?;
                let mut frame = Matrix::zeros(n, n);
                frame[(i, i)] = block[(0, 0)];
                frame[(i, j)] = block[(0, 1)];
                frame[(j, i)] = block[(1, 0)];
                frame[(j, j)] = block[(1, 1)];
                out.push(CandidateSolution::h_form(h.from_h_frame(&frame)));
            }
        }
    }
    Ok(out)
}

/// Smallest eigenvalue of `I − P` as an operator on `H`.
pub fn maximality_check(h: &HSpace, pc: &CandidateSolution) -> Result<f64> {
    pc.expect(SolutionForm::HForm)?;
    h.require_full_rank()?;
    let n = h.n();
    let frame = symmetrize(&h.to_h_frame(&pc.matrix));
    Ok(SymSpectrum::new(&(Matrix::identity(n, n) - frame)).min())
}

/// Gaussian sample of `H` (the whole of `X` in the full-rank regime).
pub fn random_h_vector(h: &HSpace, rng: &mut impl Rng) -> Vector {
    let n = h.n();
    let raw = Vector::from_iterator(n, (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)));
    &h.q_inf.pinv.range_projector * raw
}

/// Verifies `½⟨Px,x⟩_H ≤ V^P(t,x) ≤ V(t,x)` on `samples` random `x ∈ H`.
/// The returned report carries the residual, maximality gap and the
/// smallest slack observed.
pub fn comparison_check(
    p: &ControlProblem,
    pc: &CandidateSolution,
    t: f64,
    samples: usize,
    seed: u64,
) -> Result<SolutionReport> {
    pc.expect(SolutionForm::HForm)?;
    if !p.is_coercive() {
        let s = SymSpectrum::new(p.bbt());
        return Err(Error::NotCoercive {
            min: s.min(),
            max: s.max_abs(),
        });
    }
    let h = h_space(p)?;
    let residual = are_residual_h(p, &h, pc)?;
    let gap = maximality_check(&h, pc)?;
    let solver = AuxiliarySolver::new(p, &h, t)?;
    let n_cost = AuxiliaryCost::new(&h, pc.matrix.clone())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut margin = f64::INFINITY;
    for _ in 0..samples {
        let x = random_h_vector(&h, &mut rng);
        let lower = 0.5 * h_inner(&h, &(&pc.matrix * &x), &x)?;
        let middle = solver.value(&h, &n_cost, &x)?;
        let upper = solver.value_plain(&x);
        margin = margin.min(middle - lower).min(upper - middle);
    }
    Ok(SolutionReport {
        residual_norm: residual,
        is_solution: residual <= SOLUTION_THRESHOLD,
        maximality_gap: Some(gap),
        comparison_margin: Some(if samples == 0 { 0.0 } else { margin }),
    })
}

/// `V^N(t, ·)` for a fixed `(p, t)` with full-rank `Q_t` and `Q_∞`, reused
/// across many costs and targets.
pub(crate) struct AuxiliarySolver {
    e: Matrix,
    qt_inv: Matrix,
    et_qt_inv_e: Matrix,
}

impl AuxiliarySolver {
    pub(crate) fn new(p: &ControlProblem, h: &HSpace, t: f64) -> Result<Self> {
        h.require_full_rank()?;
        let g = gramian_finite(p, t, GramianMethod::Quadrature)?;
        if !g.is_full_rank() {
            return Err(Error::RankDeficient {
                rank: g.rank,
                n: p.n(),
            });
        }
        let e = expm(p.a(), t);
        let qt_inv = g.pinv.inverse_on_range.clone();
        let et_qt_inv_e = symmetrize(&(e.transpose() * &qt_inv * &e));
        Ok(Self {
            e,
            qt_inv,
            et_qt_inv_e,
        })
    }

    fn value_plain(&self, x: &Vector) -> f64 {
        0.5 * x.dot(&(&self.qt_inv * x))
    }

    fn value(&self, h: &HSpace, n_cost: &AuxiliaryCost, x: &Vector) -> Result<f64> {
        let s = symmetrize(&(h.q_pinv() * &n_cost.n_h));
        let hess = &self.et_qt_inv_e + s;
        let rhs = self.e.transpose() * (&self.qt_inv * x);
        // Modes damped below roundoff by e^{tA} and not penalized by N leave
        // the Hessian singular; the minimum value is still attained.
        let z = match hess.clone().cholesky() {
            Some(c) => c.solve(&rhs),
            None => {
                let eps = 1e-13 * hess.norm();
                hess.svd(true, true)
                    .solve(&rhs, eps)
                    .map_err(|_| Error::Singular("auxiliary Hessian"))?
            }
        };
        let gap = x - &self.e * &z;
        Ok(0.5 * gap.dot(&(&self.qt_inv * &gap)) + 0.5 * n_cost.quadratic(h, &z)?)
    }
}

/// Both sides of `d/dt⟨P(t)x,y⟩_H = −⟨Ax,P(t)y⟩_H − ⟨P(t)x,Ay⟩_H − ⟨B*Q_∞^{−1}P(t)x, B*Q_∞^{−1}P(t)y⟩`
/// with `P(t) = Q_∞Q_t^{−1}`; the left side by central differences.
pub fn differential_riccati_sides(
    p: &ControlProblem,
    t: f64,
    step_h: f64,
    x: &Vector,
    y: &Vector,
) -> Result<(f64, f64)> {
    check_dim(p.n(), x)?;
    check_dim(p.n(), y)?;
    if !(t > 0.0) {
        return Err(Error::HorizonNotPositive(t));
    }
    if !(step_h > 0.0 && step_h <= t / 10.0) {
        return Err(Error::OutOfRange(format!("step {step_h} not in (0, t/10]")));
    }
    let h = h_space(p)?;
    h.require_full_rank()?;
    let p_of = |s: f64| -> Result<Matrix> {
        let g = gramian_finite(p, s, GramianMethod::Quadrature)?;
        if !g.is_full_rank() {
            return Err(Error::RankDeficient {
                rank: g.rank,
                n: p.n(),
            });
        }
        Ok(&h.q_inf.matrix * &g.pinv.inverse_on_range)
    };
    let form = |pm: &Matrix| h_inner(&h, &(pm * x), y);
    let lhs = (form(&p_of(t + step_h)?)? - form(&p_of(t - step_h)?)?) / (2.0 * step_h);

    let pt = p_of(t)?;
    let a = p.a();
    let gain = p.b().transpose() * h.q_pinv() * &pt;
    let rhs = -h_inner(&h, &(a * x), &(&pt * y))? - h_inner(&h, &(&pt * x), &(a * y))?
        - (&gain * x).dot(&(&gain * y));
    Ok((lhs, rhs))
}

/// `|LHS − RHS|` of the differential Riccati identity at time `t`.
pub fn differential_riccati_residual(
    p: &ControlProblem,
    t: f64,
    step_h: f64,
    x: &Vector,
    y: &Vector,
) -> Result<f64> {
    let (lhs, rhs) = differential_riccati_sides(p, t, step_h, x, y)?;
    Ok((lhs - rhs).abs())
}

#[derive(Debug, Clone, Serialize)]
pub struct SolutionEntry {
    pub matrix: Vec<Vec<f64>>,
    pub residual: f64,
    pub commuting_residual: f64,
    pub maximality_gap: f64,
    pub comparison_margin: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CanonicalCertificate {
    pub x_form: SolutionReport,
    pub h_form: SolutionReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct Certificate {
    pub canonical: CanonicalCertificate,
    pub solutions: Vec<SolutionEntry>,
    pub seed: u64,
    pub notes: Vec<String>,
    pub passed: bool,
}

#[derive(Debug, Clone)]
pub struct CertificateOptions {
    pub horizons: Vec<f64>,
    pub samples: usize,
    pub seed: u64,
    pub max_solutions: usize,
    /// Residual bound for accepting a candidate.
    pub threshold: f64,
    /// Fail with `NotCoercive` instead of skipping the comparison checks.
    pub require_comparison: bool,
}

impl Default for CertificateOptions {
    fn default() -> Self {
        Self {
            horizons: vec![1.0, 2.0, 5.0],
            samples: 50,
            seed: DEFAULT_SEED,
            max_solutions: 1 << 12,
            threshold: SOLUTION_THRESHOLD,
            require_comparison: false,
        }
    }
}

/// Canonical solutions, plus the full solution set with maximality and
/// comparison checks when the model is commuting and coercive.
pub fn certificate(p: &ControlProblem, opts: &CertificateOptions) -> Result<Certificate> {
    let mut notes = vec![
        "finite-dimensional full-rank regime: every candidate is total and belongs to the admissible class by assumption".to_string(),
    ];
    if opts.require_comparison && !p.is_coercive() {
        let s = SymSpectrum::new(p.bbt());
        return Err(Error::NotCoercive {
            min: s.min(),
            max: s.max_abs(),
        });
    }
    let (mut x_form, mut h_form) = verify_canonical_solutions(p)?;
    x_form.is_solution = x_form.residual_norm <= opts.threshold;
    h_form.is_solution = h_form.residual_norm <= opts.threshold;
    let mut passed = x_form.is_solution && h_form.is_solution;
    let h = h_space(p)?;

    let mut solutions = Vec::new();
    if p.spectral().is_some() && p.is_commuting() && p.is_coercive() {
        let candidates = enumerate_commuting_solutions(p, opts.max_solutions)?;
        let solvers = opts
            .horizons
            .iter()
            .map(|&t| AuxiliarySolver::new(p, &h, t))
            .collect::<Result<Vec<_>>>()?;
        for (idx, cand) in candidates.iter().enumerate() {
            let residual = are_residual_h(p, &h, cand)?;
            let comm = commuting_residual_in(p, &h, &cand.matrix)?;
            let gap = maximality_check(&h, cand)?;
            let n_cost = AuxiliaryCost::new(&h, cand.matrix.clone())?;
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(idx as u64));
            let mut margin = f64::INFINITY;
            for solver in &solvers {
                for _ in 0..opts.samples {
                    let x = random_h_vector(&h, &mut rng);
                    let lower = 0.5 * h_inner(&h, &(&cand.matrix * &x), &x)?;
                    let middle = solver.value(&h, &n_cost, &x)?;
                    let upper = solver.value_plain(&x);
                    margin = margin.min(middle - lower).min(upper - middle);
                }
            }
            let margin = (margin.is_finite()).then_some(margin);
            passed &= residual <= opts.threshold
                && gap >= -1e-10
                && margin.is_none_or(|m| m >= -1e-8);
            solutions.push(SolutionEntry {
                matrix: rows(&cand.matrix),
                residual,
                commuting_residual: comm,
                maximality_gap: gap,
                comparison_margin: margin,
            });
        }
    } else {
        notes.push("model is not commuting and coercive: solution set not enumerated".to_string());
    }
    Ok(Certificate {
        canonical: CanonicalCertificate { x_form, h_form },
        solutions,
        seed: opts.seed,
        notes,
        passed,
    })
}

pub(crate) fn rows(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect())
        .collect()
}

/// Operator-norm distance `‖P² − P‖_H` and `‖A₀P − PA₀‖_H` of a candidate.
pub fn projection_defects(p: &ControlProblem, h: &HSpace, pm: &Matrix) -> (f64, f64) {
    let a0 = p.a();
    let idem = h.h_operator_norm(&(pm * pm - pm));
    let comm = h.h_operator_norm(&(a0 * pm - pm * a0));
    (idem, comm)
}
