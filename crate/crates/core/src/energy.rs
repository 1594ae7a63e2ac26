//! Minimum-energy value functions and optimal synthesis.
//!
//! The finite-horizon value `V(t, x) = ½⟨Q_t^{−1}x, x⟩` is the least energy
//! `½∫‖u‖²` needed to reach `x` at time 0 starting from 0 at time `−t`; the
//! infinite-horizon value is `V_∞(x) = ½‖x‖²_H`. For `x ∈ R(Q_∞)` the optimal
//! control and trajectory are
//!
//! ```text
//! û(r) = B* e^{−rA*} Q_∞^{−1} x,     ŷ(r) = Q_∞ e^{−rA*} Q_∞^{−1} x,     r ≤ 0,
//! ```
//!
//! related by the feedback `û = B* Q_∞^{−1} ŷ` and the backward closed-loop
//! equation `ŷ' = −Q_∞ A* Q_∞^{−1} ŷ`.

use nalgebra::SVD;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gramian::{
    check_dim, gramian_finite, h_inner, h_space, reachable_membership, truncation_horizon,
    GramianMethod, HSpace, MEMBERSHIP_TOL,
};
use crate::operators::linalg::{spectral_norm, Matrix, Vector};
use crate::operators::{expm, ControlProblem};
use crate::quadrature::{lagrange_basis, simpson_weights};

/// Minimum number of points of the default synthesis grid.
pub const DEFAULT_GRID_POINTS: usize = 2049;

/// Largest `h·‖A‖` allowed on the default synthesis grid.
const GRID_STEP_SCALE: f64 = 0.02;

/// Time-gridded control `u: [r₀, r_K] → ℝᵐ` with its quadrature weights.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlSignal {
    pub grid: Vec<f64>,
    pub values: Vec<Vector>,
    pub quad_weights: Vec<f64>,
}

impl ControlSignal {
    /// Signal with composite Simpson weights on `grid`.
    pub fn new(grid: Vec<f64>, values: Vec<Vector>) -> Result<Self> {
        validate_grid(&grid)?;
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if let Some(first) = values.first() {
            if values.iter().any(|v| v.len() != first.len()) {
                return Err(Error::DimensionMismatch("control values differ in length".into()));
            }
        }
        let quad_weights = simpson_weights(&grid);
        Ok(Self {
            grid,
            values,
            quad_weights,
        })
    }

    pub fn zeros(grid: Vec<f64>, m: usize) -> Result<Self> {
        let values = vec![Vector::zeros(m); grid.len()];
        Self::new(grid, values)
    }

    pub fn from_fn(grid: Vec<f64>, f: impl Fn(f64) -> Vector) -> Result<Self> {
        let values = grid.iter().map(|&r| f(r)).collect();
        Self::new(grid, values)
    }

    pub fn dim(&self) -> usize {
        self.values.first().map_or(0, Vector::len)
    }

    /// Piecewise-cubic Lagrange interpolation on the four nearest nodes.
    pub fn sample(&self, tau: f64) -> Vector {
        interpolate(&self.grid, &self.values, tau)
    }

    /// `v(σ) = −u(−σ)`, defined on the reflected grid.
    pub fn time_reversed(&self) -> Self {
        let grid: Vec<f64> = self.grid.iter().rev().map(|r| -r).collect();
        let values: Vec<Vector> = self.values.iter().rev().map(|v| -v).collect();
        let quad_weights = self.quad_weights.iter().rev().copied().collect();
        Self {
            grid,
            values,
            quad_weights,
        }
    }
}

/// Time-gridded state path.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub grid: Vec<f64>,
    pub states: Vec<Vector>,
}

impl Trajectory {
    pub fn last(&self) -> &Vector {
        self.states.last().expect("trajectory is non-empty")
    }
}

fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::GridMismatch("empty grid".into()));
    }
    if grid.iter().any(|r| !r.is_finite()) || grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::GridMismatch("grid must be finite and strictly increasing".into()));
    }
    Ok(())
}

fn interpolate(grid: &[f64], values: &[Vector], tau: f64) -> Vector {
    let k = grid.len();
    if k == 1 {
        return values[0].clone();
    }
    // Index of the interval [grid[i], grid[i+1]] containing tau (clamped).
    let i = match grid.binary_search_by(|g| g.total_cmp(&tau)) {
        Ok(exact) => return values[exact].clone(),
        Err(pos) => pos.clamp(1, k - 1) - 1,
    };
    let width = 4.min(k);
    let start = (i as isize - 1).clamp(0, (k - width) as isize) as usize;
    let pts = &grid[start..start + width];
    let mut out = Vector::zeros(values[0].len());
    for (j, v) in values[start..start + width].iter().enumerate() {
        out.axpy(lagrange_basis(pts, j, tau), v, 1.0);
    }
    out
}

/// Uniform grid of `points` nodes on `[a, b]`, with `b` hit exactly.
pub fn uniform_grid(a: f64, b: f64, points: usize) -> Vec<f64> {
    assert!(points >= 2 && a < b);
    let h = (b - a) / (points - 1) as f64;
    let mut g: Vec<f64> = (0..points).map(|k| a + h * k as f64).collect();
    g[points - 1] = b;
    g
}

/// Default synthesis grid on `[−T_max, 0]` for a target of norm `x_norm`:
/// uniform, at least [`DEFAULT_GRID_POINTS`] nodes and fine enough that
/// `h·‖A‖ ≤ 0.02`, with an even number of intervals.
pub fn default_grid(p: &ControlProblem, x_norm: f64) -> Vec<f64> {
    let t_max = truncation_horizon(p, x_norm, 0.0);
    let rate = spectral_norm(p.a()).max(p.decay_omega());
    let mut points = ((t_max * rate / GRID_STEP_SCALE).ceil() as usize + 1).max(DEFAULT_GRID_POINTS);
    if points.is_multiple_of(2) {
        points += 1;
    }
    uniform_grid(-t_max, 0.0, points)
}

/// `V(t, x) = ½⟨Q_t^{−1}x, x⟩`.
pub fn value_finite(p: &ControlProblem, t: f64, x: &Vector) -> Result<f64> {
    check_dim(p.n(), x)?;
    let g = gramian_finite(p, t, GramianMethod::Quadrature)?;
    if !reachable_membership(&g, x, MEMBERSHIP_TOL) {
        return Err(Error::NotReachable);
    }
    Ok(0.5 * g.pinv.apply(x).dot(x))
}

/// `V_∞(x) = ½‖x‖²_H`.
pub fn value_infinite(p: &ControlProblem, x: &Vector) -> Result<f64> {
    let h = h_space(p)?;
    Ok(0.5 * h_inner(&h, x, x)?)
}

fn range_q_preimage(h: &HSpace, x: &Vector) -> Result<Vector> {
    check_dim(h.n(), x)?;
    if !h.q_inf.pinv.contains(x, MEMBERSHIP_TOL) {
        return Err(Error::NotInRangeQ);
    }
    Ok(h.q_inf.pinv.apply(x))
}

/// Samples `û(r) = B* e^{−rA*} Q_∞^{−1} x` on `grid`.
pub fn optimal_control_infinite(
    p: &ControlProblem,
    x: &Vector,
    grid: &[f64],
) -> Result<ControlSignal> {
    let h = h_space(p)?;
    let w = range_q_preimage(&h, x)?;
    let at = p.a().transpose();
    let bt = p.b().transpose();
    ControlSignal::from_fn(grid.to_vec(), |r| &bt * (expm(&at, -r) * &w))
}

/// Samples `ŷ(r) = Q_∞ e^{−rA*} Q_∞^{−1} x` on `grid`; `ŷ(0) = x` exactly.
pub fn optimal_trajectory_infinite(
    p: &ControlProblem,
    x: &Vector,
    grid: &[f64],
) -> Result<Trajectory> {
    validate_grid(grid)?;
    let h = h_space(p)?;
    let w = range_q_preimage(&h, x)?;
    let at = p.a().transpose();
    let q = &h.q_inf.matrix;
    let states = grid
        .iter()
        .map(|&r| if r == 0.0 { x.clone() } else { q * (expm(&at, -r) * &w) })
        .collect();
    Ok(Trajectory {
        grid: grid.to_vec(),
        states,
    })
}

/// Optimal control on `[−t, 0]` from `0` to `x`: `u(r) = B* e^{−rA*} Q_t^{−1} x`.
pub fn optimal_control_finite(
    p: &ControlProblem,
    t: f64,
    x: &Vector,
    grid: &[f64],
) -> Result<ControlSignal> {
    check_dim(p.n(), x)?;
    let g = gramian_finite(p, t, GramianMethod::Quadrature)?;
    if !reachable_membership(&g, x, MEMBERSHIP_TOL) {
        return Err(Error::NotReachable);
    }
    let w = g.pinv.apply(x);
    let at = p.a().transpose();
    let bt = p.b().transpose();
    ControlSignal::from_fn(grid.to_vec(), |r| &bt * (expm(&at, -r) * &w))
}

/// Mild solution `y(r) = e^{(r−s)A}z + ∫ₛʳ e^{(r−τ)A}Bu(τ)dτ` on `[s, t]`,
/// reported at `s`, every control node strictly inside `(s, t)`, and `t`.
pub fn simulate_mild(
    p: &ControlProblem,
    z: &Vector,
    u: &ControlSignal,
    s: f64,
    t: f64,
) -> Result<Trajectory> {
    propagate(p.a(), p.b(), z, u, s, t)
}

/// Variation-of-constants stepping for `y' = Ay + Bu` with arbitrary `A`.
/// Each step is exact for the homogeneous part and applies Simpson's rule to
/// the forcing, with the control evaluated by cubic interpolation.
pub(crate) fn propagate(
    a: &Matrix,
    b: &Matrix,
    z: &Vector,
    u: &ControlSignal,
    s: f64,
    t: f64,
) -> Result<Trajectory> {
    check_dim(a.nrows(), z)?;
    if u.dim() != b.ncols() {
        return Err(Error::GridMismatch(format!(
            "control has dimension {}, B has {} columns",
            u.dim(),
            b.ncols()
        )));
    }
    if !(s <= t) {
        return Err(Error::GridMismatch(format!("interval [{s}, {t}] is empty")));
    }
    let (first, last) = (u.grid[0], *u.grid.last().unwrap());
    let slack = 1e-12 * (1.0 + first.abs().max(last.abs()));
    if s < first - slack || t > last + slack {
        return Err(Error::GridMismatch(format!(
            "control grid [{first}, {last}] does not cover [{s}, {t}]"
        )));
    }

    let edge = 1e-12 * (1.0 + s.abs().max(t.abs()));
    let mut grid = vec![s];
    grid.extend(u.grid.iter().copied().filter(|&r| r > s + edge && r < t - edge));
    if t > s {
        grid.push(t);
    }

    let mut states = Vec::with_capacity(grid.len());
    states.push(z.clone());
    let mut cache: Option<(f64, Matrix, Matrix)> = None;
    let mut y = z.clone();
    for w in grid.windows(2) {
        let (r0, r1) = (w[0], w[1]);
        let h = r1 - r0;
        let (e_full, e_half) = match &cache {
            Some((hc, ef, eh)) if (hc - h).abs() <= 1e-13 * h => (ef.clone(), eh.clone()),
            _ => {
                let ef = expm(a, h);
                let eh = expm(a, 0.5 * h);
                cache = Some((h, ef.clone(), eh.clone()));
                (ef, eh)
            }
        };
        let u0 = b * u.sample(r0);
        let um = b * u.sample(0.5 * (r0 + r1));
        let u1 = b * u.sample(r1);
        let forcing = (&e_full * u0 + &e_half * um * 4.0 + u1) * (h / 6.0);
        y = &e_full * y + forcing;
        states.push(y.clone());
    }
    Ok(Trajectory { grid, states })
}

/// `J(u) = ½∫‖u(r)‖² dr` with the signal's quadrature weights.
pub fn energy_of(u: &ControlSignal) -> f64 {
    0.5 * u
        .values
        .iter()
        .zip(&u.quad_weights)
        .map(|(v, w)| w * v.norm_squared())
        .sum::<f64>()
}

fn same_grid(a: &[f64], b: &[f64]) -> Result<()> {
    let scale = a.iter().chain(b).fold(1.0_f64, |m, v| m.max(v.abs()));
    if a.len() != b.len() || a.iter().zip(b).any(|(x, y)| (x - y).abs() > 1e-12 * scale) {
        return Err(Error::GridMismatch("control and trajectory grids differ".into()));
    }
    Ok(())
}

/// `max_r ‖u(r) − B* Q_∞^{−1} y(r)‖`.
pub fn feedback_residual(p: &ControlProblem, traj: &Trajectory, u: &ControlSignal) -> Result<f64> {
    same_grid(&traj.grid, &u.grid)?;
    let h = h_space(p)?;
    let gain = p.b().transpose() * h.q_pinv();
    Ok(traj
        .states
        .iter()
        .zip(&u.values)
        .map(|(y, v)| (v - &gain * y).norm())
        .fold(0.0, f64::max))
}

/// Max over interior nodes of `‖(y_{k+1} − y_{k−1})/2h + Q_∞A*Q_∞^{−1} y_k‖`.
pub fn bcle_residual(p: &ControlProblem, traj: &Trajectory) -> Result<f64> {
    let h = h_space(p)?;
    h.require_full_rank()?;
    let g = &traj.grid;
    if g.len() < 3 {
        return Err(Error::GridMismatch("need at least three nodes".into()));
    }
    let step = g[1] - g[0];
    if g.windows(2).any(|w| ((w[1] - w[0]) - step).abs() > 1e-9 * step) {
        return Err(Error::GridMismatch("grid is not uniform".into()));
    }
    let generator = &h.q_inf.matrix * p.a().transpose() * h.q_pinv();
    Ok((1..g.len() - 1)
        .map(|k| {
            let fd = (&traj.states[k + 1] - &traj.states[k - 1]) / (2.0 * step);
            (fd + &generator * &traj.states[k]).norm()
        })
        .fold(0.0, f64::max))
}

/// Operator `N` on `H`, stored in `X` coordinates; the cost is `z ↦ ⟨Nz, z⟩_H`.
#[derive(Debug, Clone)]
pub struct AuxiliaryCost {
    pub n_h: Matrix,
}

impl AuxiliaryCost {
    /// Checks that `N` is selfadjoint and nonnegative in `H`.
    pub fn new(h: &HSpace, n_h: Matrix) -> Result<Self> {
        if n_h.nrows() != h.n() || n_h.ncols() != h.n() {
            return Err(Error::DimensionMismatch(format!(
                "N must be {n}x{n}",
                n = h.n()
            )));
        }
        let frame = h.to_h_frame(&n_h);
        let asym = (&frame - frame.transpose()).norm();
        if asym > 1e-9 * (1.0 + frame.norm()) {
            return Err(Error::NotSymmetric { asymmetry: asym });
        }
        Ok(Self { n_h })
    }

    pub fn scaled_identity(n: usize, c: f64) -> Self {
        Self {
            n_h: Matrix::identity(n, n) * c,
        }
    }

    /// `⟨Nz, z⟩_H`.
    pub fn quadratic(&self, h: &HSpace, z: &Vector) -> Result<f64> {
        h_inner(h, &(&self.n_h * z), z)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuxiliaryValue {
    pub value: f64,
    pub argmin_z: Vec<f64>,
}

/// `V^N(t, x) = inf_{z ∈ H} [V(t, x − e^{tA}z) + ½⟨Nz, z⟩_H]`, solved as one
/// equality-constrained quadratic program over `z` in the range of `Q_∞`.
pub fn value_auxiliary(
    p: &ControlProblem,
    n_cost: &AuxiliaryCost,
    t: f64,
    x: &Vector,
) -> Result<AuxiliaryValue> {
    check_dim(p.n(), x)?;
    let h = h_space(p)?;
    let g = gramian_finite(p, t, GramianMethod::Quadrature)?;
    let e = expm(p.a(), t);

    // z = U w with U an orthonormal basis of R(Q_∞).
    let u = range_basis(&h.q_inf.pinv.range_projector, h.rank());
    let eu = &e * &u;
    let qt_pinv = &g.pinv.inverse_on_range;
    let s_w = {
        let m = u.transpose() * h.q_pinv() * &n_cost.n_h * &u;
        (&m + m.transpose()) * 0.5
    };
    let hess = eu.transpose() * qt_pinv * &eu + s_w;
    let grad = eu.transpose() * qt_pinv * x;

    // x − E z must stay in R(Q_t).
    let kernel = complement_basis(&g.pinv.range_projector, g.rank);
    let k_eu = kernel.transpose() * &eu;
    let k_x = kernel.transpose() * x;
    let r = u.ncols();
    let c = kernel.ncols();
    let mut kkt = Matrix::zeros(r + c, r + c);
    kkt.view_mut((0, 0), (r, r)).copy_from(&hess);
    kkt.view_mut((r, 0), (c, r)).copy_from(&k_eu);
    kkt.view_mut((0, r), (r, c)).copy_from(&k_eu.transpose());
    let mut rhs = Vector::zeros(r + c);
    rhs.rows_mut(0, r).copy_from(&grad);
    rhs.rows_mut(r, c).copy_from(&k_x);

    let w = if r + c == 0 {
        Vector::zeros(0)
    } else {
        let scale = kkt.norm().max(f64::MIN_POSITIVE);
        let sol = SVD::new(kkt, true, true)
            .solve(&rhs, 1e-13 * scale)
            .map_err(|_| Error::Singular("auxiliary KKT system"))?;
        sol.rows(0, r).into_owned()
    };
    let z = &u * &w;
    let gap = x - &e * &z;
    if g.pinv.off_range_norm(&gap) > MEMBERSHIP_TOL * x.norm() {
        return Err(Error::NotReachableFromH);
    }
    let value = 0.5 * gap.dot(&(qt_pinv * &gap)) + 0.5 * n_cost.quadratic(&h, &z)?;
    Ok(AuxiliaryValue {
        value,
        argmin_z: z.iter().copied().collect(),
    })
}

/// Orthonormal basis of the range of an orthogonal projector of known rank.
fn range_basis(projector: &Matrix, rank: usize) -> Matrix {
    let s = crate::operators::linalg::SymSpectrum::new(projector);
    s.vectors.columns(0, rank).into_owned()
}

fn complement_basis(projector: &Matrix, rank: usize) -> Matrix {
    let n = projector.nrows();
    let s = crate::operators::linalg::SymSpectrum::new(projector);
    s.vectors.columns(rank, n - rank).into_owned()
}

/// Runs `(z, u)` forward on its grid `[s, e]` to `x`, then the reversed
/// system `w' = −Aw + Bv`, `v(σ) = −u(−σ)`, from `x` back to time `−s`.
/// Returns `|J^N(z,u) − Ĵ^N(x,v)| + ‖w(−s) − z‖`.
pub fn time_reversal_check(
    p: &ControlProblem,
    n_cost: &AuxiliaryCost,
    z: &Vector,
    u: &ControlSignal,
) -> Result<f64> {
    let h = h_space(p)?;
    let (s, e) = (u.grid[0], *u.grid.last().unwrap());
    let forward = propagate(p.a(), p.b(), z, u, s, e)?;
    let x = forward.last().clone();
    let j_forward = 0.5 * n_cost.quadratic(&h, z)? + energy_of(u);

    let v = u.time_reversed();
    let minus_a = -p.a();
    let backward = propagate(&minus_a, p.b(), &x, &v, -e, -s)?;
    let w_end = backward.last();
    let j_backward = 0.5 * n_cost.quadratic(&h, w_end)? + energy_of(&v);
    Ok((j_forward - j_backward).abs() + (w_end - z).norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gramian::gramian_infinite;
    use crate::operators::{make_dense_model, make_spectral_model};
    use nalgebra::{dmatrix, dvector};

    fn scalar() -> ControlProblem {
        make_spectral_model(&[-1.0], &[1.0]).unwrap()
    }

    fn two_mode() -> ControlProblem {
        make_spectral_model(&[-1.0, -2.0], &[1.0, 1.0]).unwrap()
    }

    #[test]
    fn finite_values() {
        let q1 = (1.0 - (-2.0f64).exp()) / 2.0;
        let v = value_finite(&scalar(), 1.0, &dvector![1.0]).unwrap();
        assert!((v - 0.5 / q1).abs() < 1e-12);
        assert!((v - 1.156517642749665).abs() < 1e-12);
        assert_eq!(value_finite(&scalar(), 1.0, &dvector![0.0]).unwrap(), 0.0);
        let v = value_finite(&scalar(), 20.0, &dvector![1.0]).unwrap();
        assert!((v - 1.0).abs() < 1e-7);
    }

    #[test]
    fn unreachable_state() {
        let p = make_spectral_model(&[-1.0, -2.0], &[1.0, 0.0]).unwrap();
        assert_eq!(value_finite(&p, 1.0, &dvector![0.0, 1.0]).unwrap_err(), Error::NotReachable);
        assert_eq!(value_infinite(&p, &dvector![0.0, 1.0]).unwrap_err(), Error::NotInH);
    }

    #[test]
    fn infinite_values() {
        assert!((value_infinite(&scalar(), &dvector![1.0]).unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(value_infinite(&scalar(), &dvector![0.0]).unwrap(), 0.0);
        assert!((value_infinite(&two_mode(), &dvector![1.0, 1.0]).unwrap() - 3.0).abs() < 1e-13);
    }

    #[test]
    fn scalar_optimal_control_and_trajectory() {
        let grid = vec![-1.0, -0.5, 0.0];
        let u = optimal_control_infinite(&scalar(), &dvector![1.0], &grid).unwrap();
        assert!((u.values[0][0] - 2.0 * (-1.0f64).exp()).abs() < 1e-14);
        assert!((u.values[0][0] - 0.73575888).abs() < 1e-8);
        let y = optimal_trajectory_infinite(&scalar(), &dvector![1.0], &grid).unwrap();
        assert!((y.states[0][0] - 0.36787944).abs() < 1e-8);
        assert_eq!(y.states[2], dvector![1.0]);

        let zero = optimal_control_infinite(&scalar(), &dvector![0.0], &grid).unwrap();
        assert!(zero.values.iter().all(|v| v[0] == 0.0));
    }

    #[test]
    fn two_mode_synthesis() {
        let grid = vec![-2.0, -0.3];
        let u = optimal_control_infinite(&two_mode(), &dvector![1.0, 0.0], &grid).unwrap();
        for (r, v) in grid.iter().zip(&u.values) {
            assert!((v[0] - 2.0 * r.exp()).abs() < 1e-14);
            assert_eq!(v[1], 0.0);
        }
        let y = optimal_trajectory_infinite(&two_mode(), &dvector![0.0, 1.0], &grid).unwrap();
        for (r, s) in grid.iter().zip(&y.states) {
            assert!((s[1] - (2.0 * r).exp()).abs() < 1e-14);
            assert_eq!(s[0], 0.0);
        }
    }

    #[test]
    fn energy_examples() {
        let grid = uniform_grid(-1.0, 0.0, 11);
        assert_eq!(energy_of(&ControlSignal::zeros(grid.clone(), 2).unwrap()), 0.0);
        let ones = ControlSignal::from_fn(grid, |_| dvector![1.0]).unwrap();
        assert!((energy_of(&ones) - 0.5).abs() < 1e-15);

        let grid = uniform_grid(-30.0, 0.0, 6001);
        let u = optimal_control_infinite(&scalar(), &dvector![1.0], &grid).unwrap();
        assert!((energy_of(&u) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn homogeneous_mild_solution() {
        let p = make_dense_model(dmatrix![-1.0, 2.0; -0.5, -4.0], dmatrix![1.0; 0.0]).unwrap();
        let grid = uniform_grid(0.0, 2.0, 9);
        let u = ControlSignal::zeros(grid, 1).unwrap();
        let z = dvector![1.0, -1.0];
        let y = simulate_mild(&p, &z, &u, 0.0, 2.0).unwrap();
        for (r, s) in y.grid.iter().zip(&y.states) {
            assert!((s - expm(p.a(), *r) * &z).norm() < 1e-13);
        }
        let u = ControlSignal::zeros(uniform_grid(0.0, 1.0, 3), 1).unwrap();
        let y = simulate_mild(&scalar(), &dvector![1.0], &u, 0.0, 1.0).unwrap();
        assert!((y.last()[0] - (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn mild_solution_two_point_consistency() {
        let p = make_dense_model(dmatrix![-1.0, 2.0; -0.5, -4.0], dmatrix![1.0; 0.5]).unwrap();
        let grid = uniform_grid(0.0, 2.0, 401);
        let u = ControlSignal::from_fn(grid, |r| dvector![(3.0 * r).sin() + r * r]).unwrap();
        let z = dvector![0.5, 1.0];
        let full = simulate_mild(&p, &z, &u, 0.0, 2.0).unwrap();
        let mid = simulate_mild(&p, &z, &u, 0.0, 1.0).unwrap();
        let rest = simulate_mild(&p, mid.last(), &u, 1.0, 2.0).unwrap();
        assert!((full.last() - rest.last()).norm() < 1e-8);
    }

    #[test]
    fn grid_must_cover_interval() {
        let u = ControlSignal::zeros(uniform_grid(-1.0, 0.0, 5), 1).unwrap();
        let err = simulate_mild(&scalar(), &dvector![0.0], &u, -2.0, 0.0).unwrap_err();
        assert!(matches!(err, Error::GridMismatch(_)));
    }

    #[test]
    fn synthesis_lands_on_target() {
        let x = dvector![1.0];
        let grid = default_grid(&scalar(), x.norm());
        let u = optimal_control_infinite(&scalar(), &x, &grid).unwrap();
        let y = simulate_mild(&scalar(), &dvector![0.0], &u, grid[0], 0.0).unwrap();
        assert!((y.last() - &x).norm() < 1e-6);
    }

    #[test]
    fn feedback_and_bcle() {
        let p = scalar();
        let x = dvector![1.0];
        let grid = uniform_grid(-1.0, 0.0, 1001);
        let u = optimal_control_infinite(&p, &x, &grid).unwrap();
        let y = optimal_trajectory_infinite(&p, &x, &grid).unwrap();
        assert!(feedback_residual(&p, &y, &u).unwrap() < 1e-12);
        assert!(bcle_residual(&p, &y).unwrap() < 1e-6);

        let zero_y = Trajectory {
            grid: grid.clone(),
            states: vec![dvector![0.0]; grid.len()],
        };
        let zero_u = ControlSignal::zeros(grid.clone(), 1).unwrap();
        assert_eq!(feedback_residual(&p, &zero_y, &zero_u).unwrap(), 0.0);
        assert_eq!(bcle_residual(&p, &zero_y).unwrap(), 0.0);

        let delta = 0.01;
        let perturbed = ControlSignal::new(grid.clone(), u.values.iter().map(|v| v.add_scalar(delta)).collect()).unwrap();
        assert!(feedback_residual(&p, &y, &perturbed).unwrap() >= delta - 1e-10);

        let short = ControlSignal::zeros(grid[..10].to_vec(), 1).unwrap();
        assert!(matches!(feedback_residual(&p, &y, &short).unwrap_err(), Error::GridMismatch(_)));
    }

    #[test]
    fn commuting_bcle_matches_plain_generator() {
        let p = two_mode();
        let x = dvector![0.7, -0.4];
        let grid = uniform_grid(-1.0, 0.0, 101);
        let y = optimal_trajectory_infinite(&p, &x, &grid).unwrap();
        let via_q = bcle_residual(&p, &y).unwrap();
        let step = grid[1] - grid[0];
        let plain = (1..grid.len() - 1)
            .map(|k| {
                let fd = (&y.states[k + 1] - &y.states[k - 1]) / (2.0 * step);
                (fd + p.a().transpose() * &y.states[k]).norm()
            })
            .fold(0.0, f64::max);
        assert!((via_q - plain).abs() < 1e-12);
    }

    #[test]
    fn auxiliary_examples() {
        let p = scalar();
        let h = h_space(&p).unwrap();
        let x = dvector![1.0];
        let zero = value_auxiliary(&p, &AuxiliaryCost::scaled_identity(1, 0.0), 1.0, &x).unwrap();
        assert!(zero.value.abs() < 1e-14);
        assert!((zero.argmin_z[0] - 1f64.exp()).abs() < 1e-12);

        let one = value_auxiliary(&p, &AuxiliaryCost::new(&h, dmatrix![1.0]).unwrap(), 1.0, &x).unwrap();
        assert!((one.value - 1.0).abs() < 1e-12);
        assert!((one.argmin_z[0] - (-1.0f64).exp()).abs() < 1e-12);

        let stiff = value_auxiliary(&p, &AuxiliaryCost::scaled_identity(1, 1e8), 1.0, &x).unwrap();
        let v = value_finite(&p, 1.0, &x).unwrap();
        assert!((stiff.value - v).abs() < 1e-6);
        assert!(stiff.value <= v);
    }

    #[test]
    fn auxiliary_cost_must_be_h_symmetric() {
        let p = make_spectral_model(&[-1.0, -2.0], &[1.0, 3.0]).unwrap();
        let h = h_space(&p).unwrap();
        // X-symmetric but not H-symmetric since Q_∞ is not a multiple of I.
        let err = AuxiliaryCost::new(&h, dmatrix![1.0, 1.0; 1.0, 1.0]).unwrap_err();
        assert!(matches!(err, Error::NotSymmetric { .. }));
        let n = h.from_h_frame(&dmatrix![1.0, 1.0; 1.0, 1.0]);
        assert!(AuxiliaryCost::new(&h, n).is_ok());
    }

    #[test]
    fn time_reversal_examples() {
        let p = scalar();
        let h = h_space(&p).unwrap();
        let n = AuxiliaryCost::new(&h, dmatrix![0.7]).unwrap();
        let grid = uniform_grid(-1.0, 0.0, 101);
        let zero = ControlSignal::zeros(grid.clone(), 1).unwrap();
        assert!(time_reversal_check(&p, &n, &dvector![0.4], &zero).unwrap() < 1e-12);

        let u = optimal_control_finite(&p, 1.0, &dvector![1.0], &grid).unwrap();
        assert!(time_reversal_check(&p, &n, &dvector![0.0], &u).unwrap() < 1e-7);
        let reached = simulate_mild(&p, &dvector![0.0], &u, -1.0, 0.0).unwrap();
        assert!((reached.last()[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn rank_deficient_auxiliary_and_infinite_gramian() {
        // B reaches only the first mode.
        let p = make_spectral_model(&[-1.0, -2.0], &[1.0, 0.0]).unwrap();
        let g = gramian_infinite(&p).unwrap();
        assert_eq!(g.rank, 1);
        let x = dvector![0.5, 0.0];
        let n = AuxiliaryCost::scaled_identity(2, 1.0);
        let v = value_auxiliary(&p, &n, 1.0, &x).unwrap();
        assert!(v.value <= value_finite(&p, 1.0, &x).unwrap() + 1e-12);
        let err = value_auxiliary(&p, &n, 1.0, &dvector![0.0, 1.0]).unwrap_err();
        assert_eq!(err, Error::NotReachableFromH);
    }
}
