//! Spectral truncation of the controlled heat equation on `(0, 1)` with
//! Dirichlet data `ρ(0) = ρ₋`, `ρ(1) = ρ₊`, state space `H^{−1}(0,1)` and
//! `B = I`.
//!
//! Deviations from the affine equilibrium are expanded in the
//! `H^{−1}`-orthonormal family `ê_k(ξ) = √2·kπ·sin(kπξ)`, on which the
//! generator `A = ½∂²_ξ` is diagonal with `λ_k = −k²π²/2`. Since
//! `‖ê_k‖²_{L²} = k²π²`, the reachability norm of a coefficient vector is its
//! `L²` norm.

use std::f64::consts::PI;

use serde::Serialize;

use crate::energy::value_infinite;
use crate::error::{Error, Result};
use crate::gramian::gramian_infinite;
use crate::operators::linalg::{Matrix, Vector};
use crate::operators::{make_spectral_model, ControlProblem};

/// Points of the `ξ`-grid used for profile output.
pub const PROFILE_POINTS: usize = 512;

#[derive(Debug, Clone)]
pub struct LGModel {
    n_modes: usize,
    rho_minus: f64,
    rho_plus: f64,
    problem: ControlProblem,
}

impl LGModel {
    pub fn n_modes(&self) -> usize {
        self.n_modes
    }
    pub fn rho_minus(&self) -> f64 {
        self.rho_minus
    }
    pub fn rho_plus(&self) -> f64 {
        self.rho_plus
    }
    pub fn problem(&self) -> &ControlProblem {
        &self.problem
    }
}

fn check_density(rho: f64) -> Result<()> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::BadBoundary(rho));
    }
    Ok(())
}

pub fn mode_eigenvalue(k: usize) -> f64 {
    let kpi = k as f64 * PI;
    -0.5 * kpi * kpi
}

pub fn build_lg_model(n_modes: usize, rho_minus: f64, rho_plus: f64) -> Result<LGModel> {
    if n_modes == 0 {
        return Err(Error::OutOfRange("n_modes must be at least 1".into()));
    }
    check_density(rho_minus)?;
    check_density(rho_plus)?;
    let lambdas: Vec<f64> = (1..=n_modes).map(mode_eigenvalue).collect();
    let problem = make_spectral_model(&lambdas, &vec![1.0; n_modes])?;
    Ok(LGModel {
        n_modes,
        rho_minus,
        rho_plus,
        problem,
    })
}

/// `ρ̄(ξ) = (ρ₊ − ρ₋)ξ + ρ₋`.
pub fn lg_equilibrium(rho_minus: f64, rho_plus: f64, xi: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&xi) {
        return Err(Error::OutOfDomain(xi));
    }
    Ok((rho_plus - rho_minus) * xi + rho_minus)
}

/// `ê_k(ξ)`.
pub fn basis_function(k: usize, xi: f64) -> f64 {
    let kpi = k as f64 * PI;
    2f64.sqrt() * kpi * (kpi * xi).sin()
}

fn check_coords(model: &LGModel, coords: &Vector) -> Result<()> {
    if coords.len() != model.n_modes {
        return Err(Error::LengthMismatch {
            expected: model.n_modes,
            got: coords.len(),
        });
    }
    Ok(())
}

/// `‖Σ c_k ê_k‖²_{L²} = Σ c_k² k²π²`.
pub fn l2_norm_sq(model: &LGModel, coords: &Vector) -> Result<f64> {
    check_coords(model, coords)?;
    Ok(coords
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let kpi = (i + 1) as f64 * PI;
            c * c * kpi * kpi
        })
        .sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LgValueCheck {
    pub v_inf: f64,
    pub half_l2: f64,
    pub rel_err: f64,
}

/// Compares `V_∞(y₀)` on the truncated model with `½‖y₀‖²_{L²}`.
pub fn lg_value_check(model: &LGModel, y0: &Vector) -> Result<LgValueCheck> {
    check_coords(model, y0)?;
    if y0.iter().any(|c| !c.is_finite()) {
        return Err(Error::OutOfRange("non-finite coefficient".into()));
    }
    let v_inf = value_infinite(&model.problem, y0)?;
    let half_l2 = 0.5 * l2_norm_sq(model, y0)?;
    let rel_err = if half_l2 == 0.0 {
        v_inf.abs()
    } else {
        (v_inf - half_l2).abs() / half_l2
    };
    Ok(LgValueCheck {
        v_inf,
        half_l2,
        rel_err,
    })
}

/// Density profile `ρ̄(ξ) + Σ c_k ê_k(ξ)` at one point.
pub fn profile_at(model: &LGModel, coords: &Vector, xi: f64) -> Result<f64> {
    check_coords(model, coords)?;
    let base = lg_equilibrium(model.rho_minus, model.rho_plus, xi)?;
    Ok(base
        + coords
            .iter()
            .enumerate()
            .map(|(i, c)| c * basis_function(i + 1, xi))
            .sum::<f64>())
}

/// Uniform `ξ`-grid of [`PROFILE_POINTS`] points on `[0, 1]`.
pub fn profile_grid() -> Vec<f64> {
    (0..PROFILE_POINTS)
        .map(|i| i as f64 / (PROFILE_POINTS - 1) as f64)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum InverseGramianForm {
    /// `Q_∞^{−1} = −2A`
    #[serde(rename = "-2A")]
    MinusTwoA,
    /// `Q_∞^{−1} = 2A`
    #[serde(rename = "2A")]
    TwoA,
    #[serde(rename = "neither")]
    Neither,
}

/// Which closed form `±2A` the Lyapunov-computed `Q_∞^{−1}` matches, with the
/// relative distances to both.
pub fn inverse_gramian_form(model: &LGModel) -> Result<(InverseGramianForm, f64, f64)> {
    let g = gramian_infinite(&model.problem)?;
    let q_inv = &g.pinv.inverse_on_range;
    let two_a: Matrix = model.problem.a() * 2.0;
    let scale = q_inv.norm();
    let d_minus = (q_inv + &two_a).norm() / scale;
    let d_plus = (q_inv - &two_a).norm() / scale;
    let form = if d_minus <= 1e-10 {
        InverseGramianForm::MinusTwoA
    } else if d_plus <= 1e-10 {
        InverseGramianForm::TwoA
    } else {
        InverseGramianForm::Neither
    };
    Ok((form, d_minus, d_plus))
}
