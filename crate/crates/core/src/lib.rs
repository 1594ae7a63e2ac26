//! Minimum-energy control of stable linear systems: reachability Gramians,
//! value functions, optimal synthesis, and the associated Riccati equation.

// `!(x < y)` is used deliberately so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod energy;
pub mod error;
pub mod gramian;
pub mod landau;
pub mod operators;
pub mod quadrature;
pub mod random;
pub mod riccati;

pub use error::{Error, Result};
pub use operators::{ControlProblem, Matrix, Vector};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
