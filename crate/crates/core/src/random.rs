//! Seeded generators for test models and target states.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

use crate::error::Result;
use crate::operators::{make_dense_model, make_spectral_model, ControlProblem, Matrix, Vector};

fn gaussian(rng: &mut impl Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

pub fn gaussian_vector(rng: &mut impl Rng, n: usize) -> Vector {
    Vector::from_fn(n, |_, _| StandardNormal.sample(rng))
}

/// Dense stable model: a scaled Gaussian matrix shifted so that its spectral
/// abscissa lands in `[−1, −0.2]`, with an `n×m` Gaussian input matrix.
pub fn stable_dense(rng: &mut impl Rng, n: usize, m: usize) -> Result<ControlProblem> {
    let g = gaussian(rng, n, n) / (n as f64).sqrt();
    let abscissa = g
        .complex_eigenvalues()
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max);
    let margin = Uniform::new(0.2, 1.0).unwrap().sample(rng);
    let a = g - Matrix::identity(n, n) * (abscissa + margin);
    let b = gaussian(rng, n, m);
    make_dense_model(a, b)
}

/// Diagonal model with `n` distinct eigenvalues in `[−5, −0.1]` (pairwise gap at
/// least `0.05`) and weights in `[0.5, 2]`.
pub fn spectral_distinct(rng: &mut impl Rng, n: usize) -> Result<ControlProblem> {
    let eig = Uniform::new(-5.0, -0.1).unwrap();
    let mut lambdas: Vec<f64> = Vec::with_capacity(n);
    while lambdas.len() < n {
        let l: f64 = eig.sample(rng);
        if lambdas.iter().all(|v| (v - l).abs() >= 0.05) {
            lambdas.push(l);
        }
    }
    let w = Uniform::new(0.5, 2.0).unwrap();
    let b: Vec<f64> = (0..n).map(|_| w.sample(rng)).collect();
    make_spectral_model(&lambdas, &b)
}

/// Random symmetric PSD matrix `GGᵀ/n`.
pub fn random_psd(rng: &mut impl Rng, n: usize) -> Matrix {
    let g = gaussian(rng, n, n);
    (&g * g.transpose()) / n as f64
}
