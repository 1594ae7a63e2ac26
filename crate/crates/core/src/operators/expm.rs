//! Matrix exponential `e^{tA}`.
//!
//! Symmetric inputs go through the eigendecomposition, which keeps the result
//! exactly symmetric. Everything else uses scaling and squaring with a
//! diagonal Padé approximant of degree 3, 5, 7, 9 or 13 (Higham 2005),
//! picked from the 1-norm of the scaled matrix.

use super::linalg::{asymmetry, one_norm, solve, Matrix, SymSpectrum};

const THETA: [(usize, f64); 4] = [
    (3, 1.495585217958292e-2),
    (5, 2.53939833006323e-1),
    (7, 9.504178996162932e-1),
    (9, 2.097847961257068e0),
];
const THETA_13: f64 = 5.371920351148152;

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const B9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const B13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// `e^{tA}` for any finite `t` (negative `t` included).
pub fn expm(a: &Matrix, t: f64) -> Matrix {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm requires a square matrix");
    if n == 0 {
        return Matrix::zeros(0, 0);
    }
    if t == 0.0 {
        return Matrix::identity(n, n);
    }
    let m = a * t;
    if n == 1 {
        return Matrix::from_element(1, 1, m[(0, 0)].exp());
    }
    if asymmetry(&m) == 0.0 {
        return SymSpectrum::new(&m).map(f64::exp);
    }
    pade_expm(&m)
}

fn pade_expm(a: &Matrix) -> Matrix {
    let n = a.nrows();
    let ident = Matrix::identity(n, n);
    let norm = one_norm(a);

    for &(degree, theta) in &THETA {
        if norm <= theta {
            let coeffs: &[f64] = match degree {
                3 => &B3,
                5 => &B5,
                7 => &B7,
                _ => &B9,
            };
            return low_degree(a, coeffs, &ident);
        }
    }

    let s = if norm > THETA_13 {
        (norm / THETA_13).log2().ceil().max(0.0) as i32
    } else {
        0
    };
    let scaled = a / 2f64.powi(s);
    let mut r = degree13(&scaled, &ident);
    for _ in 0..s {
        r = &r * &r;
    }
    r
}

fn rational(u: Matrix, v: Matrix) -> Matrix {
    let p = &v + &u;
    let q = &v - &u;
    solve(&q, &p).expect("Padé denominator is nonsingular for scaled input")
}

fn low_degree(a: &Matrix, b: &[f64], ident: &Matrix) -> Matrix {
    let a2 = a * a;
    let mut even = ident * b[0];
    let mut odd = ident * b[1];
    let mut power = ident.clone();
    for k in 1..b.len() / 2 {
        power = &power * &a2;
        even += &power * b[2 * k];
        odd += &power * b[2 * k + 1];
    }
    rational(a * odd, even)
}

fn degree13(a: &Matrix, ident: &Matrix) -> Matrix {
    let b = &B13;
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let inner_u = &a6 * b[13] + &a4 * b[11] + &a2 * b[9];
    let u = a * (&a6 * inner_u + &a6 * b[7] + &a4 * b[5] + &a2 * b[3] + ident * b[1]);
    let inner_v = &a6 * b[12] + &a4 * b[10] + &a2 * b[8];
    let v = &a6 * inner_v + &a6 * b[6] + &a4 * b[4] + &a2 * b[2] + ident * b[0];
    rational(u, v)
}
