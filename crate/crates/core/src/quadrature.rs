//! Quadrature rules on time grids.

use std::f64::consts::PI;

/// Nodes per Gauss–Legendre panel.
pub const GL_NODES: usize = 32;

/// Gauss–Legendre nodes and weights on `[-1, 1]`, computed by Newton
/// iteration on the Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let d = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite Gauss–Legendre rule on `[a, b]` with panels no wider than
/// `max_width`. Returns `(nodes, weights)` in increasing node order.
pub fn composite_gauss_legendre(a: f64, b: f64, max_width: f64) -> (Vec<f64>, Vec<f64>) {
    let len = b - a;
    let panels = ((len / max_width).ceil() as usize).max(1);
    let h = len / panels as f64;
    let (x, w) = gauss_legendre(GL_NODES);
    let mut nodes = Vec::with_capacity(panels * GL_NODES);
    let mut weights = Vec::with_capacity(panels * GL_NODES);
    for p in 0..panels {
        let left = a + h * p as f64;
        for (xi, wi) in x.iter().zip(&w) {
            nodes.push(left + 0.5 * h * (xi + 1.0));
            weights.push(0.5 * h * wi);
        }
    }
    (nodes, weights)
}

/// Composite Simpson weights on an arbitrary increasing grid. Pairs of
/// intervals use the nonuniform Simpson rule; an odd leftover interval at the
/// end is closed with the three-interval (nonuniform) cubic rule when
/// possible and the trapezoid otherwise.
pub fn simpson_weights(grid: &[f64]) -> Vec<f64> {
    let k = grid.len();
    let mut w = vec![0.0; k];
    if k < 2 {
        return w;
    }
    let intervals = k - 1;
    let paired = if intervals.is_multiple_of(2) || intervals < 3 {
        intervals - intervals % 2
    } else {
        intervals - 3
    };
    let mut i = 0;
    while i < paired {
        let (x0, x1, x2) = (grid[i], grid[i + 1], grid[i + 2]);
        let ws = interpolatory_weights(&[x0, x1, x2], x0, x2);
        for (j, v) in ws.into_iter().enumerate() {
            w[i + j] += v;
        }
        i += 2;
    }
    let rest = intervals - paired;
    if rest == 3 {
        let pts = &grid[i..i + 4];
        let ws = interpolatory_weights(pts, pts[0], pts[3]);
        for (j, v) in ws.into_iter().enumerate() {
            w[i + j] += v;
        }
    } else if rest == 1 {
        let h = grid[i + 1] - grid[i];
        w[i] += 0.5 * h;
        w[i + 1] += 0.5 * h;
    }
    w
}

/// Weights of the interpolatory rule through `pts` integrating over `[a, b]`,
/// obtained by integrating each Lagrange basis polynomial with a
/// Gauss–Legendre rule exact for its degree.
fn interpolatory_weights(pts: &[f64], a: f64, b: f64) -> Vec<f64> {
    let (x, gw) = gauss_legendre(pts.len());
    let half = 0.5 * (b - a);
    (0..pts.len())
        .map(|j| {
            x.iter()
                .zip(&gw)
                .map(|(xi, wi)| {
                    let t = a + half * (xi + 1.0);
                    wi * half * lagrange_basis(pts, j, t)
                })
                .sum()
        })
        .collect()
}

pub fn lagrange_basis(pts: &[f64], j: usize, t: f64) -> f64 {
    pts.iter()
        .enumerate()
        .filter(|(m, _)| *m != j)
        .map(|(_, &xm)| (t - xm) / (pts[j] - xm))
        .product()
}
