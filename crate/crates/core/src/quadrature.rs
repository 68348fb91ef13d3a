//! One-dimensional quadrature, deterministic summation and Chebyshev tools.

use std::f64::consts::PI;

/// Gauss-Legendre nodes and weights on [-1, 1], nodes in increasing order.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..m.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_m.
        let mut x = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(m, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(m, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[m - 1 - i] = x;
        weights[i] = w;
        weights[m - 1 - i] = w;
    }
    if m % 2 == 1 {
        nodes[m / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(m: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if m == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=m {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = m as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Pairwise (tree) summation. The order is fixed by the input layout, so the
/// result does not depend on how the terms were produced.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if values.len() <= LEAF {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Weighted sum Σ w_i v_i with pairwise reduction.
pub fn weighted_sum(weights: &[f64], values: &[f64]) -> f64 {
    debug_assert_eq!(weights.len(), values.len());
    let prod: Vec<f64> = weights.iter().zip(values).map(|(w, v)| w * v).collect();
    pairwise_sum(&prod)
}

/// Composite Gauss-Legendre rule of `order` points on `panels` equal panels of [a, b].
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize, order: usize) -> f64 {
    let (x, w) = gauss_legendre(order);
    let h = (b - a) / panels as f64;
    let mut terms = Vec::with_capacity(panels * order);
    for k in 0..panels {
        let lo = a + k as f64 * h;
        for (xi, wi) in x.iter().zip(&w) {
            terms.push(0.5 * h * wi * f(lo + 0.5 * h * (xi + 1.0)));
        }
    }
    pairwise_sum(&terms)
}

/// Chebyshev interpolant on [a, b] built from values at Chebyshev-Lobatto points.
#[derive(Debug, Clone)]
pub struct Chebyshev {
    a: f64,
    b: f64,
    coeffs: Vec<f64>,
}

impl Chebyshev {
    /// Chebyshev-Lobatto points x_j = cos(πj/N) mapped to [a, b], j = 0..=N (descending).
    pub fn points(a: f64, b: f64, degree: usize) -> Vec<f64> {
        (0..=degree)
            .map(|j| {
                let t = (PI * j as f64 / degree as f64).cos();
                0.5 * (a + b) + 0.5 * (b - a) * t
            })
            .collect()
    }

    /// Fit from values sampled at `Chebyshev::points(a, b, degree)`.
    pub fn fit(a: f64, b: f64, values: &[f64]) -> Self {
        let n = values.len() - 1;
        let mut coeffs = vec![0.0; n + 1];
        for (k, c) in coeffs.iter_mut().enumerate() {
            let mut terms = Vec::with_capacity(n + 1);
            for (j, v) in values.iter().enumerate() {
                let w = if j == 0 || j == n { 0.5 } else { 1.0 };
                // cos(πjk/n) with reduced argument for accuracy
                let arg = ((j * k) % (2 * n)) as f64 * PI / n as f64;
                terms.push(w * v * arg.cos());
            }
            let scale = if k == 0 || k == n { 1.0 } else { 2.0 };
            *c = scale * pairwise_sum(&terms) / n as f64;
        }
        Self { a, b, coeffs }
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    fn to_unit(&self, x: f64) -> f64 {
        (2.0 * x - self.a - self.b) / (self.b - self.a)
    }

    /// Clenshaw evaluation.
    pub fn eval(&self, x: f64) -> f64 {
        let t = self.to_unit(x);
        let mut b1 = 0.0;
        let mut b2 = 0.0;
        for &c in self.coeffs.iter().skip(1).rev() {
            let b0 = 2.0 * t * b1 - b2 + c;
            b2 = b1;
            b1 = b0;
        }
        t * b1 - b2 + self.coeffs[0]
    }

    /// Interpolant of the derivative d/dx.
    pub fn derivative(&self) -> Self {
        let n = self.coeffs.len() - 1;
        let mut d = vec![0.0; n.max(1)];
        if n >= 1 {
            let mut next2 = 0.0;
            let mut next1 = 0.0;
            for k in (0..n).rev() {
                let dk = next2 + 2.0 * (k as f64 + 1.0) * self.coeffs[k + 1];
                d[k] = dk;
                next2 = next1;
                next1 = dk;
            }
            d[0] *= 0.5;
        }
        let scale = 2.0 / (self.b - self.a);
        for c in &mut d {
            *c *= scale;
        }
        Self { a: self.a, b: self.b, coeffs: d }
    }
}
