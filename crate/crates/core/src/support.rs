//! Support functions on S^n and the Monge-Ampère matrix W = ∇²h + hI.
//!
//! Every representation is evaluated through its 1-homogeneous extension H to R^{n+1}:
//! at a unit vector X the ambient Hessian D²H(X) annihilates X and its tangential block
//! is W. For a homogeneous polynomial P of degree μ this gives
//! W = Eᵀ D²P E + (1−μ) P I for a tangent frame E.

use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{ensure, Error, Result};
use crate::poly::HomoPoly;
use crate::quadrature::pairwise_sum;
use crate::spectral::orthonormal_harmonics;
use crate::sphere::{dot, norm, project, tangent_frame, SphereGrid};
use crate::symmetry::SymmetryGroup;

/// Tolerance for the convexity certificate of a support function.
pub const CONVEXITY_TOL: f64 = 1e-10;

/// A scalar function on S^n with a tangential gradient.
pub trait SphereFunction: Sync {
    fn value(&self, x: &[f64]) -> f64;
    /// Tangential gradient as an ambient vector.
    fn gradient(&self, x: &[f64]) -> Vec<f64>;
}

/// The constant function.
#[derive(Debug, Clone, Copy)]
pub struct Constant(pub f64);

impl SphereFunction for Constant {
    fn value(&self, _x: &[f64]) -> f64 {
        self.0
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        vec![0.0; x.len()]
    }
}

/// Value, frame gradient and W-matrix of a function at a sphere point.
#[derive(Debug, Clone)]
struct Local {
    value: f64,
    grad: Vec<f64>,
    /// n×n row-major
    w: Vec<f64>,
}

/// One element of a spectral basis.
#[derive(Debug, Clone, PartialEq)]
pub enum BasisFunction {
    /// a cos kθ + b sin kθ on S^1.
    Fourier { k: u32, a: f64, b: f64 },
    /// Restriction of a homogeneous polynomial on R^{n+1}.
    Poly(HomoPoly<f64>),
}

impl BasisFunction {
    pub fn degree(&self) -> u32 {
        match self {
            BasisFunction::Fourier { k, .. } => *k,
            BasisFunction::Poly(p) => p.degree(),
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            BasisFunction::Fourier { k, a, b } => {
                let t = f64::from(*k) * x[1].atan2(x[0]);
                a * t.cos() + b * t.sin()
            }
            BasisFunction::Poly(p) => p.eval(x),
        }
    }

    fn local(&self, x: &[f64], frame: &[Vec<f64>]) -> Local {
        match self {
            BasisFunction::Fourier { k, a, b } => {
                // frame[0] is the counter-clockwise tangent, so d/dθ is the frame derivative
                let kf = f64::from(*k);
                let t = kf * x[1].atan2(x[0]);
                let (s, c) = t.sin_cos();
                let value = a * c + b * s;
                Local { value, grad: vec![kf * (b * c - a * s)], w: vec![(1.0 - kf * kf) * value] }
            }
            BasisFunction::Poly(p) => {
                let m = x.len();
                let n = m - 1;
                let (value, grad, hess) = p.eval_derivatives(x);
                let shift = (1.0 - f64::from(p.degree())) * value;
                let g: Vec<f64> = frame.iter().map(|e| dot(e, &grad)).collect();
                let mut w = vec![0.0; n * n];
                for i in 0..n {
                    for j in i..n {
                        let mut v = 0.0;
                        for r in 0..m {
                            for c in 0..m {
                                v += frame[i][r] * hess[r * m + c] * frame[j][c];
                            }
                        }
                        if i == j {
                            v += shift;
                        }
                        w[i * n + j] = v;
                        w[j * n + i] = v;
                    }
                }
                Local { value, grad: g, w }
            }
        }
    }

    /// Ambient Hessian of the 1-homogeneous extension at a unit vector (row-major).
    fn ambient_hessian(&self, x: &[f64]) -> Vec<f64> {
        let m = x.len();
        match self {
            BasisFunction::Fourier { .. } => {
                let frame = tangent_frame(x);
                let w = self.local(x, &frame).w[0];
                let e = &frame[0];
                (0..m * m).map(|idx| w * e[idx / m] * e[idx % m]).collect()
            }
            BasisFunction::Poly(p) => {
                // H = r^a P with a = 1 − μ; at r = 1:
                // D²H = a(a−2)P XXᵀ + a(P I + X∇Pᵀ + ∇P Xᵀ) + D²P
                let a = 1.0 - f64::from(p.degree());
                let (value, grad, hess) = p.eval_derivatives(x);
                let mut out = hess;
                for r in 0..m {
                    for c in 0..m {
                        let id = if r == c { 1.0 } else { 0.0 };
                        out[r * m + c] += a * (a - 2.0) * value * x[r] * x[c]
                            + a * (value * id + x[r] * grad[c] + grad[r] * x[c]);
                    }
                }
                out
            }
        }
    }

    /// The function composed with an orthogonal map: X ↦ B(RX).
    fn rotated(&self, rotation: &[Vec<f64>]) -> Self {
        match self {
            BasisFunction::Fourier { k, a, b } => {
                // R is rotation by ψ (det 1) or the reflection θ ↦ ψ − θ (det −1)
                let det = rotation[0][0] * rotation[1][1] - rotation[0][1] * rotation[1][0];
                let psi = rotation[1][0].atan2(rotation[0][0]);
                let kp = f64::from(*k) * psi;
                let (s, c) = kp.sin_cos();
                if det > 0.0 {
                    // a cos(kθ + kψ) + b sin(kθ + kψ)
                    BasisFunction::Fourier { k: *k, a: a * c + b * s, b: b * c - a * s }
                } else {
                    // a cos(kψ − kθ) + b sin(kψ − kθ)
                    BasisFunction::Fourier { k: *k, a: a * c + b * s, b: a * s - b * c }
                }
            }
            BasisFunction::Poly(p) => BasisFunction::Poly(p.compose_linear(rotation)),
        }
    }
}

/// An ordered list of basis functions on S^n.
#[derive(Debug, Clone, PartialEq)]
pub struct Basis {
    pub n: usize,
    pub functions: Vec<BasisFunction>,
}

impl Basis {
    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    pub fn constant(n: usize) -> Self {
        let f = if n == 1 {
            BasisFunction::Fourier { k: 0, a: 1.0, b: 0.0 }
        } else {
            BasisFunction::Poly(HomoPoly::constant(n + 1, 1.0))
        };
        Self { n, functions: vec![f] }
    }

    /// 1, cos θ, sin θ, …, cos Kθ, sin Kθ.
    pub fn fourier(max_k: u32) -> Self {
        let mut functions = vec![BasisFunction::Fourier { k: 0, a: 1.0, b: 0.0 }];
        for k in 1..=max_k {
            functions.push(BasisFunction::Fourier { k, a: 1.0, b: 0.0 });
            functions.push(BasisFunction::Fourier { k, a: 0.0, b: 1.0 });
        }
        Self { n: 1, functions }
    }

    /// Full spherical-harmonic basis up to degree L (the constant is 1, not normalized).
    pub fn harmonics(n: usize, max_degree: u32) -> Result<Self> {
        ensure(n >= 1, || "n must be positive".into())?;
        if n == 1 {
            return Ok(Self::fourier(max_degree));
        }
        let mut functions = Basis::constant(n).functions;
        for mu in 1..=max_degree {
            functions.extend(orthonormal_harmonics(n, mu).into_iter().map(BasisFunction::Poly));
        }
        Ok(Self { n, functions })
    }

    /// The constant plus every group-invariant harmonic of degree 1..=L.
    pub fn invariant(n: usize, max_degree: u32, group: &SymmetryGroup) -> Result<Self> {
        ensure(group.n == n, || "group dimension mismatch".into())?;
        let mut functions = Basis::constant(n).functions;
        for mu in 1..=max_degree {
            if n == 1 {
                functions.extend(fourier_invariants(mu, group));
            } else {
                let sub = crate::spectral::invariant_subspace(n, mu, group)?;
                functions.extend(sub.basis.into_iter().map(BasisFunction::Poly));
            }
        }
        Ok(Self { n, functions })
    }

    pub fn max_degree(&self) -> u32 {
        self.functions.iter().map(BasisFunction::degree).max().unwrap_or(0)
    }
}

/// Invariant combinations of cos kθ, sin kθ under a group acting on S^1, built from the
/// exact 2×2 representation of each element.
pub fn fourier_invariants(k: u32, group: &SymmetryGroup) -> Vec<BasisFunction> {
    let mut proj = [[0.0; 2]; 2];
    for g in &group.elements {
        // images of cos kθ and sin kθ under X ↦ g X, expressed in (cos, sin) coordinates
        let c = BasisFunction::Fourier { k, a: 1.0, b: 0.0 }.rotated(&g.matrix);
        let s = BasisFunction::Fourier { k, a: 0.0, b: 1.0 }.rotated(&g.matrix);
        for (row, img) in [c, s].iter().enumerate() {
            if let BasisFunction::Fourier { a, b, .. } = img {
                proj[row][0] += a;
                proj[row][1] += b;
            }
        }
    }
    let order = group.order() as f64;
    let m = DMatrix::from_fn(2, 2, |r, c| 0.5 * (proj[r][c] + proj[c][r]) / order);
    let eig = SymmetricEigen::new(m);
    let mut out = Vec::new();
    for idx in 0..2 {
        if eig.eigenvalues[idx] > 1e-9 {
            let v = eig.eigenvectors.column(idx);
            // fix the sign so the leading nonzero coordinate is positive
            let sign = if v[0].abs() > 1e-12 { v[0].signum() } else { v[1].signum() };
            out.push(BasisFunction::Fourier { k, a: sign * v[0], b: sign * v[1] });
        }
    }
    out
}

#[derive(Debug, Clone)]
enum Repr {
    Spectral { basis: Arc<Basis>, coeffs: Vec<f64> },
    /// H(X) = √(XᵀMX) with M symmetric positive definite.
    Ellipsoid { matrix: Vec<Vec<f64>> },
}

/// A positive function on S^n, read as the support function of a convex body.
#[derive(Debug, Clone)]
pub struct SupportFunction {
    n: usize,
    repr: Repr,
}

/// W = ∇²h + hI at one point, in an orthonormal tangent frame.
#[derive(Debug, Clone, Serialize)]
pub struct FrameHessian {
    pub point: Vec<f64>,
    pub frame: Vec<Vec<f64>>,
    /// n×n rows
    pub matrix: Vec<Vec<f64>>,
    pub value: f64,
    /// frame components of ∇h
    pub gradient: Vec<f64>,
}

impl FrameHessian {
    pub fn det(&self) -> f64 {
        det_small(&self.matrix)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        eigenvalues_small(&self.matrix)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().into_iter().fold(f64::INFINITY, f64::min)
    }

    /// Cofactor matrix U with U W = det(W) I.
    pub fn cofactor(&self) -> Vec<Vec<f64>> {
        cofactor_small(&self.matrix)
    }
}

pub(crate) fn det_small(m: &[Vec<f64>]) -> f64 {
    match m.len() {
        0 => 1.0,
        1 => m[0][0],
        2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
        3 => {
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        }
        k => DMatrix::from_fn(k, k, |r, c| m[r][c]).determinant(),
    }
}

pub(crate) fn eigenvalues_small(m: &[Vec<f64>]) -> Vec<f64> {
    match m.len() {
        1 => vec![m[0][0]],
        2 => {
            let mean = 0.5 * (m[0][0] + m[1][1]);
            let half = 0.5 * (m[0][0] - m[1][1]);
            let off = 0.5 * (m[0][1] + m[1][0]);
            let rad = half.hypot(off);
            vec![mean - rad, mean + rad]
        }
        k => SymmetricEigen::new(DMatrix::from_fn(k, k, |r, c| 0.5 * (m[r][c] + m[c][r])))
            .eigenvalues
            .iter()
            .copied()
            .collect(),
    }
}

fn cofactor_small(m: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let k = m.len();
    (0..k)
        .map(|i| {
            (0..k)
                .map(|j| {
                    let minor: Vec<Vec<f64>> = (0..k)
                        .filter(|&r| r != j)
                        .map(|r| (0..k).filter(|&c| c != i).map(|c| m[r][c]).collect())
                        .collect();
                    let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                    sign * det_small(&minor)
                })
                .collect()
        })
        .collect()
}

/// Nodal data of a support function on a grid.
#[derive(Debug, Clone, Serialize)]
pub struct NodalData {
    pub values: Vec<f64>,
    pub dets: Vec<f64>,
    pub min_eigs: Vec<f64>,
}

impl NodalData {
    /// First node violating the convexity tolerance, if any.
    pub fn convexity_violation(&self, tol: f64) -> Option<Error> {
        let (node, &min_eig) = self
            .min_eigs
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))?;
        (min_eig < -tol || !min_eig.is_finite()).then_some(Error::NotConvex { node, min_eig })
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.min_eigs.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Per-node values, gradients and W-matrices of every basis function.
#[derive(Debug, Clone)]
pub struct BasisTable {
    pub n: usize,
    /// [function][node]
    values: Vec<Vec<f64>>,
    /// [function][node][n×n]
    w: Vec<Vec<Vec<f64>>>,
    nodes: usize,
}

impl BasisTable {
    pub fn new(basis: &Basis, grid: &SphereGrid) -> Result<Self> {
        ensure(basis.n == grid.n, || "basis and grid dimensions differ".into())?;
        let frames: Vec<Vec<Vec<f64>>> = grid.nodes.par_iter().map(|x| tangent_frame(x)).collect();
        let locals: Vec<Vec<Local>> = basis
            .functions
            .par_iter()
            .map(|f| grid.nodes.iter().zip(&frames).map(|(x, e)| f.local(x, e)).collect())
            .collect();
        let values = locals.iter().map(|l| l.iter().map(|v| v.value).collect()).collect();
        let w = locals.into_iter().map(|l| l.into_iter().map(|v| v.w).collect()).collect();
        Ok(Self { n: basis.n, values, w, nodes: grid.len() })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Nodal values of basis function k.
    pub fn values(&self, k: usize) -> &[f64] {
        &self.values[k]
    }

    /// W-matrix (n×n, row-major) of basis function k at a node.
    pub fn w(&self, k: usize, node: usize) -> &[f64] {
        &self.w[k][node]
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    /// Nodal values, det W and min eigenvalue of Σ c_k B_k.
    pub fn evaluate(&self, coeffs: &[f64]) -> NodalData {
        let n = self.n;
        let per_node: Vec<(f64, f64, f64)> = (0..self.nodes)
            .into_par_iter()
            .map(|i| {
                let mut value = 0.0;
                let mut w = vec![0.0; n * n];
                for (k, c) in coeffs.iter().enumerate() {
                    if *c == 0.0 {
                        continue;
                    }
                    value += c * self.values[k][i];
                    for (acc, v) in w.iter_mut().zip(&self.w[k][i]) {
                        *acc += c * v;
                    }
                }
                let rows: Vec<Vec<f64>> = w.chunks(n).map(<[f64]>::to_vec).collect();
                let det = det_small(&rows);
                let min = eigenvalues_small(&rows).into_iter().fold(f64::INFINITY, f64::min);
                (value, det, min)
            })
            .collect();
        NodalData {
            values: per_node.iter().map(|t| t.0).collect(),
            dets: per_node.iter().map(|t| t.1).collect(),
            min_eigs: per_node.iter().map(|t| t.2).collect(),
        }
    }
}

impl SupportFunction {
    /// h ≡ c.
    pub fn constant(n: usize, c: f64) -> Self {
        Self { n, repr: Repr::Spectral { basis: Arc::new(Basis::constant(n)), coeffs: vec![c] } }
    }

    pub fn spectral(basis: Arc<Basis>, coeffs: Vec<f64>) -> Result<Self> {
        ensure(coeffs.len() == basis.len(), || {
            format!("{} coefficients for a basis of {}", coeffs.len(), basis.len())
        })?;
        if let Some(i) = coeffs.iter().position(|c| !c.is_finite()) {
            return Err(Error::NonFinite(format!("coefficient {i}")));
        }
        Ok(Self { n: basis.n, repr: Repr::Spectral { basis, coeffs } })
    }

    /// The planar ellipse with semi-axes a (along x) and b: h(θ) = √(a²cos²θ + b²sin²θ).
    pub fn ellipse(a: f64, b: f64) -> Result<Self> {
        Self::ellipsoid(&[a, b], None)
    }

    /// Ellipsoid with the given semi-axes, optionally rotated: h(X) = √(Xᵀ R D² Rᵀ X).
    pub fn ellipsoid(axes: &[f64], rotation: Option<&[Vec<f64>]>) -> Result<Self> {
        ensure(axes.len() >= 2, || "ellipsoid needs at least two axes".into())?;
        ensure(axes.iter().all(|a| *a > 0.0 && a.is_finite()), || {
            "ellipsoid axes must be positive".into()
        })?;
        let m = axes.len();
        let matrix = (0..m)
            .map(|r| {
                (0..m)
                    .map(|c| {
                        (0..m)
                            .map(|k| {
                                let (rr, rc) = match rotation {
                                    Some(rot) => (rot[r][k], rot[c][k]),
                                    None => (f64::from(u8::from(r == k)), f64::from(u8::from(c == k))),
                                };
                                rr * axes[k] * axes[k] * rc
                            })
                            .sum()
                    })
                    .collect()
            })
            .collect();
        Ok(Self { n: m - 1, repr: Repr::Ellipsoid { matrix } })
    }

    /// Least-squares Fourier fit of nodal values on a circle grid, up to mode K.
    pub fn fit_circle(grid: &SphereGrid, values: &[f64], max_k: u32) -> Result<Self> {
        ensure(grid.n == 1, || "Fourier fit needs a circle grid".into())?;
        ensure(values.len() == grid.len(), || "one value per node".into())?;
        ensure((2 * max_k as usize) < grid.len(), || "too many modes for the grid".into())?;
        let basis = Basis::fourier(max_k);
        let coeffs = basis
            .functions
            .iter()
            .map(|f| {
                let num: Vec<f64> = grid.nodes.iter().zip(values).map(|(x, v)| f.value(x) * v).collect();
                let den: Vec<f64> = grid.nodes.iter().map(|x| f.value(x).powi(2)).collect();
                grid.integrate(&num) / grid.integrate(&den)
            })
            .collect();
        Self::spectral(Arc::new(basis), coeffs)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Spectral basis and coefficients, if any.
    pub fn spectral_parts(&self) -> Option<(&Arc<Basis>, &[f64])> {
        match &self.repr {
            Repr::Spectral { basis, coeffs } => Some((basis, coeffs)),
            Repr::Ellipsoid { .. } => None,
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match &self.repr {
            Repr::Spectral { basis, coeffs } => {
                let terms: Vec<f64> =
                    basis.functions.iter().zip(coeffs).map(|(f, c)| c * f.value(x)).collect();
                pairwise_sum(&terms)
            }
            Repr::Ellipsoid { matrix } => quad_form(matrix, x).sqrt(),
        }
    }

    fn local(&self, x: &[f64], frame: &[Vec<f64>]) -> Local {
        match &self.repr {
            Repr::Spectral { basis, coeffs } => {
                let n = self.n;
                let mut out = Local { value: 0.0, grad: vec![0.0; n], w: vec![0.0; n * n] };
                for (f, c) in basis.functions.iter().zip(coeffs) {
                    let l = f.local(x, frame);
                    out.value += c * l.value;
                    for (a, b) in out.grad.iter_mut().zip(&l.grad) {
                        *a += c * b;
                    }
                    for (a, b) in out.w.iter_mut().zip(&l.w) {
                        *a += c * b;
                    }
                }
                out
            }
            Repr::Ellipsoid { matrix } => {
                let n = self.n;
                let (h, mx) = ellipsoid_parts(matrix, x);
                let hess = ellipsoid_hessian(matrix, x);
                let m = n + 1;
                let grad = frame.iter().map(|e| dot(e, &mx) / h).collect();
                let mut w = vec![0.0; n * n];
                for i in 0..n {
                    for j in 0..n {
                        let mut v = 0.0;
                        for r in 0..m {
                            for c in 0..m {
                                v += frame[i][r] * hess[r * m + c] * frame[j][c];
                            }
                        }
                        w[i * n + j] = v;
                    }
                }
                Local { value: h, grad, w }
            }
        }
    }

    /// Ambient Hessian D²H at a unit vector, row-major (n+1)×(n+1).
    pub fn ambient_hessian(&self, x: &[f64]) -> Vec<f64> {
        match &self.repr {
            Repr::Spectral { basis, coeffs } => {
                let m = x.len();
                let mut out = vec![0.0; m * m];
                for (f, c) in basis.functions.iter().zip(coeffs) {
                    for (a, b) in out.iter_mut().zip(f.ambient_hessian(x)) {
                        *a += c * b;
                    }
                }
                out
            }
            Repr::Ellipsoid { matrix } => ellipsoid_hessian(matrix, x),
        }
    }

    /// h ∘ R for an orthogonal R.
    pub fn rotated(&self, rotation: &[Vec<f64>]) -> Self {
        let repr = match &self.repr {
            Repr::Spectral { basis, coeffs } => {
                let functions = basis.functions.iter().map(|f| f.rotated(rotation)).collect();
                Repr::Spectral { basis: Arc::new(Basis { n: basis.n, functions }), coeffs: coeffs.clone() }
            }
            Repr::Ellipsoid { matrix } => {
                // RᵀMR
                let m = matrix.len();
                let rt_m_r = (0..m)
                    .map(|r| {
                        (0..m)
                            .map(|c| {
                                (0..m)
                                    .flat_map(|i| (0..m).map(move |j| (i, j)))
                                    .map(|(i, j)| rotation[i][r] * matrix[i][j] * rotation[j][c])
                                    .sum()
                            })
                            .collect()
                    })
                    .collect();
                Repr::Ellipsoid { matrix: rt_m_r }
            }
        };
        Self { n: self.n, repr }
    }

    /// c·h.
    pub fn scaled(&self, c: f64) -> Self {
        let repr = match &self.repr {
            Repr::Spectral { basis, coeffs } => {
                Repr::Spectral { basis: basis.clone(), coeffs: coeffs.iter().map(|v| v * c).collect() }
            }
            Repr::Ellipsoid { matrix } => Repr::Ellipsoid {
                matrix: matrix.iter().map(|row| row.iter().map(|v| v * c * c).collect()).collect(),
            },
        };
        Self { n: self.n, repr }
    }

    /// Nodal values, det W and the convexity margin on a grid.
    pub fn nodal(&self, grid: &SphereGrid) -> Result<NodalData> {
        ensure(grid.n == self.n, || "grid dimension differs from support function".into())?;
        let per_node: Vec<(f64, f64, f64)> = grid
            .nodes
            .par_iter()
            .map(|x| {
                let frame = tangent_frame(x);
                let l = self.local(x, &frame);
                let rows: Vec<Vec<f64>> = l.w.chunks(self.n).map(<[f64]>::to_vec).collect();
                let min = eigenvalues_small(&rows).into_iter().fold(f64::INFINITY, f64::min);
                (l.value, det_small(&rows), min)
            })
            .collect();
        Ok(NodalData {
            values: per_node.iter().map(|t| t.0).collect(),
            dets: per_node.iter().map(|t| t.1).collect(),
            min_eigs: per_node.iter().map(|t| t.2).collect(),
        })
    }

    pub fn to_json(&self) -> serde_json::Value {
        match &self.repr {
            Repr::Spectral { basis, coeffs } => serde_json::json!({
                "n": self.n,
                "L": basis.max_degree(),
                "coeffs": coeffs,
            }),
            Repr::Ellipsoid { matrix } => serde_json::json!({ "n": self.n, "ellipsoid": matrix }),
        }
    }
}

impl SphereFunction for SupportFunction {
    fn value(&self, x: &[f64]) -> f64 {
        SupportFunction::value(self, x)
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let frame = tangent_frame(x);
        let l = self.local(x, &frame);
        let mut out = vec![0.0; x.len()];
        for (e, g) in frame.iter().zip(&l.grad) {
            for (o, v) in out.iter_mut().zip(e) {
                *o += g * v;
            }
        }
        out
    }
}

fn quad_form(m: &[Vec<f64>], x: &[f64]) -> f64 {
    m.iter().zip(x).map(|(row, xi)| xi * dot(row, x)).sum()
}

fn ellipsoid_parts(m: &[Vec<f64>], x: &[f64]) -> (f64, Vec<f64>) {
    let mx: Vec<f64> = m.iter().map(|row| dot(row, x)).collect();
    (dot(&mx, x).sqrt(), mx)
}

/// D²H = M/H − (MX)(MX)ᵀ/H³ for H = √(XᵀMX).
fn ellipsoid_hessian(m: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    let (h, mx) = ellipsoid_parts(m, x);
    let dim = x.len();
    let h3 = h * h * h;
    (0..dim * dim)
        .map(|idx| {
            let (r, c) = (idx / dim, idx % dim);
            m[r][c] / h - mx[r] * mx[c] / h3
        })
        .collect()
}

fn check_unit(x: &[f64], n: usize) -> Result<()> {
    ensure(x.len() == n + 1, || format!("point of dimension {} on S^{n}", x.len()))?;
    ensure(x.iter().all(|v| v.is_finite()), || "non-finite point".into())?;
    ensure((norm(x) - 1.0).abs() < 1e-10, || "point is not a unit vector".into())
}

/// W = ∇²h + hI at X in the standard tangent frame.
pub fn hessian_frame(h: &SupportFunction, x: &[f64]) -> Result<FrameHessian> {
    check_unit(x, h.n)?;
    let frame = tangent_frame(x);
    hessian_in_frame(h, x, frame)
}

/// W in a caller-supplied orthonormal tangent frame.
pub fn hessian_in_frame(h: &SupportFunction, x: &[f64], frame: Vec<Vec<f64>>) -> Result<FrameHessian> {
    check_unit(x, h.n)?;
    ensure(frame.len() == h.n, || "frame must have n vectors".into())?;
    let l = h.local(x, &frame);
    if !l.value.is_finite() || l.w.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("support function evaluation".into()));
    }
    let n = h.n;
    Ok(FrameHessian {
        point: x.to_vec(),
        frame,
        matrix: l.w.chunks(n).map(<[f64]>::to_vec).collect(),
        value: l.value,
        gradient: l.grad,
    })
}

/// det W through the gnomonic chart of X's hemisphere: v(y) = √(1+|y|²) h(X(y)) has
/// D²v equal to the leading n×n block of D²H at (y, ∓1), and det W = s^{n+2} det D²v.
pub fn chart_det(h: &SupportFunction, x: &[f64]) -> Result<f64> {
    check_unit(x, h.n)?;
    let last = x[h.n];
    if last.abs() < 1e-12 {
        return Err(Error::Equator(last));
    }
    let cp = project(x)?;
    let s = cp.conformal;
    let m = h.n + 1;
    let hess = h.ambient_hessian(x);
    // D²H is (−1)-homogeneous: D²H(sX) = D²H(X)/s
    let block: Vec<Vec<f64>> =
        (0..h.n).map(|r| (0..h.n).map(|c| hess[r * m + c] / s).collect()).collect();
    Ok(s.powi(h.n as i32 + 2) * det_small(&block))
}

/// V = (1/(n+1)) ∫ h det W dσ, rejecting non-convex input.
pub fn volume(h: &SupportFunction, grid: &SphereGrid) -> Result<f64> {
    let data = h.nodal(grid)?;
    volume_from_nodal(&data, grid)
}

pub fn volume_from_nodal(data: &NodalData, grid: &SphereGrid) -> Result<f64> {
    if let Some(err) = data.convexity_violation(CONVEXITY_TOL) {
        return Err(err);
    }
    let prod: Vec<f64> = data.values.iter().zip(&data.dets).map(|(a, b)| a * b).collect();
    Ok(grid.integrate(&prod) / (grid.n as f64 + 1.0))
}

/// ∫ h^p dσ.
pub fn lp_integral(h: &SupportFunction, p: f64, grid: &SphereGrid) -> Result<f64> {
    ensure(p.is_finite(), || "exponent must be finite".into())?;
    let values: Vec<f64> = grid.nodes.par_iter().map(|x| h.value(x)).collect();
    lp_from_values(&values, p, grid)
}

pub fn lp_from_values(values: &[f64], p: f64, grid: &SphereGrid) -> Result<f64> {
    if let Some((node, &value)) = values.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
        return Err(Error::NonPositive { node, value });
    }
    let powered: Vec<f64> = values.iter().map(|v| v.powf(p)).collect();
    let total = grid.integrate(&powered);
    if !total.is_finite() {
        return Err(Error::NonFinite("L_p integral".into()));
    }
    Ok(total)
}

/// max over nodes of |det W − f h^{p−1}| / (1 + |f h^{p−1}|).
pub fn ma_residual<F: Fn(&[f64]) -> f64 + Sync>(
    h: &SupportFunction,
    f: F,
    p: f64,
    grid: &SphereGrid,
) -> Result<f64> {
    let data = h.nodal(grid)?;
    if let Some((node, &value)) = data.values.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
        return Err(Error::NonPositive { node, value });
    }
    let res: Vec<f64> = grid
        .nodes
        .par_iter()
        .zip(data.values.par_iter().zip(&data.dets))
        .map(|(x, (hv, det))| {
            let rhs = f(x) * hv.powf(p - 1.0);
            (det - rhs).abs() / (1.0 + rhs.abs())
        })
        .collect();
    let worst = res.iter().copied().fold(0.0, f64::max);
    if !worst.is_finite() {
        return Err(Error::NonFinite("Monge-Ampère residual".into()));
    }
    Ok(worst)
}

/// Area of the planar ellipse and the ball volume, used as reference values.
pub fn unit_ball_volume(n: usize) -> f64 {
    crate::sphere::sphere_area(n) / (n as f64 + 1.0)
}
