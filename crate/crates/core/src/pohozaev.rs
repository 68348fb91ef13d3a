//! Projective vector fields on S^n and the integral identity ∫ (∇_ξ f + βf) h^p dσ = 0.
//!
//! The chart field ξ(x) = (C·x)x + (A − D)x − B on the south chart pulls back to the
//! tangential projection of a linear field: ξ(X) = NX − (X·NX)X with
//! N = [[A − D·I, B], [Cᵀ, 0]]. That expression is smooth on the whole sphere, so it is
//! used for both hemispheres. The weight is β = γ (tr N − (n+1) XᵀNX) with
//! γ = (p+n+1)/(n+1).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::sphere::{dot, SphereGrid};
use crate::support::{SphereFunction, SupportFunction};

/// The parameter block (A, B, C, D) of a projective field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectiveField {
    /// trace-free symmetric n×n
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub d: f64,
}

impl ProjectiveField {
    pub fn new(a: Vec<Vec<f64>>, b: Vec<f64>, c: Vec<f64>, d: f64) -> Result<Self> {
        let n = b.len();
        ensure(n >= 1, || "field needs n >= 1".into())?;
        ensure(c.len() == n && a.len() == n && a.iter().all(|r| r.len() == n), || {
            "inconsistent field dimensions".into()
        })?;
        let trace: f64 = (0..n).map(|i| a[i][i]).sum();
        ensure(trace.abs() <= 1e-14, || format!("A must be trace-free, trace = {trace:e}"))?;
        for i in 0..n {
            for j in 0..i {
                ensure((a[i][j] - a[j][i]).abs() <= 1e-14, || "A must be symmetric".into())?;
            }
        }
        let all = a.iter().flatten().chain(&b).chain(&c).chain(std::iter::once(&d));
        ensure(all.into_iter().all(|v| v.is_finite()), || "non-finite field parameter".into())?;
        Ok(Self { a, b, c, d })
    }

    pub fn zero(n: usize) -> Self {
        Self { a: vec![vec![0.0; n]; n], b: vec![0.0; n], c: vec![0.0; n], d: 0.0 }
    }

    /// Pure dilation field: chart field −D x.
    pub fn dilation(n: usize, d: f64) -> Self {
        Self { d, ..Self::zero(n) }
    }

    pub fn translation(b: Vec<f64>) -> Self {
        let n = b.len();
        Self { b, ..Self::zero(n) }
    }

    pub fn special_conformal(c: Vec<f64>) -> Self {
        let n = c.len();
        Self { c, ..Self::zero(n) }
    }

    /// A seeded random field with entries uniform in [−1, 1]; A is symmetrized and made
    /// trace-free after sampling.
    pub fn random(n: usize, rng: &mut impl Rng) -> Self {
        let mut a: Vec<Vec<f64>> =
            (0..n).map(|_| (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect()).collect();
        for i in 0..n {
            for j in 0..i {
                let m = 0.5 * (a[i][j] + a[j][i]);
                a[i][j] = m;
                a[j][i] = m;
            }
        }
        let shift = (0..n).map(|i| a[i][i]).sum::<f64>() / n as f64;
        for (i, row) in a.iter_mut().enumerate() {
            row[i] -= shift;
        }
        // make the diagonal sum exactly zero in floating point
        let residual: f64 = (0..n).map(|i| a[i][i]).sum();
        a[n - 1][n - 1] -= residual;
        let b = (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let c = (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let d = rng.gen_range(-1.0..=1.0);
        Self { a, b, c, d }
    }

    /// `count` fields from a fixed seed.
    pub fn seeded(n: usize, count: usize, seed: u64) -> Vec<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count).map(|_| Self::random(n, &mut rng)).collect()
    }

    pub fn n(&self) -> usize {
        self.b.len()
    }

    /// Componentwise λ·self + μ·other.
    pub fn combine(&self, lambda: f64, other: &Self, mu: f64) -> Self {
        let mix = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(x, y)| lambda * x + mu * y).collect();
        Self {
            a: self.a.iter().zip(&other.a).map(|(r, s)| mix(r, s)).collect(),
            b: mix(&self.b, &other.b),
            c: mix(&self.c, &other.c),
            d: lambda * self.d + mu * other.d,
        }
    }

    /// N = [[A − D·I, B], [Cᵀ, 0]].
    pub fn matrix(&self) -> Vec<Vec<f64>> {
        let n = self.n();
        let mut m = vec![vec![0.0; n + 1]; n + 1];
        for i in 0..n {
            for j in 0..n {
                m[i][j] = self.a[i][j] - if i == j { self.d } else { 0.0 };
            }
            m[i][n] = self.b[i];
            m[n][i] = self.c[i];
        }
        m
    }

    /// ξ(x) = (C·x)x + (A − D)x − B in chart coordinates.
    pub fn chart_field(&self, x: &[f64]) -> Vec<f64> {
        let cx = dot(&self.c, x);
        (0..self.n())
            .map(|k| cx * x[k] + dot(&self.a[k], x) - self.d * x[k] - self.b[k])
            .collect()
    }

    /// σ(x) = n(C·x − D)/(n+1).
    pub fn chart_sigma(&self, x: &[f64]) -> f64 {
        let n = self.n() as f64;
        n * (dot(&self.c, x) - self.d) / (n + 1.0)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("field serializes")
    }
}

/// ξ(X) = NX − (X·NX)X.
pub fn field_on_sphere(pf: &ProjectiveField, x: &[f64]) -> Vec<f64> {
    let nx: Vec<f64> = pf.matrix().iter().map(|row| dot(row, x)).collect();
    let radial = dot(&nx, x);
    nx.iter().zip(x).map(|(v, xi)| v - radial * xi).collect()
}

/// β(X) = γ (tr N − (n+1) XᵀNX), γ = (p+n+1)/(n+1).
pub fn beta_weight(pf: &ProjectiveField, x: &[f64], p: f64) -> f64 {
    let n = pf.n() as f64;
    let gamma = (p + n + 1.0) / (n + 1.0);
    let m = pf.matrix();
    let trace: f64 = (0..m.len()).map(|i| m[i][i]).sum();
    let xnx: f64 = m.iter().zip(x).map(|(row, xi)| xi * dot(row, x)).sum();
    gamma * (trace - (n + 1.0) * xnx)
}

/// The closed form of β in the chart coordinate x of a south-hemisphere point:
/// γ [(C·x − D)(n − |x|²) − (n+1)(xᵀAx − B·x)] / (1+|x|²).
/// It agrees with `beta_weight` when C = 0 and differs by −γ C·x otherwise.
pub fn beta_chart_closed_form(pf: &ProjectiveField, x: &[f64], p: f64) -> f64 {
    let n = pf.n() as f64;
    let gamma = (p + n + 1.0) / (n + 1.0);
    let r2 = dot(x, x);
    let xax: f64 = pf.a.iter().zip(x).map(|(row, xi)| xi * dot(row, x)).sum();
    gamma * ((dot(&pf.c, x) - pf.d) * (n - r2) - (n + 1.0) * (xax - dot(&pf.b, x))) / (1.0 + r2)
}

/// K_f = ∇_ξ f + βf at a point.
pub fn k_f<F: SphereFunction + ?Sized>(f: &F, pf: &ProjectiveField, x: &[f64], p: f64) -> f64 {
    let xi = field_on_sphere(pf, x);
    dot(&f.gradient(x), &xi) + beta_weight(pf, x, p) * f.value(x)
}

/// ∫ K_f h^p dσ by quadrature.
pub fn identity_integral<F: SphereFunction + ?Sized>(
    f: &F,
    h: &SupportFunction,
    p: f64,
    pf: &ProjectiveField,
    grid: &SphereGrid,
) -> Result<f64> {
    ensure(pf.n() == grid.n && h.n() == grid.n, || "dimension mismatch".into())?;
    let values: Vec<f64> = grid.nodes.par_iter().map(|x| h.value(x)).collect();
    identity_integral_nodal(f, &values, p, pf, grid)
}

/// The same integral with h given by its nodal values.
pub fn identity_integral_nodal<F: SphereFunction + ?Sized>(
    f: &F,
    h_values: &[f64],
    p: f64,
    pf: &ProjectiveField,
    grid: &SphereGrid,
) -> Result<f64> {
    ensure(h_values.len() == grid.len(), || "one h value per node".into())?;
    if let Some((node, &value)) = h_values.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
        return Err(crate::Error::NonPositive { node, value });
    }
    let integrand: Vec<f64> = grid
        .nodes
        .par_iter()
        .zip(h_values)
        .map(|(x, h)| k_f(f, pf, x, p) * h.powf(p))
        .collect();
    let total = grid.integrate(&integrand);
    if !total.is_finite() {
        return Err(crate::Error::NonFinite("identity integral".into()));
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere::{lift, pullback_vector, tangential, Hemisphere};
    use crate::support::Constant;

    #[test]
    fn spec_points() {
        let d = ProjectiveField::dilation(1, 1.0);
        assert!(field_on_sphere(&d, &[0.0, -1.0]).iter().all(|v| v.abs() < 1e-15));
        let b = ProjectiveField::translation(vec![1.0]);
        let v = field_on_sphere(&b, &[0.0, -1.0]);
        assert!((v[0] + 1.0).abs() < 1e-15 && v[1].abs() < 1e-15);
        let c = ProjectiveField::special_conformal(vec![1.0]);
        let x = lift(&[1.0], Hemisphere::South);
        let v = field_on_sphere(&c, &x);
        let want = pullback_vector(&[1.0], &[1.0]);
        assert!(v.iter().zip(&want).all(|(a, b)| (a - b).abs() < 1e-15));
        assert!((want[0] - 1.0 / 8f64.sqrt()).abs() < 1e-15);
        assert!((beta_weight(&d, &[0.0, -1.0], -3.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn matches_chart_pullback_on_south() {
        let fields = ProjectiveField::seeded(2, 4, 7);
        for pf in &fields {
            for y in [[0.3, -0.2], [2.0, 1.5], [-40.0, 3.0]] {
                let x = lift(&y, Hemisphere::South);
                let a = field_on_sphere(pf, &x);
                let b = pullback_vector(&y, &pf.chart_field(&y));
                assert!(a.iter().zip(&b).all(|(u, v)| (u - v).abs() < 1e-12));
                assert!(dot(&a, &x).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn beta_agrees_with_closed_form_without_c() {
        let mut pf = ProjectiveField::seeded(2, 1, 3).remove(0);
        let y = [0.4, -1.1];
        let x = lift(&y, Hemisphere::South);
        let p = -5.0;
        let gamma = (p + 3.0) / 3.0;
        let diff = beta_weight(&pf, &x, p) - beta_chart_closed_form(&pf, &y, p);
        assert!((diff - gamma * dot(&pf.c, &y)).abs() < 1e-12);
        pf.c = vec![0.0; 2];
        assert!((beta_weight(&pf, &x, p) - beta_chart_closed_form(&pf, &y, p)).abs() < 1e-12);
    }

    #[test]
    fn critical_exponent_kills_beta() {
        for pf in ProjectiveField::seeded(2, 3, 11) {
            assert_eq!(beta_weight(&pf, &[0.6, 0.0, -0.8], -3.0), 0.0);
        }
    }

    #[test]
    fn continuity_across_equator() {
        for pf in ProjectiveField::seeded(1, 5, 5) {
            for eps in [1e-6f64, 1e-9] {
                let s = [eps.cos(), -eps.sin()];
                let nn = [eps.cos(), eps.sin()];
                let (fs, fn_) = (field_on_sphere(&pf, &s), field_on_sphere(&pf, &nn));
                assert!(fs.iter().zip(&fn_).all(|(a, b)| (a - b).abs() < 1e-5));
                assert!((beta_weight(&pf, &s, -4.0) - beta_weight(&pf, &nn, -4.0)).abs() < 1e-5);
            }
        }
    }

    #[test]
    fn beta_integrates_to_zero() {
        let g = SphereGrid::new(2, 16).unwrap();
        for pf in ProjectiveField::seeded(2, 3, 1) {
            let one = SupportFunction::constant(2, 1.0);
            let v = identity_integral(&Constant(1.0), &one, -4.0, &pf, &g).unwrap();
            assert!(v.abs() < 1e-12);
        }
    }

    #[test]
    fn divergence_of_field() {
        // div_S ξ = tr N − (n+1) XᵀNX, checked by central differences in a tangent frame
        let pf = ProjectiveField::seeded(2, 1, 9).remove(0);
        let x = [0.36, 0.48, -0.8];
        let frame = crate::sphere::tangent_frame(&x);
        let h = 1e-5;
        let mut div = 0.0;
        for e in &frame {
            let mv = |t: f64| -> Vec<f64> {
                let mut y: Vec<f64> = x.iter().zip(e).map(|(a, b)| a + t * b).collect();
                let r = dot(&y, &y).sqrt();
                y.iter_mut().for_each(|v| *v /= r);
                y
            };
            let (yp, ym) = (mv(h), mv(-h));
            let (fp, fm) = (field_on_sphere(&pf, &yp), field_on_sphere(&pf, &ym));
            let d: Vec<f64> = fp.iter().zip(&fm).map(|(a, b)| (a - b) / (2.0 * h)).collect();
            div += dot(&tangential(&x, &d), e);
        }
        let n = 2.0;
        let gamma = (-4.0 + n + 1.0) / (n + 1.0);
        let want = beta_weight(&pf, &x, -4.0) / gamma;
        assert!((div - want).abs() < 1e-8, "{div} {want}");
    }

    #[test]
    fn vanishes_on_constructed_solution_pairs() {
        // any positive convex h solves the equation for f = det W · h^{1−p}
        use crate::support::Basis;
        use std::sync::Arc;
        let grid = SphereGrid::new(1, 512).unwrap();
        let basis = Arc::new(Basis::fourier(5));
        let mut c = vec![0.0; basis.len()];
        c[0] = 1.0;
        c[3] = 0.05;
        c[10] = 0.01;
        let h = SupportFunction::spectral(basis, c).unwrap();
        let p = -4.0;
        let data = h.nodal(&grid).unwrap();
        let fvals: Vec<f64> = data.values.iter().zip(&data.dets).map(|(v, d)| d * v.powf(1.0 - p)).collect();
        let f = SupportFunction::fit_circle(&grid, &fvals, 120).unwrap();
        for pf in ProjectiveField::seeded(1, 5, 42) {
            let v = identity_integral(&f, &h, p, &pf, &grid).unwrap();
            assert!(v.abs() < 1e-10, "{v}");
        }
    }
}
