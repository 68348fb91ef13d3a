//! Quadrature grids on S^n and the gnomonic hemisphere charts.
//!
//! The south chart sends X = (x, -1)/√(1+|x|²) to x ∈ R^n; the north chart is
//! its mirror image under X_{n+1} ↦ -X_{n+1}. Vector fields on a chart are
//! pulled back to tangent vectors of the sphere with `pullback_vector`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::quadrature::{gauss_legendre, weighted_sum};

/// |S^n| for n ≥ 1.
pub fn sphere_area(n: usize) -> f64 {
    // |S^n| = 2π^{(n+1)/2} / Γ((n+1)/2), via the recurrence |S^n| = 2π/(n-1) |S^{n-2}|
    match n {
        0 => 2.0,
        1 => 2.0 * PI,
        _ => 2.0 * PI / (n as f64 - 1.0) * sphere_area(n - 2),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Hemisphere {
    South,
    North,
}

impl Hemisphere {
    pub fn of(point: &[f64]) -> Option<Self> {
        let last = *point.last()?;
        if last < 0.0 {
            Some(Hemisphere::South)
        } else if last > 0.0 {
            Some(Hemisphere::North)
        } else {
            None
        }
    }
}

/// Quadrature nodes and weights on S^n.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SphereGrid {
    pub n: usize,
    pub resolution: usize,
    pub nodes: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    #[serde(skip)]
    pub hemispheres: Vec<Hemisphere>,
}

impl SphereGrid {
    /// Build the tensor grid for `n ∈ {1, 2}`.
    ///
    /// n = 1: θ_k = 2π(k+½)/N with uniform weights 2π/N.
    /// n = 2: N Gauss-Legendre colatitudes × 2N half-offset longitudes; N must be even so
    /// that no node sits on the equator.
    pub fn new(n: usize, resolution: usize) -> Result<Self> {
        ensure(resolution >= 8, || format!("resolution {resolution} < 8"))?;
        let (nodes, weights) = match n {
            1 => {
                let w = 2.0 * PI / resolution as f64;
                let nodes = (0..resolution)
                    .map(|k| {
                        let t = 2.0 * PI * (k as f64 + 0.5) / resolution as f64;
                        vec![t.cos(), t.sin()]
                    })
                    .collect();
                (nodes, vec![w; resolution])
            }
            2 => {
                ensure(resolution.is_multiple_of(2), || {
                    format!("odd resolution {resolution} places a node on the equator")
                })?;
                let (z, wz) = gauss_legendre(resolution);
                let nlon = 2 * resolution;
                let wphi = 2.0 * PI / nlon as f64;
                let mut nodes = Vec::with_capacity(resolution * nlon);
                let mut weights = Vec::with_capacity(resolution * nlon);
                for (zi, wi) in z.iter().zip(&wz) {
                    let rho = (1.0 - zi * zi).sqrt();
                    for k in 0..nlon {
                        let phi = 2.0 * PI * (k as f64 + 0.5) / nlon as f64;
                        nodes.push(vec![rho * phi.cos(), rho * phi.sin(), *zi]);
                        weights.push(wi * wphi);
                    }
                }
                (nodes, weights)
            }
            _ => return Err(Error::UnsupportedDimension(n)),
        };
        let hemispheres = nodes
            .iter()
            .map(|x: &Vec<f64>| Hemisphere::of(x).expect("grid nodes avoid the equator"))
            .collect();
        Ok(Self { n, resolution, nodes, weights, hemispheres })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Quadrature of nodal values.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        weighted_sum(&self.weights, values)
    }

    /// Quadrature of a function of the node position.
    pub fn integrate_fn<F: Fn(&[f64]) -> f64>(&self, f: F) -> f64 {
        let values: Vec<f64> = self.nodes.iter().map(|x| f(x)).collect();
        self.integrate(&values)
    }

    /// Index of the node within `tol` of `point`, if any.
    pub fn find_node(&self, point: &[f64], tol: f64) -> Option<usize> {
        match self.n {
            1 => {
                // nodes are equispaced: locate by angle
                let n = self.len() as f64;
                let t = point[1].atan2(point[0]).rem_euclid(2.0 * PI);
                let k = (t * n / (2.0 * PI) - 0.5).round().rem_euclid(n) as usize;
                (dist2(&self.nodes[k], point).sqrt() < tol).then_some(k)
            }
            _ => self
                .nodes
                .iter()
                .position(|x| dist2(x, point).sqrt() < tol),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({ "n": self.n, "nodes": self.nodes, "weights": self.weights })
    }
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// A sphere point together with its gnomonic chart coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartPoint {
    pub point: Vec<f64>,
    pub coord: Vec<f64>,
    /// s = √(1+|x|²) = 1/|X_{n+1}|
    pub conformal: f64,
    pub hemisphere: Hemisphere,
}

/// South chart: x = -X'/X_{n+1}.
pub fn project_south(point: &[f64]) -> Result<ChartPoint> {
    let last = *point.last().ok_or_else(|| Error::Validation("empty point".into()))?;
    if last >= 0.0 {
        return Err(Error::Validation(format!(
            "south chart needs X_(n+1) < 0, got {last:e}"
        )));
    }
    Ok(chart_point(point, Hemisphere::South))
}

/// North chart: x = X'/X_{n+1}, the mirror of the south chart.
pub fn project_north(point: &[f64]) -> Result<ChartPoint> {
    let last = *point.last().ok_or_else(|| Error::Validation("empty point".into()))?;
    if last <= 0.0 {
        return Err(Error::Validation(format!(
            "north chart needs X_(n+1) > 0, got {last:e}"
        )));
    }
    Ok(chart_point(point, Hemisphere::North))
}

/// Chart of the hemisphere containing `point`.
pub fn project(point: &[f64]) -> Result<ChartPoint> {
    match Hemisphere::of(point) {
        Some(Hemisphere::South) => project_south(point),
        Some(Hemisphere::North) => project_north(point),
        None => Err(Error::Equator(0.0)),
    }
}

fn chart_point(point: &[f64], hemisphere: Hemisphere) -> ChartPoint {
    let n = point.len() - 1;
    let last = point[n];
    let coord: Vec<f64> = point[..n].iter().map(|v| v / last.abs()).collect();
    ChartPoint {
        point: point.to_vec(),
        coord,
        conformal: 1.0 / last.abs(),
        hemisphere,
    }
}

/// Inverse chart T^*(x) for the given hemisphere.
pub fn lift(coord: &[f64], hemisphere: Hemisphere) -> Vec<f64> {
    let s = (1.0 + dot(coord, coord)).sqrt();
    let mut point: Vec<f64> = coord.iter().map(|v| v / s).collect();
    point.push(match hemisphere {
        Hemisphere::South => -1.0 / s,
        Hemisphere::North => 1.0 / s,
    });
    point
}

/// Pullback of a chart vector ξ at chart coordinate x to a tangent vector of S^n (south chart):
/// ( ξ/s − (x·ξ)x/s³, (x·ξ)/s³ ).
pub fn pullback_vector(coord: &[f64], xi: &[f64]) -> Vec<f64> {
    let r2 = dot(coord, coord);
    let s = (1.0 + r2).sqrt();
    let xdot = dot(coord, xi);
    let s3 = s * s * s;
    let mut out: Vec<f64> = if r2.sqrt() > 1e8 {
        // split ξ into parts along and across x; the along part scales like 1/s³
        let r = r2.sqrt();
        let along = xdot / r;
        coord
            .iter()
            .zip(xi)
            .map(|(x, v)| {
                let unit = x / r;
                let perp = v - along * unit;
                perp / s + along * unit / s3
            })
            .collect()
    } else {
        coord
            .iter()
            .zip(xi)
            .map(|(x, v)| v / s - xdot * x / s3)
            .collect()
    };
    out.push(xdot / s3);
    out
}

/// Pullback through the chart of the given hemisphere. The north chart is the mirror of the
/// south one, so the last component flips sign.
pub fn pullback_vector_in(coord: &[f64], xi: &[f64], hemisphere: Hemisphere) -> Vec<f64> {
    let mut v = pullback_vector(coord, xi);
    if hemisphere == Hemisphere::North {
        let n = v.len() - 1;
        v[n] = -v[n];
    }
    v
}

/// Orthonormal tangent frame at a unit vector, as `n` vectors in R^{n+1}.
///
/// n = 1 uses the counter-clockwise tangent. n = 2 uses colatitude/longitude directions,
/// switching to a pole along e_1 within 10° of ±e_3.
pub fn tangent_frame(point: &[f64]) -> Vec<Vec<f64>> {
    match point.len() {
        2 => vec![vec![-point[1], point[0]]],
        3 => {
            let near_pole = point[2].abs() > (10.0f64).to_radians().cos();
            if near_pole {
                // rotate coordinates (x, y, z) -> (y, z, x) so the pole is e_1
                let rotated = [point[1], point[2], point[0]];
                let frame = spherical_frame(&rotated);
                frame
                    .into_iter()
                    .map(|v| vec![v[2], v[0], v[1]])
                    .collect()
            } else {
                spherical_frame(point).to_vec()
            }
        }
        _ => gram_schmidt_frame(point),
    }
}

fn spherical_frame(p: &[f64]) -> [Vec<f64>; 2] {
    let rho = (p[0] * p[0] + p[1] * p[1]).sqrt();
    let (c, s) = (p[0] / rho, p[1] / rho);
    let e_theta = vec![p[2] * c, p[2] * s, -rho];
    let e_phi = vec![-s, c, 0.0];
    [e_theta, e_phi]
}

fn gram_schmidt_frame(point: &[f64]) -> Vec<Vec<f64>> {
    let dim = point.len();
    let mut basis: Vec<Vec<f64>> = vec![point.to_vec()];
    for i in 0..dim {
        if basis.len() == dim {
            break;
        }
        let mut v = vec![0.0; dim];
        v[i] = 1.0;
        for b in &basis {
            let c = dot(&v, b);
            for (vi, bi) in v.iter_mut().zip(b) {
                *vi -= c * bi;
            }
        }
        let nv = norm(&v);
        if nv > 1e-6 {
            basis.push(v.into_iter().map(|x| x / nv).collect());
        }
    }
    basis.remove(0);
    basis
}

/// Project an ambient vector onto the tangent space at `point`.
pub fn tangential(point: &[f64], v: &[f64]) -> Vec<f64> {
    let c = dot(point, v);
    v.iter().zip(point).map(|(a, x)| a - c * x).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_grid_weights() {
        let g = SphereGrid::new(1, 8).unwrap();
        assert_eq!(g.len(), 8);
        for w in &g.weights {
            assert!((w - PI / 4.0).abs() < 1e-15);
        }
        assert!((g.weights.iter().sum::<f64>() - 2.0 * PI).abs() < 1e-14);
    }

    #[test]
    fn sphere_grid_total_weight() {
        let g = SphereGrid::new(2, 16).unwrap();
        assert!((g.weights.iter().sum::<f64>() - 4.0 * PI).abs() < 1e-12);
        assert_eq!(g.len(), 16 * 32);
    }

    #[test]
    fn cos_squared_on_circle() {
        let g = SphereGrid::new(1, 64).unwrap();
        let v = g.integrate_fn(|x| x[0] * x[0]);
        assert!((v - PI).abs() < 1e-12);
    }

    #[test]
    fn grid_errors() {
        assert!(matches!(SphereGrid::new(3, 16), Err(Error::UnsupportedDimension(3))));
        assert!(SphereGrid::new(1, 4).is_err());
        assert!(SphereGrid::new(2, 17).is_err());
    }

    #[test]
    fn grid_invariants() {
        for (n, res) in [(1, 9), (1, 64), (2, 8), (2, 20)] {
            let g = SphereGrid::new(n, res).unwrap();
            let area = sphere_area(n);
            for x in &g.nodes {
                assert!((norm(x) - 1.0).abs() < 1e-14);
                assert!(x[n] != 0.0);
            }
            assert!(g.weights.iter().all(|w| *w > 0.0));
            for i in 0..=n {
                assert!(g.integrate_fn(|x| x[i]).abs() < 1e-12);
                for j in 0..=n {
                    let v = g.integrate_fn(|x| x[i] * x[j]);
                    let expect = if i == j { area / (n as f64 + 1.0) } else { 0.0 };
                    assert!((v - expect).abs() < 1e-12, "n={n} i={i} j={j} {v}");
                }
            }
        }
    }

    #[test]
    fn circle_rule_is_exact_on_fourier_modes() {
        let n = 24;
        let g = SphereGrid::new(1, n).unwrap();
        for k in 1..n as i32 {
            let c = g.integrate_fn(|x| (k as f64 * x[1].atan2(x[0])).cos());
            let s = g.integrate_fn(|x| (k as f64 * x[1].atan2(x[0])).sin());
            assert!(c.abs() < 1e-12 && s.abs() < 1e-12, "k={k}");
        }
    }

    #[test]
    fn south_projection_examples() {
        let c = project_south(&[0.0, 0.0, -1.0]).unwrap();
        assert_eq!(c.coord, vec![0.0, 0.0]);
        assert!((c.conformal - 1.0).abs() < 1e-15);

        let r = 1.0 / 2f64.sqrt();
        let c = project_south(&[r, -r]).unwrap();
        assert!((c.coord[0] - 1.0).abs() < 1e-15);
        assert!((c.conformal - 2f64.sqrt()).abs() < 1e-15);

        let c = project_south(&[0.6, 0.0, -0.8]).unwrap();
        assert!((c.coord[0] - 0.75).abs() < 1e-15 && c.coord[1] == 0.0);
        assert!((c.conformal - 1.25).abs() < 1e-15);

        assert!(project_south(&[1.0, 0.0]).is_err());
        assert!(project_south(&[0.0, 1.0]).is_err());
    }

    #[test]
    fn chart_round_trip() {
        let g = SphereGrid::new(2, 12).unwrap();
        for x in &g.nodes {
            let c = project(x).unwrap();
            let back = lift(&c.coord, c.hemisphere);
            assert!(dist2(&back, x).sqrt() < 1e-13);
        }
    }

    #[test]
    fn pullback_examples() {
        assert_eq!(pullback_vector(&[0.0, 0.0], &[1.0, 0.0]), vec![1.0, 0.0, 0.0]);
        assert_eq!(pullback_vector(&[0.3, -2.0], &[0.0, 0.0]), vec![0.0, 0.0, 0.0]);
        let v = pullback_vector(&[1.0], &[1.0]);
        let expect = 1.0 / 2f64.sqrt() - 1.0 / 2f64.powf(1.5);
        assert!((v[0] - expect).abs() < 1e-15);
        assert!((v[1] - 1.0 / 2f64.powf(1.5)).abs() < 1e-15);
        assert!((v[0] - 0.353_553_390_593_273_8).abs() < 1e-15);
    }

    #[test]
    fn pullback_forms_agree_and_stay_tangent() {
        for r in [1e-3, 0.5, 3.0, 1e4, 1e7, 1e9, 1e12] {
            let x = [r * 0.6, -r * 0.8];
            let xi = [0.3 * r * r, 1.7];
            let v = pullback_vector(&x, &xi);
            let p = lift(&x, Hemisphere::South);
            let scale = norm(&v).max(1e-300);
            assert!(dot(&v, &p).abs() / scale < 1e-12, "r={r}");
        }
    }

    #[test]
    fn chart_measure_identity() {
        // bump concentrated at the south pole
        let bump = |x: &[f64]| {
            let d2 = x[0] * x[0] + x[1] * x[1] + (x[2] + 1.0).powi(2);
            (-20.0 * d2).exp()
        };
        let grid = SphereGrid::new(2, 128).unwrap();
        let on_sphere = grid.integrate_fn(bump);
        let (t, w) = gauss_legendre(128);
        let half = 3.0;
        let mut terms = Vec::new();
        for (ti, wi) in t.iter().zip(&w) {
            for (tj, wj) in t.iter().zip(&w) {
                let x = [half * ti, half * tj];
                let jac = (1.0 + x[0] * x[0] + x[1] * x[1]).powf(-1.5);
                terms.push(half * half * wi * wj * jac * bump(&lift(&x, Hemisphere::South)));
            }
        }
        let in_chart = crate::quadrature::pairwise_sum(&terms);
        assert!((on_sphere - in_chart).abs() < 1e-8, "{on_sphere} vs {in_chart}");
    }

    #[test]
    fn frames_are_orthonormal_and_tangent() {
        let g = SphereGrid::new(2, 16).unwrap();
        for x in g.nodes.iter().chain([vec![0.0, 0.0, -1.0], vec![0.0, 0.1f64.sin(), 0.1f64.cos()]].iter()) {
            let f = tangent_frame(x);
            assert_eq!(f.len(), 2);
            for (i, a) in f.iter().enumerate() {
                assert!(dot(a, x).abs() < 1e-14);
                for (j, b) in f.iter().enumerate() {
                    let e = if i == j { 1.0 } else { 0.0 };
                    assert!((dot(a, b) - e).abs() < 1e-14);
                }
            }
        }
    }
}
