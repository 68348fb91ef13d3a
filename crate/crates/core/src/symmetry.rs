//! Regular-simplex frames and the finite orthogonal groups permuting their vertices.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{ensure, Error, Result};
use crate::poly::HomoPoly;
use crate::sphere::{dot, SphereGrid};

/// n+2 unit vectors in R^{n+1} with pairwise inner product −1/(n+1).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimplexFrame {
    pub n: usize,
    pub vertices: Vec<Vec<f64>>,
}

impl SimplexFrame {
    /// Deterministic regular simplex: the triangle at 90°, 210°, 330° for n = 1, the
    /// tetrahedron (±1,±1,±1)/√3 with an even number of minus signs for n = 2, and a
    /// centred standard simplex in a Helmert basis otherwise.
    pub fn regular(n: usize) -> Result<Self> {
        ensure(n >= 1, || "simplex needs n >= 1".into())?;
        let vertices = match n {
            1 => [90.0f64, 210.0, 330.0]
                .iter()
                .map(|d| vec![d.to_radians().cos(), d.to_radians().sin()])
                .collect(),
            2 => {
                let c = 1.0 / 3f64.sqrt();
                vec![
                    vec![c, c, c],
                    vec![c, -c, -c],
                    vec![-c, c, -c],
                    vec![-c, -c, c],
                ]
            }
            _ => helmert_simplex(n),
        };
        Self::from_vertices(n, vertices)
    }

    /// Validate an arbitrary candidate frame.
    pub fn from_vertices(n: usize, vertices: Vec<Vec<f64>>) -> Result<Self> {
        ensure(vertices.len() == n + 2, || {
            format!("expected {} vertices, got {}", n + 2, vertices.len())
        })?;
        ensure(vertices.iter().all(|v| v.len() == n + 1), || {
            "vertex of wrong dimension".into()
        })?;
        let target = -1.0 / (n as f64 + 1.0);
        for (i, a) in vertices.iter().enumerate() {
            ensure((dot(a, a) - 1.0).abs() < 1e-12, || format!("vertex {i} is not unit"))?;
            for b in vertices.iter().skip(i + 1) {
                ensure((dot(a, b) - target).abs() < 1e-12, || {
                    format!("inner product {} differs from {target}", dot(a, b))
                })?;
            }
        }
        let frame = Self { n, vertices };
        ensure(frame.basis_matrix(n + 1).determinant().abs() > 1e-8, || {
            "degenerate frame".into()
        })?;
        Ok(frame)
    }

    /// The frame rotated by an orthogonal matrix (rows).
    pub fn rotated(&self, rotation: &[Vec<f64>]) -> Result<Self> {
        let vertices = self
            .vertices
            .iter()
            .map(|v| rotation.iter().map(|row| dot(row, v)).collect())
            .collect();
        Self::from_vertices(self.n, vertices)
    }

    /// Matrix whose columns are the vertices with the given index omitted.
    fn basis_matrix(&self, omit: usize) -> DMatrix<f64> {
        let dim = self.n + 1;
        let cols: Vec<&Vec<f64>> = self
            .vertices
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != omit)
            .map(|(_, v)| v)
            .collect();
        DMatrix::from_fn(dim, dim, |r, c| cols[c][r])
    }

    /// Maximum violation of Σ q_i = 0.
    pub fn centroid_error(&self) -> f64 {
        (0..=self.n)
            .map(|k| self.vertices.iter().map(|v| v[k]).sum::<f64>().abs())
            .fold(0.0, f64::max)
    }

    /// The (n+2)×(n+2) system with rows (q_{j1}², …, q_{j,n+1}², 1) whose kernel describes the
    /// diagonal quadratic forms taking equal values on all vertices.
    pub fn quadratic_system(&self) -> DMatrix<f64> {
        let m = self.n + 2;
        DMatrix::from_fn(m, m, |j, i| if i < self.n + 1 { self.vertices[j][i].powi(2) } else { 1.0 })
    }
}

fn helmert_simplex(n: usize) -> Vec<Vec<f64>> {
    // centred standard basis of R^{n+2} expressed in an orthonormal basis of Σx = 0
    let m = n + 2;
    let basis: Vec<Vec<f64>> = (1..m)
        .map(|k| {
            let kf = k as f64;
            let norm = (kf * (kf + 1.0)).sqrt();
            (0..m)
                .map(|i| match i.cmp(&k) {
                    std::cmp::Ordering::Less => 1.0 / norm,
                    std::cmp::Ordering::Equal => -kf / norm,
                    std::cmp::Ordering::Greater => 0.0,
                })
                .collect()
        })
        .collect();
    let scale = ((m as f64) / (m as f64 - 1.0)).sqrt();
    (0..m)
        .map(|j| basis.iter().map(|b| b[j] * scale).collect())
        .collect()
}

/// One orthogonal map of the vertex set: matrix · q_i = q_{permutation[i]}.
#[derive(Debug, Clone, Serialize)]
pub struct GroupElement {
    pub matrix: Vec<Vec<f64>>,
    pub permutation: Vec<usize>,
    pub determinant: f64,
}

impl GroupElement {
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.matrix.iter().map(|row| dot(row, x)).collect()
    }

    /// Apply the inverse (transpose) map.
    pub fn apply_inverse(&self, x: &[f64]) -> Vec<f64> {
        let dim = x.len();
        (0..dim)
            .map(|j| (0..dim).map(|i| self.matrix[i][j] * x[i]).sum())
            .collect()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SymmetryGroup {
    pub n: usize,
    pub special_only: bool,
    pub elements: Vec<GroupElement>,
}

impl SymmetryGroup {
    /// All orthogonal maps permuting the frame vertices; with `special_only` keep det = +1.
    pub fn build(frame: &SimplexFrame, special_only: bool) -> Result<Self> {
        let n = frame.n;
        let m = n + 2;
        let dim = n + 1;
        let base = frame.basis_matrix(m - 1);
        let inv = base
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Construction("frame basis is singular".into()))?;
        let mut elements = Vec::new();
        for perm in permutations(m) {
            let image = DMatrix::from_fn(dim, dim, |r, c| frame.vertices[perm[c]][r]);
            let mat = &image * &inv;
            let ortho = (&mat.transpose() * &mat - DMatrix::identity(dim, dim)).amax();
            if ortho > 1e-12 {
                return Err(Error::Construction(format!(
                    "permutation {perm:?} induces a non-orthogonal map (defect {ortho:e})"
                )));
            }
            // the omitted vertex must land on its image too
            let last: Vec<f64> = (0..dim)
                .map(|r| (0..dim).map(|c| mat[(r, c)] * frame.vertices[m - 1][c]).sum())
                .collect();
            let target = &frame.vertices[perm[m - 1]];
            let miss = last.iter().zip(target).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            if miss > 1e-12 {
                return Err(Error::Construction(format!("vertex map defect {miss:e}")));
            }
            let det = mat.determinant();
            if special_only && det < 0.0 {
                continue;
            }
            elements.push(GroupElement {
                matrix: (0..dim).map(|r| (0..dim).map(|c| mat[(r, c)]).collect()).collect(),
                permutation: perm,
                determinant: det.signum(),
            });
        }
        Ok(Self { n, special_only, elements })
    }

    /// The group containing only the identity.
    pub fn trivial(n: usize) -> Self {
        let dim = n + 1;
        let matrix = (0..dim)
            .map(|r| (0..dim).map(|c| if r == c { 1.0 } else { 0.0 }).collect())
            .collect();
        Self {
            n,
            special_only: true,
            elements: vec![GroupElement {
                matrix,
                permutation: (0..n + 2).collect(),
                determinant: 1.0,
            }],
        }
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    /// Largest distance from a product of two elements to the nearest element.
    pub fn closure_defect(&self) -> f64 {
        let dim = self.n + 1;
        let mut worst: f64 = 0.0;
        for a in &self.elements {
            for b in &self.elements {
                let prod: Vec<Vec<f64>> = (0..dim)
                    .map(|r| {
                        (0..dim)
                            .map(|c| (0..dim).map(|k| a.matrix[r][k] * b.matrix[k][c]).sum())
                            .collect()
                    })
                    .collect();
                let best = self
                    .elements
                    .iter()
                    .map(|e| {
                        e.matrix
                            .iter()
                            .flatten()
                            .zip(prod.iter().flatten())
                            .map(|(x, y)| (x - y).abs())
                            .fold(0.0, f64::max)
                    })
                    .fold(f64::INFINITY, f64::min);
                worst = worst.max(best);
            }
        }
        worst
    }

    /// Group average of a function evaluable anywhere on the sphere.
    pub fn symmetrize_at<F: Fn(&[f64]) -> f64>(&self, f: &F, x: &[f64]) -> f64 {
        let total: f64 = self.elements.iter().map(|g| f(&g.apply(x))).sum();
        total / self.order() as f64
    }

    /// Group average of nodal data; the grid must be closed under the group.
    pub fn symmetrize_nodal(&self, grid: &SphereGrid, values: &[f64]) -> Result<Vec<f64>> {
        let images = self.node_images(grid)?;
        Ok((0..grid.len())
            .map(|i| {
                let s: f64 = images.iter().map(|img| values[img[i]]).sum();
                s / self.order() as f64
            })
            .collect())
    }

    /// For every element, the node index that each node is mapped to.
    pub fn node_images(&self, grid: &SphereGrid) -> Result<Vec<Vec<usize>>> {
        self.elements
            .iter()
            .map(|g| {
                grid.nodes
                    .iter()
                    .enumerate()
                    .map(|(i, x)| grid.find_node(&g.apply(x), 1e-9).ok_or(Error::GridNotClosed(i)))
                    .collect()
            })
            .collect()
    }

    /// Group average of a polynomial: (1/|G|) Σ P∘φ.
    pub fn symmetrize_poly(&self, p: &HomoPoly<f64>) -> HomoPoly<f64> {
        let mut acc = HomoPoly::zero(p.vars(), p.degree());
        for g in &self.elements {
            acc = &acc + &p.compose_linear(&g.matrix);
        }
        let mut out = acc.scale(&(1.0 / self.order() as f64));
        out.prune(1e-15);
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("group serializes")
    }
}

/// All permutations of 0..m in lexicographic order (identity first).
pub fn permutations(m: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current: Vec<usize> = (0..m).collect();
    loop {
        out.push(current.clone());
        // next lexicographic permutation
        let Some(i) = (0..m.saturating_sub(1)).rev().find(|&i| current[i] < current[i + 1]) else {
            break;
        };
        let j = (i + 1..m).rev().find(|&j| current[j] > current[i]).expect("successor exists");
        current.swap(i, j);
        current[i + 1..].reverse();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn regular_frames_satisfy_invariants() {
        for n in 1..=4 {
            let f = SimplexFrame::regular(n).unwrap();
            assert!(f.centroid_error() < 1e-14, "n={n}");
            for (i, a) in f.vertices.iter().enumerate() {
                for b in f.vertices.iter().skip(i + 1) {
                    assert!((dot(a, b) + 1.0 / (n as f64 + 1.0)).abs() < 1e-14);
                }
            }
        }
        let f = SimplexFrame::regular(1).unwrap();
        assert!((dot(&f.vertices[0], &f.vertices[1]) + 0.5).abs() < 1e-15);
        assert!((f.vertices[0][1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn group_orders() {
        let expect = [(1, 6, 3), (2, 24, 12), (3, 120, 60)];
        for (n, full, special) in expect {
            let f = SimplexFrame::regular(n).unwrap();
            let g = SymmetryGroup::build(&f, false).unwrap();
            let s = SymmetryGroup::build(&f, true).unwrap();
            assert_eq!(g.order(), full);
            assert_eq!(s.order(), special);
            assert!(g.closure_defect() < 1e-12);
            assert!(s.closure_defect() < 1e-12);
        }
    }

    #[test]
    fn identity_permutation_is_identity_matrix() {
        let f = SimplexFrame::regular(2).unwrap();
        let g = SymmetryGroup::build(&f, true).unwrap();
        let id = &g.elements[0];
        assert_eq!(id.permutation, vec![0, 1, 2, 3]);
        for (r, row) in id.matrix.iter().enumerate() {
            for (c, v) in row.iter().enumerate() {
                assert!((v - if r == c { 1.0 } else { 0.0 }).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn elements_map_vertices_to_vertices() {
        let f = SimplexFrame::regular(2).unwrap();
        let g = SymmetryGroup::build(&f, false).unwrap();
        for e in &g.elements {
            for (i, q) in f.vertices.iter().enumerate() {
                let img = e.apply(q);
                let target = &f.vertices[e.permutation[i]];
                let d: f64 = img.iter().zip(target).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                assert!(d < 1e-12);
            }
        }
    }

    #[test]
    fn symmetrize_examples_on_circle() {
        let f = SimplexFrame::regular(1).unwrap();
        let c3 = SymmetryGroup::build(&f, true).unwrap();
        let grid = SphereGrid::new(1, 36).unwrap();
        let theta = |x: &[f64]| x[1].atan2(x[0]);
        let ones = vec![1.0; grid.len()];
        assert!(c3.symmetrize_nodal(&grid, &ones).unwrap().iter().all(|v| (v - 1.0).abs() < 1e-15));
        let cos1: Vec<f64> = grid.nodes.iter().map(|x| theta(x).cos()).collect();
        assert!(c3.symmetrize_nodal(&grid, &cos1).unwrap().iter().all(|v| v.abs() < 1e-13));
        let cos3: Vec<f64> = grid.nodes.iter().map(|x| (3.0 * theta(x)).cos()).collect();
        let s = c3.symmetrize_nodal(&grid, &cos3).unwrap();
        assert!(s.iter().zip(&cos3).all(|(a, b)| (a - b).abs() < 1e-13));
        // idempotent
        let again = c3.symmetrize_nodal(&grid, &s).unwrap();
        assert!(again.iter().zip(&s).all(|(a, b)| (a - b).abs() < 1e-13));
    }

    #[test]
    fn nodal_symmetrization_needs_closed_grid() {
        let f = SimplexFrame::regular(1).unwrap();
        let c3 = SymmetryGroup::build(&f, true).unwrap();
        let grid = SphereGrid::new(1, 16).unwrap();
        let v = vec![0.0; 16];
        assert!(matches!(c3.symmetrize_nodal(&grid, &v), Err(Error::GridNotClosed(_))));
    }

    #[test]
    fn projector_is_self_adjoint() {
        let f = SimplexFrame::regular(1).unwrap();
        let d3 = SymmetryGroup::build(&f, false).unwrap();
        let grid = SphereGrid::new(1, 48).unwrap();
        let a: Vec<f64> = grid.nodes.iter().map(|x| (x[0] * 2.0 + x[1]).exp()).collect();
        let b: Vec<f64> = grid.nodes.iter().map(|x| (x[1] - 0.3).powi(3)).collect();
        let pa = d3.symmetrize_nodal(&grid, &a).unwrap();
        let pb = d3.symmetrize_nodal(&grid, &b).unwrap();
        let lhs: Vec<f64> = pa.iter().zip(&b).map(|(x, y)| x * y).collect();
        let rhs: Vec<f64> = a.iter().zip(&pb).map(|(x, y)| x * y).collect();
        assert!((grid.integrate(&lhs) - grid.integrate(&rhs)).abs() < 1e-12);
        let _ = PI;
    }

    #[test]
    fn quadratic_system_kernel_contains_constant_form() {
        for n in 1..=3 {
            let f = SimplexFrame::regular(n).unwrap();
            let a = f.quadratic_system();
            let mut v = vec![1.0; n + 2];
            v[n + 1] = -1.0;
            let r = &a * nalgebra::DVector::from_vec(v);
            assert!(r.amax() < 1e-14);
        }
    }
}
