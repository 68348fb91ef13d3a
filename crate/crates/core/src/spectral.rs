//! Harmonic polynomials, their simplex-invariant subspaces and the symmetric Poincaré constant.

use nalgebra::{DMatrix, SymmetricEigen};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{ensure, Error, Result};
use crate::poly::{exponents, rational, Exponent, HomoPoly};
use crate::sphere::{dot, SphereGrid};
use crate::symmetry::{SimplexFrame, SymmetryGroup};

/// dim of degree-μ harmonics on R^{n+1}: C(μ+n, n) − C(μ+n−2, n).
pub fn harmonic_dimension(n: usize, mu: u32) -> usize {
    let mu = mu as usize;
    let hi = binomial(mu + n, n);
    let lo = if mu >= 2 { binomial(mu + n - 2, n) } else { 0 };
    hi - lo
}

fn binomial(a: usize, b: usize) -> usize {
    if b > a {
        return 0;
    }
    let b = b.min(a - b);
    (0..b).fold(1usize, |acc, i| acc * (a - i) / (i + 1))
}

/// Exponents of the free data: monomials whose last exponent is 0 or 1.
fn free_exponents(vars: usize, mu: u32) -> Vec<Exponent> {
    exponents(vars, mu)
        .into_iter()
        .filter(|e| e[vars - 1] <= 1)
        .collect()
}

/// Exact basis of degree-μ harmonic polynomials on R^{n+1}.
///
/// Each element is the unique harmonic polynomial whose free data (the part of
/// degree ≤ 1 in the last variable) is a single monomial. Writing
/// P = Σ_k y_{n+1}^k Q_k with Q_k free of y_{n+1}, harmonicity is the recurrence
/// Q_{k+2} = −Δ Q_k / ((k+1)(k+2)).
pub fn harmonic_basis(n: usize, mu: u32) -> Vec<HomoPoly<BigRational>> {
    let vars = n + 1;
    free_exponents(vars, mu)
        .into_iter()
        .map(|e| harmonic_extension(vars, mu, e))
        .collect()
}

fn harmonic_extension(vars: usize, mu: u32, seed: Exponent) -> HomoPoly<BigRational> {
    let start = seed[vars - 1];
    let mut q = seed.clone();
    q[vars - 1] = 0;
    let mut current = HomoPoly::monomial(q, BigRational::one());
    let mut out = HomoPoly::monomial(seed, BigRational::one());
    let mut k = start;
    while current.degree() >= 2 {
        let lap = current.laplacian();
        if lap.is_zero() {
            break;
        }
        let factor = rational(-1, i64::from((k + 1) * (k + 2)));
        current = lap.scale(&factor);
        k += 2;
        let mut e = vec![0u32; vars];
        e[vars - 1] = k;
        out = &out + &(&current * &HomoPoly::monomial(e, BigRational::one()));
    }
    debug_assert_eq!(out.degree(), mu);
    out
}

/// Coordinates of a harmonic polynomial in `harmonic_basis`: its free-monomial coefficients.
pub fn harmonic_coordinates(p: &HomoPoly<BigRational>) -> Vec<BigRational> {
    free_exponents(p.vars(), p.degree())
        .iter()
        .map(|e| p.coefficient(e))
        .collect()
}

/// L²(S^n)-orthonormal harmonics of degree μ.
///
/// n = 1 uses Re/Im (x+iy)^μ, n = 2 uses real solid harmonics; other dimensions
/// orthonormalize `harmonic_basis`.
pub fn orthonormal_harmonics(n: usize, mu: u32) -> Vec<HomoPoly<f64>> {
    let raw: Vec<HomoPoly<f64>> = match n {
        1 => circular_harmonics(mu),
        2 => solid_harmonics(mu),
        _ => {
            let polys: Vec<HomoPoly<f64>> = harmonic_basis(n, mu).iter().map(|p| p.to_f64()).collect();
            return gram_schmidt(polys);
        }
    };
    raw.into_iter()
        .map(|p| {
            let norm = p.sphere_inner(&p).sqrt();
            p.scale(&(1.0 / norm))
        })
        .collect()
}

/// Real and imaginary parts of (x + iy)^m as polynomials in `vars` variables.
fn complex_power(vars: usize, m: u32) -> (HomoPoly<f64>, HomoPoly<f64>) {
    let mut re = HomoPoly::zero(vars, m);
    let mut im = HomoPoly::zero(vars, m);
    for j in 0..=m {
        let c = binomial(m as usize, j as usize) as f64;
        let mut e = vec![0u32; vars];
        e[0] = m - j;
        e[1] = j;
        let sign = if (j / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if j % 2 == 0 {
            re.add_term(e, sign * c);
        } else {
            im.add_term(e, sign * c);
        }
    }
    (re, im)
}

fn circular_harmonics(mu: u32) -> Vec<HomoPoly<f64>> {
    if mu == 0 {
        return vec![HomoPoly::constant(2, 1.0)];
    }
    let (re, im) = complex_power(2, mu);
    vec![re, im]
}

/// Unnormalized real solid harmonics Π_l^m(z, r²)·{Re, Im}(x+iy)^m, m = 0..=l.
fn solid_harmonics(l: u32) -> Vec<HomoPoly<f64>> {
    let mut r2 = HomoPoly::zero(3, 2);
    for i in 0..3 {
        let mut e = vec![0u32; 3];
        e[i] = 2;
        r2.add_term(e, 1.0);
    }
    let mut out = Vec::with_capacity(2 * l as usize + 1);
    for m in 0..=l {
        let mut pi = HomoPoly::zero(3, l - m);
        let mut r2k = HomoPoly::constant(3, 1.0);
        for k in 0..=((l - m) / 2) {
            let (lu, ku, mu) = (l as usize, k as usize, m as usize);
            let coef = if k % 2 == 0 { 1.0 } else { -1.0 }
                * binomial(lu, ku) as f64
                * binomial(2 * lu - 2 * ku, lu) as f64
                * falling(lu - 2 * ku, mu)
                / 2f64.powi(l as i32);
            let zpow = HomoPoly::monomial(vec![0, 0, l - 2 * k - m], coef);
            pi = &pi + &(&r2k * &zpow);
            r2k = &r2k * &r2;
        }
        let (re, im) = complex_power(3, m);
        out.push(&pi * &re);
        if m > 0 {
            out.push(&pi * &im);
        }
    }
    out
}

/// a!/(a−b)!
fn falling(a: usize, b: usize) -> f64 {
    (0..b).map(|i| (a - i) as f64).product()
}

fn gram_schmidt(polys: Vec<HomoPoly<f64>>) -> Vec<HomoPoly<f64>> {
    let mut out: Vec<HomoPoly<f64>> = Vec::with_capacity(polys.len());
    for mut p in polys {
        for _ in 0..2 {
            for q in &out {
                let c = p.sphere_inner(q);
                p = &p + &q.scale(&(-c));
            }
        }
        let norm = p.sphere_inner(&p).sqrt();
        out.push(p.scale(&(1.0 / norm)));
    }
    out
}

/// Tangential gradient of P at a unit vector: ∇P − (X·∇P)X.
pub fn sphere_gradient(p: &HomoPoly<f64>, x: &[f64]) -> Vec<f64> {
    let (_, grad, _) = p.eval_derivatives(x);
    let radial = dot(&grad, x);
    grad.iter().zip(x).map(|(g, xi)| g - radial * xi).collect()
}

/// Quadrature Rayleigh quotient ∫|∇P|² / ∫P² on the grid.
pub fn rayleigh_quotient(p: &HomoPoly<f64>, grid: &SphereGrid) -> f64 {
    let num = grid.integrate_fn(|x| {
        let g = sphere_gradient(p, x);
        dot(&g, &g)
    });
    let den = grid.integrate_fn(|x| p.eval(x).powi(2));
    num / den
}

/// Harmonics of one degree that are fixed by a symmetry group.
#[derive(Debug, Clone, Serialize)]
pub struct InvariantSubspace {
    pub degree: u32,
    pub dimension: usize,
    /// true when the rank was decided in rational arithmetic
    pub exact: bool,
    #[serde(skip)]
    pub basis: Vec<HomoPoly<f64>>,
}

/// The group-invariant part of the degree-μ harmonics, with an L²-orthonormal basis.
pub fn invariant_subspace(n: usize, mu: u32, group: &SymmetryGroup) -> Result<InvariantSubspace> {
    ensure(group.n == n, || format!("group acts on S^{}, not S^{n}", group.n))?;
    let basis = orthonormal_harmonics(n, mu);
    let d = basis.len();
    let mut proj = DMatrix::<f64>::zeros(d, d);
    for g in &group.elements {
        let moved: Vec<HomoPoly<f64>> = basis.iter().map(|b| b.compose_linear(&g.matrix)).collect();
        for i in 0..d {
            for j in 0..d {
                proj[(i, j)] += moved[i].sphere_inner(&basis[j]);
            }
        }
    }
    proj /= group.order() as f64;
    let sym = (&proj + proj.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    // the representation matrices are orthogonal, so their largest singular value is 1
    let threshold = 1e-9;
    let mut invariant = Vec::new();
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda > threshold {
            let v = eig.eigenvectors.column(k);
            let mut p = HomoPoly::zero(n + 1, mu);
            for (i, b) in basis.iter().enumerate() {
                p = &p + &b.scale(&v[i]);
            }
            p.prune(1e-15);
            invariant.push(p);
        }
    }
    let float_rank = invariant.len();
    let exact = match exact_invariant_rank(n, mu, group) {
        Some(rank) => {
            if rank != float_rank {
                return Err(Error::Construction(format!(
                    "exact invariant rank {rank} disagrees with floating rank {float_rank} at degree {mu}"
                )));
            }
            true
        }
        None => false,
    };
    Ok(InvariantSubspace { degree: mu, dimension: float_rank, exact, basis: invariant })
}

/// Dimension of the invariant degree-μ harmonics.
pub fn invariant_dimension(n: usize, mu: u32, group: &SymmetryGroup) -> Result<usize> {
    Ok(invariant_subspace(n, mu, group)?.dimension)
}

/// Rank of the averaging projector in rational arithmetic, when every group matrix has
/// rational entries with small denominators.
fn exact_invariant_rank(n: usize, mu: u32, group: &SymmetryGroup) -> Option<usize> {
    let mats: Vec<Vec<Vec<BigRational>>> = group
        .elements
        .iter()
        .map(|g| {
            g.matrix
                .iter()
                .map(|row| row.iter().map(|&v| small_rational(v)).collect::<Option<Vec<_>>>())
                .collect::<Option<Vec<_>>>()
        })
        .collect::<Option<Vec<_>>>()?;
    let basis = harmonic_basis(n, mu);
    let rows: Vec<Vec<BigRational>> = basis
        .iter()
        .map(|b| {
            let mut acc = HomoPoly::zero(n + 1, mu);
            for m in &mats {
                acc = &acc + &b.compose_linear(m);
            }
            harmonic_coordinates(&acc)
        })
        .collect();
    Some(rational_rank(rows))
}

fn small_rational(v: f64) -> Option<BigRational> {
    (1..=12i64).find_map(|den| {
        let num = (v * den as f64).round();
        ((v - num / den as f64).abs() < 1e-14).then(|| rational(num as i64, den))
    })
}

/// Rank by fraction-exact Gaussian elimination.
pub fn rational_rank(mut rows: Vec<Vec<BigRational>>) -> usize {
    let cols = rows.first().map_or(0, Vec::len);
    let mut rank = 0;
    for c in 0..cols {
        let Some(pivot) = (rank..rows.len()).find(|&r| !rows[r][c].is_zero()) else {
            continue;
        };
        rows.swap(rank, pivot);
        let lead = rows[rank][c].clone();
        for r in 0..rows.len() {
            if r != rank && !rows[r][c].is_zero() {
                let factor = &rows[r][c] / &lead;
                for k in c..cols {
                    let delta = &factor * &rows[rank][k];
                    rows[r][k] -= delta;
                }
            }
        }
        rank += 1;
    }
    rank
}

/// Result of the symmetric Poincaré constant search.
#[derive(Debug, Clone, Serialize)]
pub struct PoincareConstant {
    pub n: usize,
    pub mu1: u32,
    pub lambda1: f64,
    /// (μ, invariant dimension) for μ = 1..=μ₁
    pub dims_by_degree: Vec<(u32, usize)>,
    pub exact: bool,
}

/// λ₁ = μ₁(n+μ₁−1) for the smallest μ₁ ≥ 1 carrying an invariant harmonic.
pub fn lambda1(n: usize, group: &SymmetryGroup, mu_max: u32) -> Result<PoincareConstant> {
    ensure(mu_max >= 1, || "mu_max must be positive".into())?;
    let mut dims = Vec::new();
    let mut exact = true;
    for mu in 1..=mu_max {
        let sub = invariant_subspace(n, mu, group)?;
        dims.push((mu, sub.dimension));
        exact &= sub.exact;
        if sub.dimension > 0 {
            for b in &sub.basis {
                let mean = b.sphere_integral();
                if mean.abs() > 1e-12 {
                    return Err(Error::Construction(format!("invariant harmonic has mean {mean:e}")));
                }
            }
            let lambda = f64::from(mu) * (n as f64 + f64::from(mu) - 1.0);
            return Ok(PoincareConstant { n, mu1: mu, lambda1: lambda, dims_by_degree: dims, exact });
        }
    }
    Err(Error::NoInvariantSubspace(mu_max as usize))
}

/// Σ over ordered distinct triples of l_i l_j l_k with l_i(y) = ⟨q_i, y⟩.
pub fn build_h_simplex(frame: &SimplexFrame) -> HomoPoly<f64> {
    let forms: Vec<HomoPoly<f64>> = frame.vertices.iter().map(|q| HomoPoly::linear(q)).collect();
    let m = forms.len();
    let mut h = HomoPoly::zero(frame.n + 1, 3);
    for i in 0..m {
        for j in (i + 1)..m {
            let lij = &forms[i] * &forms[j];
            for k in (j + 1)..m {
                h = &h + &(&lij * &forms[k]);
            }
        }
    }
    // each unordered triple appears 3! times in the ordered sum
    let mut h = h.scale(&6.0);
    h.prune(1e-15);
    h
}

/// Exact harmonicity of the simplex cubic from the Gram matrix of the vertices.
///
/// Δ(l_i l_j l_k) = 2(G_ij l_k + G_ik l_j + G_jk l_i), and Σ l_i = 0, so ΔP = 0 iff the
/// collected coefficient vector of the l_m is constant. The Gram entries are recognized
/// as rationals; an irrational Gram matrix returns `None`.
pub fn h_simplex_exactly_harmonic(frame: &SimplexFrame) -> Option<bool> {
    let m = frame.vertices.len();
    let mut gram = vec![vec![BigRational::zero(); m]; m];
    for i in 0..m {
        for j in 0..m {
            gram[i][j] = small_rational(dot(&frame.vertices[i], &frame.vertices[j]))?;
        }
    }
    let mut coeff = vec![BigRational::zero(); m];
    let two = rational(2, 1);
    for i in 0..m {
        for j in 0..m {
            for k in 0..m {
                if i == j || j == k || i == k {
                    continue;
                }
                coeff[k] += &two * &gram[i][j];
                coeff[j] += &two * &gram[i][k];
                coeff[i] += &two * &gram[j][k];
            }
        }
    }
    Some(coeff.iter().all(|c| *c == coeff[0]))
}

/// Monomial-level exact check for frames that are rational up to a common scale
/// (the default tetrahedron is (±1,±1,±1)/√3).
pub fn h_simplex_rational(frame: &SimplexFrame) -> Option<HomoPoly<BigRational>> {
    let scale = frame.vertices[0].iter().map(|v| v.abs()).fold(0.0, f64::max);
    let forms: Vec<HomoPoly<BigRational>> = frame
        .vertices
        .iter()
        .map(|q| {
            q.iter()
                .map(|&v| small_rational(v / scale))
                .collect::<Option<Vec<_>>>()
                .map(|c| HomoPoly::linear(&c))
        })
        .collect::<Option<Vec<_>>>()?;
    let m = forms.len();
    let mut h = HomoPoly::zero(frame.n + 1, 3);
    for i in 0..m {
        for j in (i + 1)..m {
            for k in (j + 1)..m {
                h = &h + &(&(&forms[i] * &forms[j]) * &forms[k]);
            }
        }
    }
    Some(h.scale(&rational(6, 1)))
}

/// −Δ_{S^n} of a homogeneous polynomial restricted to the sphere, as the nodal value
/// μ(μ+n−1)P − ΔP at a unit vector.
pub fn minus_sphere_laplacian(p: &HomoPoly<f64>, x: &[f64]) -> f64 {
    let n = (p.vars() - 1) as f64;
    let mu = f64::from(p.degree());
    mu * (mu + n - 1.0) * p.eval(x) - p.laplacian().eval(x)
}

/// Rank and null space of the diagonal quadratic-form system of the simplex.
#[derive(Debug, Clone, Serialize)]
pub struct QuadraticSystem {
    pub rank: usize,
    pub kernel: Vec<Vec<f64>>,
}

pub fn quadratic_system_kernel(frame: &SimplexFrame) -> QuadraticSystem {
    let a = frame.quadratic_system();
    let m = a.ncols();
    let svd = a.clone().svd(true, true);
    let largest = svd.singular_values.max();
    let rank = svd.singular_values.iter().filter(|&&s| s > 1e-9 * largest).count();
    // kernel from the eigenvectors of AᵀA with vanishing eigenvalue
    let ata = a.transpose() * &a;
    let eig = SymmetricEigen::new(ata);
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let kernel = order
        .into_iter()
        .take(m - rank)
        .map(|k| eig.eigenvectors.column(k).iter().copied().collect())
        .collect();
    QuadraticSystem { rank, kernel }
}

/// Float of a rational, for reporting.
pub fn rational_value(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basis_dimensions() {
        for n in 1..=3 {
            for mu in 0..=6 {
                let b = harmonic_basis(n, mu);
                assert_eq!(b.len(), harmonic_dimension(n, mu), "n={n} mu={mu}");
                assert!(b.iter().all(HomoPoly::is_harmonic));
                let rows: Vec<Vec<BigRational>> = b.iter().map(harmonic_coordinates).collect();
                assert_eq!(rational_rank(rows), b.len());
            }
        }
        assert_eq!(harmonic_dimension(2, 1), 3);
        assert_eq!(harmonic_dimension(2, 3), 7);
        assert_eq!(harmonic_dimension(1, 3), 2);
    }

    #[test]
    fn circle_cubics() {
        let b = harmonic_basis(1, 3);
        // span{x³ − 3xy², 3x²y − y³}
        let p = &b[0];
        let q = &b[1];
        assert_eq!(p.coefficient(&[3, 0]), rational(1, 1));
        assert_eq!(p.coefficient(&[1, 2]), rational(-3, 1));
        assert_eq!(q.coefficient(&[2, 1]), rational(1, 1));
        assert_eq!(q.coefficient(&[0, 3]), rational(-1, 3));
    }

    #[test]
    fn orthonormal_harmonics_are_orthonormal() {
        for n in 1..=3 {
            for mu in 0..=5 {
                let b = orthonormal_harmonics(n, mu);
                assert_eq!(b.len(), harmonic_dimension(n, mu));
                for (i, p) in b.iter().enumerate() {
                    assert!(p.laplacian().max_abs_coefficient() < 1e-10);
                    for (j, q) in b.iter().enumerate() {
                        let want = if i == j { 1.0 } else { 0.0 };
                        assert!((p.sphere_inner(q) - want).abs() < 1e-11, "n={n} mu={mu} {i} {j}");
                    }
                }
            }
        }
    }

    #[test]
    fn exact_and_float_means_agree() {
        let p = harmonic_basis(2, 4);
        let q = &p[1] * &p[3];
        let exact = rational_value(&q.sphere_mean_inner(&HomoPoly::constant(3, BigRational::one())));
        let float = q.to_f64().sphere_integral() / (4.0 * std::f64::consts::PI);
        assert!((exact - float).abs() < 1e-14);
    }

    #[test]
    fn invariant_dimensions_on_circle() {
        let f = SimplexFrame::regular(1).unwrap();
        let c3 = SymmetryGroup::build(&f, true).unwrap();
        let d3 = SymmetryGroup::build(&f, false).unwrap();
        assert_eq!(invariant_dimension(1, 3, &c3).unwrap(), 2);
        assert_eq!(invariant_dimension(1, 3, &d3).unwrap(), 1);
        assert_eq!(invariant_dimension(1, 1, &c3).unwrap(), 0);
        assert_eq!(invariant_dimension(1, 2, &d3).unwrap(), 0);
    }

    #[test]
    fn tetrahedral_rank_is_exact() {
        let f = SimplexFrame::regular(2).unwrap();
        let t = SymmetryGroup::build(&f, true).unwrap();
        let sub = invariant_subspace(2, 3, &t).unwrap();
        assert!(sub.exact);
        assert_eq!(sub.dimension, 1);
        assert_eq!(invariant_dimension(2, 1, &t).unwrap(), 0);
        assert_eq!(invariant_dimension(2, 2, &t).unwrap(), 0);
    }

    #[test]
    fn lambda1_values() {
        for (n, want) in [(1, 9.0), (2, 12.0)] {
            let f = SimplexFrame::regular(n).unwrap();
            for special in [true, false] {
                let g = SymmetryGroup::build(&f, special).unwrap();
                let l = lambda1(n, &g, 6).unwrap();
                assert_eq!(l.lambda1, want);
                assert_eq!(l.mu1, 3);
            }
        }
        let trivial = SymmetryGroup::trivial(1);
        assert_eq!(lambda1(1, &trivial, 6).unwrap().lambda1, 1.0);
    }

    #[test]
    fn lambda1_without_subspace_errors() {
        let f = SimplexFrame::regular(2).unwrap();
        let g = SymmetryGroup::build(&f, true).unwrap();
        assert!(matches!(lambda1(2, &g, 2), Err(Error::NoInvariantSubspace(2))));
    }

    #[test]
    fn h_simplex_on_aligned_triangle() {
        let v: Vec<Vec<f64>> = [0.0f64, 120.0, 240.0]
            .iter()
            .map(|d| vec![d.to_radians().cos(), d.to_radians().sin()])
            .collect();
        let f = SimplexFrame::from_vertices(1, v).unwrap();
        let h = build_h_simplex(&f);
        let mut want = HomoPoly::zero(2, 3);
        want.add_term(vec![3, 0], 1.5);
        want.add_term(vec![1, 2], -4.5);
        assert!(h.max_coefficient_distance(&want) < 1e-14);
    }

    #[test]
    fn h_simplex_certificates() {
        for n in 1..=3 {
            let f = SimplexFrame::regular(n).unwrap();
            assert_eq!(h_simplex_exactly_harmonic(&f), Some(true));
            let h = build_h_simplex(&f);
            assert!(h.sphere_integral().abs() < 1e-12);
            assert!(h.ball_integral().abs() < 1e-12);
            let g = SymmetryGroup::build(&f, false).unwrap();
            assert!(g.symmetrize_poly(&h).max_coefficient_distance(&h) < 1e-12);
        }
        let tet = SimplexFrame::regular(2).unwrap();
        let exact = h_simplex_rational(&tet).unwrap();
        assert!(exact.is_harmonic());
        assert!(!exact.is_zero());
    }

    #[test]
    fn quadratic_system_rank_depends_on_orientation() {
        let tet = SimplexFrame::regular(2).unwrap();
        assert_eq!(quadratic_system_kernel(&tet).rank, 1);
        let tri = SimplexFrame::regular(1).unwrap();
        let sys = quadratic_system_kernel(&tri);
        assert_eq!(sys.rank, 2);
        let k = &sys.kernel[0];
        let ratio = k[0] / k[2];
        assert!((ratio + 1.0).abs() < 1e-12 && (k[0] - k[1]).abs() < 1e-12);
    }
}
