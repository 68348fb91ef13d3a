//! The constrained variational scheme: I(u) = −(n+1)V(Ω_u) over symmetric support
//! functions normalized by ∫u^p = |S^n|, its second variation at the constant, and a
//! descent method producing non-constant critical points.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{ensure, Error, Result};
use crate::spectral::lambda1;
use crate::sphere::{dot, sphere_area, SphereGrid};
use crate::support::{
    lp_integral, volume, Basis, BasisFunction, BasisTable, NodalData, SphereFunction, SupportFunction,
};
use crate::symmetry::{SimplexFrame, SymmetryGroup};

/// Rescale u so that ∫u^p = |S^n|.
pub fn normalize(u: &SupportFunction, p: f64, grid: &SphereGrid) -> Result<SupportFunction> {
    let lp = lp_integral(u, p, grid)?;
    Ok(u.scaled(normalization_factor(lp, p, grid.n)?))
}

fn normalization_factor(lp: f64, p: f64, n: usize) -> Result<f64> {
    let c = (sphere_area(n) / lp).powf(1.0 / p);
    if !c.is_finite() || c <= 0.0 {
        return Err(Error::NonFinite(format!("normalization factor from ∫u^p = {lp}")));
    }
    Ok(c)
}

/// I(u) = −∫u det W(u) dσ.
pub fn objective(u: &SupportFunction, grid: &SphereGrid) -> Result<f64> {
    Ok(-(grid.n as f64 + 1.0) * volume(u, grid)?)
}

/// I(normalize(u)), using the homogeneity I(cu) = c^{n+1} I(u).
pub fn normalized_objective(u: &SupportFunction, p: f64, grid: &SphereGrid) -> Result<f64> {
    let c = normalization_factor(lp_integral(u, p, grid)?, p, grid.n)?;
    Ok(c.powi(grid.n as i32 + 1) * objective(u, grid)?)
}

/// (∫|∇ξ|², ∫(ξ − ξ̄)²) with ξ̄ the sphere mean.
fn quadratic_parts<F: SphereFunction + ?Sized>(xi: &F, grid: &SphereGrid) -> (f64, f64) {
    let values: Vec<f64> = grid.nodes.par_iter().map(|x| xi.value(x)).collect();
    let grads: Vec<f64> = grid
        .nodes
        .par_iter()
        .map(|x| {
            let g = xi.gradient(x);
            dot(&g, &g)
        })
        .collect();
    let mean = grid.integrate(&values) / sphere_area(grid.n);
    let centered: Vec<f64> = values.iter().map(|v| (v - mean).powi(2)).collect();
    (grid.integrate(&grads), grid.integrate(&centered))
}

/// The quadratic form with prefactor n+2: (n+2)∫|∇ξ|² − (n+2)(n+1−p)∫|ξ − ξ̄|².
pub fn second_variation_formula<F: SphereFunction + ?Sized>(xi: &F, p: f64, grid: &SphereGrid) -> f64 {
    let n = grid.n as f64;
    let (dirichlet, l2) = quadratic_parts(xi, grid);
    (n + 2.0) * dirichlet - (n + 2.0) * (n + 1.0 - p) * l2
}

/// The same form with the prefactor n+1 that a direct expansion of I(normalize(1+εξ)) gives.
pub fn second_variation_expanded<F: SphereFunction + ?Sized>(xi: &F, p: f64, grid: &SphereGrid) -> f64 {
    let n = grid.n as f64;
    let (dirichlet, l2) = quadratic_parts(xi, grid);
    (n + 1.0) * (dirichlet - (n + 1.0 - p) * l2)
}

/// 1 + εξ for spectral ξ.
pub fn one_plus(xi: &SupportFunction, eps: f64) -> Result<SupportFunction> {
    let (basis, coeffs) = xi
        .spectral_parts()
        .ok_or_else(|| Error::Validation("perturbation must be spectral".into()))?;
    let mut functions = Basis::constant(xi.n()).functions;
    functions.extend(basis.functions.iter().cloned());
    let mut c = vec![1.0];
    c.extend(coeffs.iter().map(|v| eps * v));
    SupportFunction::spectral(Arc::new(Basis { n: xi.n(), functions }), c)
}

/// Central second difference of ε ↦ I(normalize(1+εξ)) at 0, Richardson-extrapolated
/// over the step list (Neville tableau in ε²).
pub fn second_variation_fd(xi: &SupportFunction, p: f64, grid: &SphereGrid, eps_list: &[f64]) -> Result<f64> {
    ensure(!eps_list.is_empty(), || "need at least one step".into())?;
    ensure(eps_list.iter().all(|e| *e > 0.0 && e.is_finite()), || "steps must be positive".into())?;
    let f0 = normalized_objective(&one_plus(xi, 0.0)?, p, grid)?;
    let mut table = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let plus = normalized_objective(&one_plus(xi, eps)?, p, grid)?;
        let minus = normalized_objective(&one_plus(xi, -eps)?, p, grid)?;
        table.push((plus - 2.0 * f0 + minus) / (eps * eps));
    }
    // error expansion in ε², so extrapolate in x = ε²
    let xs: Vec<f64> = eps_list.iter().map(|e| e * e).collect();
    let m = table.len();
    for level in 1..m {
        for i in (level..m).rev() {
            let (xa, xb) = (xs[i - level], xs[i]);
            table[i] = (xa * table[i] - xb * table[i - 1]) / (xa - xb);
        }
    }
    Ok(table[m - 1])
}

/// P_n = n+1−λ₁(n), checked against −2n−5.
pub fn instability_threshold(n: usize) -> Result<f64> {
    let frame = SimplexFrame::regular(n)?;
    let group = SymmetryGroup::build(&frame, true)?;
    let lambda = lambda1(n, &group, 8)?.lambda1;
    let threshold = n as f64 + 1.0 - lambda;
    let expected = -2.0 * n as f64 - 5.0;
    if threshold != expected {
        return Err(Error::Construction(format!("threshold {threshold} differs from {expected}")));
    }
    Ok(threshold)
}

#[derive(Debug, Clone, Serialize)]
pub struct OptimizerSettings {
    /// Initial step length in the H¹-preconditioned metric.
    pub step: f64,
    pub max_iter: usize,
    /// Stop when the dual H¹ norm of the gradient falls below this.
    pub tol: f64,
    /// Heavy-ball coefficient; 0 gives plain descent.
    pub momentum: f64,
    pub barrier_weight: f64,
    pub barrier_decay: f64,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        Self { step: 0.5, max_iter: 20_000, tol: 1e-12, momentum: 0.5, barrier_weight: 1e-6, barrier_decay: 0.1 }
    }
}

pub const DEFAULT_MARGIN: f64 = 1e-3;
/// EL residual below which the barrier starts to decay.
const BARRIER_RELEASE: f64 = 1e-3;
const GRADIENT_CHECK_TOL: f64 = 1e-6;

/// Default quadrature resolution for a basis of degree L.
pub fn default_resolution(n: usize, l: u32) -> usize {
    match n {
        1 => 512.max(16 * l as usize),
        _ => 2 * (l as usize + 10),
    }
}

#[derive(Debug, Clone)]
pub struct VariationalProblem {
    pub n: usize,
    pub p: f64,
    pub degree: u32,
    pub grid: SphereGrid,
    pub group: SymmetryGroup,
    pub basis: Arc<Basis>,
    pub margin: f64,
    pub settings: OptimizerSettings,
    table: BasisTable,
    degrees: Vec<u32>,
    /// H¹ Gram matrix of the basis (Sobolev preconditioner), kept as a Cholesky factor.
    metric: nalgebra::Cholesky<f64, nalgebra::Dyn>,
}

/// Everything known at one iterate.
#[derive(Debug, Clone)]
struct Evaluation {
    data: NodalData,
    objective: f64,
    barrier: f64,
    /// gradient of objective + barrier along normalized variations
    gradient: Vec<f64>,
    lambda: f64,
    el_residual: f64,
}

impl VariationalProblem {
    pub fn new(
        n: usize,
        p: f64,
        degree: u32,
        resolution: usize,
        special_only: bool,
        margin: f64,
        settings: OptimizerSettings,
    ) -> Result<Self> {
        ensure(p <= -(n as f64), || format!("p = {p} must satisfy p ≤ −n"))?;
        ensure(margin > 0.0 && margin <= 0.5, || format!("margin {margin} outside (0, 0.5]"))?;
        ensure(degree >= 3, || "the basis must reach degree 3".into())?;
        ensure(settings.max_iter > 0 && settings.tol > 0.0 && settings.step > 0.0, || {
            "optimizer settings must be positive".into()
        })?;
        ensure((0.0..1.0).contains(&settings.momentum), || "momentum must lie in [0, 1)".into())?;
        let frame = SimplexFrame::regular(n)?;
        let group = SymmetryGroup::build(&frame, special_only)?;
        let grid = SphereGrid::new(n, resolution)?;
        let basis = Basis::invariant(n, degree, &group)?;
        ensure(basis.len() > 1, || "no invariant harmonics in the basis".into())?;
        let table = BasisTable::new(&basis, &grid)?;
        let degrees: Vec<u32> = basis.functions.iter().map(BasisFunction::degree).collect();
        let k = basis.len();
        let gram = DMatrix::from_fn(k, k, |a, b| {
            if degrees[a] != degrees[b] {
                return 0.0;
            }
            let mu = f64::from(degrees[a]);
            let prod: Vec<f64> = table.values(a).iter().zip(table.values(b)).map(|(x, y)| x * y).collect();
            (1.0 + mu * (mu + n as f64 - 1.0)) * grid.integrate(&prod)
        });
        let metric = gram
            .cholesky()
            .ok_or_else(|| Error::Construction("basis Gram matrix is singular".into()))?;
        Ok(Self {
            n,
            p,
            degree,
            grid,
            group,
            basis: Arc::new(basis),
            margin,
            settings,
            table,
            degrees,
            metric,
        })
    }

    /// Defaults: full group, default resolution and margin.
    pub fn with_defaults(n: usize, p: f64, degree: u32) -> Result<Self> {
        Self::new(n, p, degree, default_resolution(n, degree), false, DEFAULT_MARGIN, OptimizerSettings::default())
    }

    pub fn alpha(&self) -> f64 {
        sphere_area(self.n)
    }

    pub fn degrees(&self) -> &[u32] {
        &self.degrees
    }

    pub fn support(&self, coeffs: &[f64]) -> Result<SupportFunction> {
        SupportFunction::spectral(self.basis.clone(), coeffs.to_vec())
    }

    fn lp(&self, values: &[f64]) -> Result<f64> {
        crate::support::lp_from_values(values, self.p, &self.grid)
    }

    /// Coefficients rescaled so that ∫u^p = |S^n|.
    pub fn normalize_coeffs(&self, coeffs: &[f64]) -> Result<Vec<f64>> {
        let data = self.table.evaluate(coeffs);
        let c = normalization_factor(self.lp(&data.values)?, self.p, self.n)?;
        Ok(coeffs.iter().map(|v| v * c).collect())
    }

    /// Index of the first basis function of the lowest non-constant degree.
    pub fn lowest_mode(&self) -> usize {
        (0..self.degrees.len()).filter(|&k| self.degrees[k] > 0).min_by_key(|&k| self.degrees[k]).unwrap_or(0)
    }

    /// normalize(1 + a ξ) with ξ the lowest invariant mode scaled to unit RMS.
    pub fn seed(&self, amplitude: f64) -> Result<Vec<f64>> {
        ensure(amplitude.is_finite(), || "seed amplitude must be finite".into())?;
        let k = self.lowest_mode();
        let sq: Vec<f64> = self.table.values(k).iter().map(|v| v * v).collect();
        let rms = (self.grid.integrate(&sq) / self.alpha()).sqrt();
        let mut c = vec![0.0; self.basis.len()];
        c[0] = 1.0 / self.table.values(0)[0];
        c[k] = amplitude / rms;
        self.normalize_coeffs(&c)
    }

    /// I(normalize(u)) at arbitrary (unnormalized) coefficients.
    pub fn value(&self, coeffs: &[f64]) -> Result<f64> {
        let data = self.table.evaluate(coeffs);
        let lp = self.lp(&data.values)?;
        let s = normalization_factor(lp, self.p, self.n)?;
        let raw = -self.grid.integrate(&product(&data.values, &data.dets));
        Ok(s.powi(self.n as i32 + 1) * raw)
    }

    /// Analytic gradient of c ↦ I(normalize(u_c)) from δ∫u det W(u) = (n+1)∫δu det W(u).
    pub fn gradient(&self, coeffs: &[f64]) -> Result<Vec<f64>> {
        let data = self.table.evaluate(coeffs);
        let (g, _, _) = self.objective_gradient(&data)?;
        Ok(g)
    }

    fn objective_gradient(&self, data: &NodalData) -> Result<(Vec<f64>, f64, Vec<f64>)> {
        let n1 = self.n as f64 + 1.0;
        let lp = self.lp(&data.values)?;
        let s = normalization_factor(lp, self.p, self.n)?;
        let raw = -self.grid.integrate(&product(&data.values, &data.dets));
        let lambda = -raw / lp;
        let residual: Vec<f64> = data
            .values
            .iter()
            .zip(&data.dets)
            .map(|(u, d)| d - lambda * u.powf(self.p - 1.0))
            .collect();
        let scale = -n1 * s.powi(self.n as i32 + 1);
        let g = (0..self.basis.len())
            .into_par_iter()
            .map(|k| scale * self.grid.integrate(&product(self.table.values(k), &residual)))
            .collect();
        Ok((g, lambda, residual))
    }

    /// Relative difference between the analytic gradient and central differences.
    pub fn check_gradient(&self, coeffs: &[f64]) -> Result<f64> {
        let g = self.gradient(coeffs)?;
        let h = 1e-5;
        let mut diff = 0.0;
        let mut size = 0.0;
        for k in 0..coeffs.len() {
            let mut plus = coeffs.to_vec();
            let mut minus = coeffs.to_vec();
            plus[k] += h;
            minus[k] -= h;
            let fd = (self.value(&plus)? - self.value(&minus)?) / (2.0 * h);
            diff += (fd - g[k]).powi(2);
            size += g[k].powi(2);
        }
        Ok(if size > 0.0 { (diff / size).sqrt() } else { diff.sqrt() })
    }

    /// Smallest W-eigenvalue per node with its unit eigenvector.
    fn min_eigenpairs(&self, coeffs: &[f64]) -> Vec<(f64, Vec<f64>)> {
        let n = self.n;
        (0..self.grid.len())
            .into_par_iter()
            .map(|i| {
                let mut w = vec![0.0; n * n];
                for (k, c) in coeffs.iter().enumerate() {
                    for (acc, v) in w.iter_mut().zip(self.table.w(k, i)) {
                        *acc += c * v;
                    }
                }
                if n == 1 {
                    return (w[0], vec![1.0]);
                }
                let m = DMatrix::from_fn(n, n, |r, c| 0.5 * (w[r * n + c] + w[c * n + r]));
                let eig = SymmetricEigen::new(m);
                let idx = eig.eigenvalues.imin();
                (eig.eigenvalues[idx], eig.eigenvectors.column(idx).iter().copied().collect())
            })
            .collect()
    }

    /// −w ∫ log(λ_min(W) − ε_c) and its coefficient gradient; None outside the margin.
    fn barrier(&self, coeffs: &[f64], data: &NodalData, weight: f64) -> Option<(f64, Vec<f64>)> {
        if data.min_eigs.iter().any(|m| !(*m > self.margin)) {
            return None;
        }
        if weight == 0.0 {
            return Some((0.0, vec![0.0; coeffs.len()]));
        }
        let pairs = self.min_eigenpairs(coeffs);
        let logs: Vec<f64> = pairs.iter().map(|(m, _)| (m - self.margin).ln()).collect();
        let value = -weight * self.grid.integrate(&logs);
        let n = self.n;
        let grad = (0..coeffs.len())
            .into_par_iter()
            .map(|k| {
                let terms: Vec<f64> = pairs
                    .iter()
                    .enumerate()
                    .map(|(i, (m, v))| {
                        let wk = self.table.w(k, i);
                        let mut q = 0.0;
                        for r in 0..n {
                            for c in 0..n {
                                q += v[r] * wk[r * n + c] * v[c];
                            }
                        }
                        q / (m - self.margin)
                    })
                    .collect();
                -weight * self.grid.integrate(&terms)
            })
            .collect();
        Some((value, grad))
    }

    /// Full evaluation at normalized coefficients; None when outside the convexity margin.
    fn evaluate(&self, coeffs: &[f64], weight: f64) -> Result<Option<Evaluation>> {
        let data = self.table.evaluate(coeffs);
        if let Some((node, &value)) = data.values.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
            return Err(Error::NonPositive { node, value });
        }
        let Some((barrier, bgrad)) = self.barrier(coeffs, &data, weight) else {
            return Ok(None);
        };
        let (mut gradient, lambda, residual) = self.objective_gradient(&data)?;
        if weight > 0.0 {
            // project the barrier gradient onto normalized variations: δ ↦ δ − c⟨q, δ⟩
            let upm: Vec<f64> = data.values.iter().map(|u| u.powf(self.p - 1.0)).collect();
            let alpha = self.alpha();
            let q: Vec<f64> = (0..coeffs.len())
                .map(|k| self.grid.integrate(&product(self.table.values(k), &upm)) / alpha)
                .collect();
            let cg = dot(coeffs, &bgrad);
            for k in 0..coeffs.len() {
                gradient[k] += bgrad[k] - q[k] * cg;
            }
        }
        let objective = -self.grid.integrate(&product(&data.values, &data.dets));
        let el_residual = residual.iter().fold(0.0f64, |a, r| a.max(r.abs())) / lambda;
        Ok(Some(Evaluation { data, objective, barrier, gradient, lambda, el_residual }))
    }

    fn precondition(&self, g: &[f64]) -> Vec<f64> {
        self.metric.solve(&DVector::from_column_slice(g)).iter().copied().collect()
    }

    /// Preconditioned descent from normalize(1 + a ξ_{μ₁}).
    pub fn minimize(&self, seed_amplitude: f64) -> Result<CriticalPoint> {
        let start = self.seed(seed_amplitude)?;
        self.minimize_from(start)
    }

    pub fn minimize_from(&self, start: Vec<f64>) -> Result<CriticalPoint> {
        let settings = &self.settings;
        let mut c = self.normalize_coeffs(&start)?;
        let gradient_check = self.check_gradient(&c)?;
        // at the constant the gradient vanishes and the relative check is meaningless
        let constant_start = c.iter().skip(1).all(|v| *v == 0.0);
        if !constant_start && gradient_check > GRADIENT_CHECK_TOL {
            return Err(Error::Construction(format!(
                "analytic gradient disagrees with finite differences (relative {gradient_check:e})"
            )));
        }
        let mut weight = settings.barrier_weight;
        let mut eval = self
            .evaluate(&c, weight)?
            .ok_or_else(|| Error::Validation("seed violates the convexity margin".into()))?;
        let mut prev: Option<Vec<f64>> = None;
        let mut step = settings.step;
        let mut log = Vec::new();
        let mut bound = 1.0f64;
        let mut iterations = 0;
        let mut gnorm;
        loop {
            let pg = self.precondition(&eval.gradient);
            gnorm = dot(&eval.gradient, &pg).max(0.0).sqrt();
            let (umin, umax) = min_max(&eval.data.values);
            bound = bound.max(umax).max(1.0 / umin);
            if iterations % 10 == 0 {
                log.push(BoundsEntry { iteration: iterations, max_u: umax, min_u: umin });
            }
            if gnorm < settings.tol && weight == 0.0 {
                break;
            }
            if iterations >= settings.max_iter {
                return Err(Error::NoConvergence(format!(
                    "{iterations} iterations: gradient norm {gnorm:e}, EL residual {:e}, I = {}",
                    eval.el_residual, eval.objective
                )));
            }
            iterations += 1;
            let mut dir: Vec<f64> = pg.iter().map(|v| -v).collect();
            if let Some(prev) = &prev {
                if settings.momentum > 0.0 {
                    let with: Vec<f64> =
                        dir.iter().zip(c.iter().zip(prev)).map(|(d, (a, b))| d + settings.momentum * (a - b)).collect();
                    if dot(&with, &eval.gradient) < 0.0 {
                        dir = with;
                    }
                }
            }
            let slope = dot(&dir, &eval.gradient);
            let current = eval.objective + eval.barrier;
            let mut t = (2.0 * step).min(1e3);
            let accepted = loop {
                if t < 1e-18 {
                    break None;
                }
                let trial: Vec<f64> = c.iter().zip(&dir).map(|(a, d)| a + t * d).collect();
                let trial = match self.normalize_coeffs(&trial) {
                    Ok(v) => v,
                    Err(_) => {
                        t *= 0.5;
                        continue;
                    }
                };
                let Some(next) = self.evaluate(&trial, weight).ok().flatten() else {
                    t *= 0.5;
                    continue;
                };
                let value = next.objective + next.barrier;
                let predicted = t * slope;
                if predicted.abs() < 1e-12 * current.abs().max(1.0) {
                    // decrease below round-off: judge by the gradient instead
                    let pg_next = self.precondition(&next.gradient);
                    if dot(&next.gradient, &pg_next).sqrt() < gnorm {
                        break Some((trial, next, t));
                    }
                } else if value <= current + 1e-4 * predicted {
                    break Some((trial, next, t));
                }
                t *= 0.5;
            };
            let Some((trial, next, t)) = accepted else {
                if gnorm < 1e3 * settings.tol {
                    break;
                }
                return Err(Error::NoConvergence(format!(
                    "line search failed after {iterations} iterations: gradient norm {gnorm:e}, EL residual {:e}",
                    eval.el_residual
                )));
            };
            step = t;
            prev = Some(std::mem::replace(&mut c, trial));
            eval = next;
            if weight > 0.0 && eval.el_residual < BARRIER_RELEASE {
                weight *= settings.barrier_decay;
                if weight < 1e-20 {
                    weight = 0.0;
                }
                if let Some(e) = self.evaluate(&c, weight)? {
                    eval = e;
                }
            }
        }
        let (umin, umax) = min_max(&eval.data.values);
        log.push(BoundsEntry { iteration: iterations, max_u: umax, min_u: umin });
        let alpha = self.alpha();
        let lp = self.lp(&eval.data.values)?;
        let mean = self.grid.integrate(&eval.data.values) / alpha;
        let non_constancy = eval.data.values.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
        let min_eigenvalue = eval.data.min_eigenvalue();
        Ok(CriticalPoint {
            n: self.n,
            p: self.p,
            degree: self.degree,
            degrees: self.degrees.clone(),
            coefficients: c,
            objective: eval.objective,
            lambda: eval.lambda,
            el_residual: eval.el_residual,
            non_constancy,
            constraint_error: (lp - alpha).abs() / alpha,
            min_eigenvalue,
            margin_ok: min_eigenvalue > 10.0 * self.margin,
            iterations,
            gradient_norm: gnorm,
            gradient_check,
            bound,
            bounds_log: log,
            basis: self.basis.clone(),
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundsEntry {
    pub iteration: usize,
    pub max_u: f64,
    pub min_u: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CriticalPoint {
    pub n: usize,
    pub p: f64,
    pub degree: u32,
    pub degrees: Vec<u32>,
    pub coefficients: Vec<f64>,
    /// I(u*) = −(n+1)V.
    pub objective: f64,
    /// λ_∞ = (n+1)V/|S^n|.
    pub lambda: f64,
    /// max |det W − λ u^{p−1}| / λ on the grid.
    pub el_residual: f64,
    /// max |u − mean u|.
    pub non_constancy: f64,
    /// |∫u^p − |S^n|| / |S^n|.
    pub constraint_error: f64,
    pub min_eigenvalue: f64,
    /// Smallest W-eigenvalue exceeds ten times the margin.
    pub margin_ok: bool,
    pub iterations: usize,
    pub gradient_norm: f64,
    pub gradient_check: f64,
    /// Empirical C with 1/C ≤ u ≤ C along the trajectory.
    pub bound: f64,
    pub bounds_log: Vec<BoundsEntry>,
    #[serde(skip)]
    pub basis: Arc<Basis>,
}

impl CriticalPoint {
    pub fn support(&self) -> Result<SupportFunction> {
        SupportFunction::spectral(self.basis.clone(), self.coefficients.clone())
    }

    /// EL residual re-evaluated on another grid.
    pub fn el_residual_on(&self, grid: &SphereGrid) -> Result<f64> {
        let u = self.support()?;
        let data = u.nodal(grid)?;
        let worst = data
            .values
            .iter()
            .zip(&data.dets)
            .map(|(v, d)| (d - self.lambda * v.powf(self.p - 1.0)).abs())
            .fold(0.0, f64::max);
        Ok(worst / self.lambda)
    }
}

fn product(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x * y).collect()
}

fn min_max(values: &[f64]) -> (f64, f64) {
    values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(*v), hi.max(*v)))
}
