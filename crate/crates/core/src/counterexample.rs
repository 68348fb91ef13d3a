//! Weights f for which K_f has a sign, so the equation admits no solution.
//!
//! Two families: the critical weight |X_{n+1}|^D + C for p = −n−1, and the radial weight
//! solving −r f′ + γ(r² − n)/(1+r²) f = −φ(r) for p < −n−1, tabulated in s = log r.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{ensure, Error, Result};
use crate::pohozaev::{k_f, ProjectiveField};
use crate::quadrature::{gauss_legendre, integrate, pairwise_sum, Chebyshev};
use crate::sphere::{dot, SphereGrid};
use crate::support::SphereFunction;

/// f(X) = |X_{n+1}|^D + C, i.e. (1+|x|²)^{−D/2} + C in either chart.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CriticalWeight {
    pub d: f64,
    pub c: f64,
}

pub fn critical_f(d: f64, c: f64) -> Result<CriticalWeight> {
    ensure(d > 0.0 && d.is_finite(), || format!("D must be positive, got {d}"))?;
    ensure(c > 0.0 && c.is_finite(), || format!("C must be positive, got {c}"))?;
    Ok(CriticalWeight { d, c })
}

impl SphereFunction for CriticalWeight {
    fn value(&self, x: &[f64]) -> f64 {
        x[x.len() - 1].abs().powf(self.d) + self.c
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let n = x.len() - 1;
        let z = x[n];
        let slope = self.d * z.abs().powf(self.d - 1.0) * z.signum();
        // tangential part of slope·e_{n+1}
        (0..=n)
            .map(|i| slope * (if i == n { 1.0 } else { 0.0 } - z * x[i]))
            .collect()
    }
}

impl CriticalWeight {
    /// The chart value of ∇_ξ f for ξ = −D x: |ξ|² (1+|x|²)^{−D/2−1} with |ξ| = D|x|.
    pub fn chart_derivative(&self, coord: &[f64]) -> f64 {
        let r2 = dot(coord, coord);
        self.d * self.d * r2 * (1.0 + r2).powf(-self.d / 2.0 - 1.0)
    }
}

/// Parameters of the radial weight.
#[derive(Debug, Clone, Serialize)]
pub struct RadialWeight {
    pub n: usize,
    pub p: f64,
    pub gamma: f64,
    pub phi_inf: f64,
    /// decay power k in φ(r) = φ_∞ r^k/(1+r^k)
    pub phi_k: f64,
    pub beta0: f64,
    /// lower bound that beta0 must exceed
    pub beta0_bound: f64,
}

impl RadialWeight {
    /// Defaults: k = ceil(n|γ|) + 2 and beta0 = twice its lower bound.
    pub fn new(n: usize, p: f64, phi_inf: f64, phi_k: Option<f64>, beta0: Option<f64>) -> Result<Self> {
        ensure(n >= 1, || "n must be positive".into())?;
        let nf = n as f64;
        ensure(p.is_finite() && p < -nf - 1.0, || format!("need p < −n−1, got {p}"))?;
        ensure(phi_inf > 0.0 && phi_inf.is_finite(), || "phi_inf must be positive".into())?;
        let gamma = (p + nf + 1.0) / (nf + 1.0);
        let pole = nf * gamma.abs();
        let phi_k = phi_k.unwrap_or((pole).ceil() + 2.0);
        ensure(phi_k > pole, || {
            format!("φ decays like r^{phi_k} at 0, slower than r^{pole}: the inner integral diverges")
        })?;
        let mut w = Self { n, p, gamma, phi_inf, phi_k, beta0: 0.0, beta0_bound: 0.0 };
        w.beta0_bound = w.bound();
        w.beta0 = beta0.unwrap_or(2.0 * w.beta0_bound);
        ensure(w.beta0 > w.beta0_bound, || {
            format!("beta0 = {} must exceed {}", w.beta0, w.beta0_bound)
        })?;
        Ok(w)
    }

    pub fn phi(&self, r: f64) -> f64 {
        let t = r.powf(self.phi_k);
        if t.is_infinite() {
            self.phi_inf
        } else {
            self.phi_inf * t / (1.0 + t)
        }
    }

    /// log G(r) with G = (1+r²)^{(n+1)/2}/r^n, as a function of s = log r.
    fn log_g(&self, s: f64) -> f64 {
        let nf = self.n as f64;
        let log1p_r2 = if s > 20.0 { 2.0 * s + (-2.0 * s).exp().ln_1p() } else { (2.0 * s).exp().ln_1p() };
        0.5 * (nf + 1.0) * log1p_r2 - nf * s
    }

    /// Integrand of the inner integral in s: φ(e^s) G(e^s)^{−γ}.
    fn integrand(&self, s: f64) -> f64 {
        self.phi(s.exp()) * (-self.gamma * self.log_g(s)).exp()
    }

    /// ∫_0^1 φ(t)/t G(t)^{−γ} dt.
    fn bound(&self) -> f64 {
        // the integrand decays like e^{(k − n|γ|)s}; stop where it is below 1e−30
        let rate = self.phi_k - self.n as f64 * self.gamma.abs();
        let lo = -(70.0 / rate).max(30.0);
        integrate(|s| self.integrand(s), lo, 0.0, 400, 20)
    }

    /// Radial ODE residual −r f′ + γ(r² − n)/(1+r²) f + φ for given f and r f′.
    pub fn ode_residual(&self, r: f64, f: f64, r_fprime: f64) -> f64 {
        let nf = self.n as f64;
        let r2 = r * r;
        let ratio = if r2.is_infinite() { 1.0 } else { (r2 - nf) / (1.0 + r2) };
        -r_fprime + self.gamma * ratio * f + self.phi(r)
    }
}

/// Resolution of the radial ODE on r ∈ [r_min, r_max].
#[derive(Debug, Clone)]
pub struct RadialSolution {
    pub weight: RadialWeight,
    /// log f as a Chebyshev series in s = log r
    log_f: Chebyshev,
    dlog_f: Chebyshev,
    pub r_min: f64,
    pub r_max: f64,
    /// tabulation points (r, f)
    pub table: Vec<(f64, f64)>,
    /// Richardson estimate of lim f(r) as r → ∞
    pub limit: f64,
}

pub const R_MIN: f64 = 1e-6;
pub const R_MAX: f64 = 1e6;
const CHEB_DEGREE: usize = 1024;

/// Tabulate f(r) = G^γ [∫_1^r φ/t G^{−γ} dt + beta0] on Chebyshev points in log r.
pub fn resolve_radial_f(w: &RadialWeight) -> Result<RadialSolution> {
    resolve_radial_f_on(w, R_MIN, R_MAX, CHEB_DEGREE)
}

pub fn resolve_radial_f_on(w: &RadialWeight, r_min: f64, r_max: f64, degree: usize) -> Result<RadialSolution> {
    ensure(w.beta0 > w.beta0_bound, || "beta0 violates its lower bound".into())?;
    ensure(r_min > 0.0 && r_max > r_min, || "bad radial range".into())?;
    let (a, b) = (r_min.ln(), r_max.ln());
    let mut nodes = Chebyshev::points(a, b, degree);
    nodes.reverse(); // ascending
    // cumulative ∫_{a}^{s_j}, with 0 as an extra breakpoint
    let mut breaks = nodes.clone();
    let zero_at = breaks.partition_point(|&s| s < 0.0);
    let has_zero = breaks.get(zero_at).is_some_and(|&s| s == 0.0);
    if !has_zero {
        breaks.insert(zero_at, 0.0);
    }
    let (gx, gw) = gauss_legendre(20);
    let mut cumulative = vec![0.0; breaks.len()];
    let mut terms: Vec<f64> = Vec::new();
    for i in 1..breaks.len() {
        let (lo, hi) = (breaks[i - 1], breaks[i]);
        let half = 0.5 * (hi - lo);
        terms.clear();
        for (x, wt) in gx.iter().zip(&gw) {
            terms.push(half * wt * w.integrand(lo + half * (x + 1.0)));
        }
        cumulative[i] = cumulative[i - 1] + pairwise_sum(&terms);
    }
    let at_zero = cumulative[zero_at];
    let log_values: Vec<f64> = breaks
        .iter()
        .zip(&cumulative)
        .filter(|(s, _)| has_zero || **s != 0.0)
        .map(|(&s, &c)| {
            let bracket = c - at_zero + w.beta0;
            if !(bracket > 0.0) {
                return Err(Error::Construction(format!("f vanishes at r = {:e}", s.exp())));
            }
            Ok(w.gamma * w.log_g(s) + bracket.ln())
        })
        .collect::<Result<_>>()?;
    let mut descending = log_values.clone();
    descending.reverse();
    let log_f = Chebyshev::fit(a, b, &descending);
    let dlog_f = log_f.derivative();
    let table: Vec<(f64, f64)> = nodes.iter().zip(&log_values).map(|(s, l)| (s.exp(), l.exp())).collect();
    let mut sol = RadialSolution { weight: w.clone(), log_f, dlog_f, r_min, r_max, table, limit: 0.0 };
    sol.limit = sol.richardson_limit(r_max);
    Ok(sol)
}

impl RadialSolution {
    /// f(r) inside the table; power-law continuation outside.
    pub fn f(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        if r.is_infinite() {
            return self.limit;
        }
        let s = r.ln();
        let (a, b) = self.log_f.domain();
        if s < a {
            let slope = self.weight.n as f64 * self.weight.gamma.abs();
            return self.log_f.eval(a).exp() * (r / self.r_min).powf(slope);
        }
        if s > b {
            let edge = self.log_f.eval(b).exp();
            return self.limit + (edge - self.limit) * (r / self.r_max).powf(self.weight.gamma);
        }
        self.log_f.eval(s).exp()
    }

    /// r f′(r) = df/d(log r).
    pub fn r_fprime(&self, r: f64) -> f64 {
        if r <= 0.0 || r.is_infinite() {
            return 0.0;
        }
        let s = r.ln();
        let (a, b) = self.log_f.domain();
        if s < a {
            return self.weight.n as f64 * self.weight.gamma.abs() * self.f(r);
        }
        if s > b {
            return self.weight.gamma * (self.f(r) - self.limit);
        }
        self.f(r) * self.dlog_f.eval(s)
    }

    /// Raw value f(r_max).
    pub fn f_at_max(&self) -> f64 {
        self.log_f.eval(self.r_max.ln()).exp()
    }

    /// Eliminate the leading K r^γ correction from f(r) and f(r/10).
    pub fn richardson_limit(&self, r: f64) -> f64 {
        let g = self.weight.gamma;
        let (fa, fb) = (self.log_f.eval(r.ln()).exp(), self.log_f.eval((r / 10.0).ln()).exp());
        let (a, b) = (r.powf(g), (r / 10.0).powf(g));
        (fa * b - fb * a) / (b - a)
    }

    /// max over log-spaced r in [lo, hi] of the radial ODE residual.
    pub fn max_residual(&self, lo: f64, hi: f64, samples: usize) -> f64 {
        (0..samples)
            .map(|i| {
                let t = i as f64 / (samples - 1) as f64;
                let r = (lo.ln() + t * (hi.ln() - lo.ln())).exp();
                self.weight.ode_residual(r, self.f(r), self.r_fprime(r)).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Least-squares slope of log f against log r over [lo, hi].
    pub fn pole_exponent(&self, lo: f64, hi: f64, samples: usize) -> f64 {
        let pts: Vec<(f64, f64)> = (0..samples)
            .map(|i| {
                let s = lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (samples - 1) as f64;
                (s, self.log_f.eval(s))
            })
            .collect();
        let m = pts.len() as f64;
        let sx: f64 = pts.iter().map(|p| p.0).sum();
        let sy: f64 = pts.iter().map(|p| p.1).sum();
        let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
        (m * sxy - sx * sy) / (m * sxx - sx * sx)
    }

    /// Chart radius r = |X′|/|X_{n+1}| of a sphere point.
    pub fn radius(x: &[f64]) -> f64 {
        let n = x.len() - 1;
        let rho = dot(&x[..n], &x[..n]).sqrt();
        rho / x[n].abs()
    }
}

impl SphereFunction for RadialSolution {
    fn value(&self, x: &[f64]) -> f64 {
        self.f(Self::radius(x))
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let n = x.len() - 1;
        let z = x[n];
        let rho = dot(&x[..n], &x[..n]).sqrt();
        if rho == 0.0 || z == 0.0 {
            return vec![0.0; n + 1];
        }
        let r = rho / z.abs();
        let dfdr = self.r_fprime(r) / r;
        // ∇r = (X′/(ρ|z|), −ρ sgn(z)/z²), projected to the tangent space
        let mut g: Vec<f64> = x[..n].iter().map(|v| v / (rho * z.abs())).collect();
        g.push(-rho * z.signum() / (z * z));
        let radial = dot(&g, x);
        g.iter().zip(x).map(|(gi, xi)| dfdr * (gi - radial * xi)).collect()
    }
}

/// Outcome of the sign test on K_f.
#[derive(Debug, Clone, Serialize)]
pub struct Certificate {
    pub p: f64,
    pub nodes: usize,
    pub max_k_f: f64,
    pub min_k_f: f64,
    /// fraction of nodes with K_f < −1e−6
    pub negative_fraction: f64,
    pub passed: bool,
}

pub const CERT_MAX: f64 = 1e-9;
pub const CERT_STRICT: f64 = -1e-6;
pub const CERT_FRACTION: f64 = 0.99;

/// Evaluate K_f on the grid for the given field and report its sign.
pub fn certify_insolvability<F: SphereFunction + ?Sized>(
    f: &F,
    p: f64,
    pf: &ProjectiveField,
    grid: &SphereGrid,
) -> Result<Certificate> {
    ensure(pf.n() == grid.n, || "field and grid dimensions differ".into())?;
    let values: Vec<f64> = grid.nodes.par_iter().map(|x| k_f(f, pf, x, p)).collect();
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("K_f at node {i}")));
    }
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    if max > CERT_MAX {
        let node = values.iter().position(|v| *v == max).unwrap_or(0);
        return Err(Error::Construction(format!("K_f = {max:e} > 0 at node {node}")));
    }
    let negative = values.iter().filter(|v| **v < CERT_STRICT).count();
    let fraction = negative as f64 / values.len() as f64;
    Ok(Certificate {
        p,
        nodes: values.len(),
        max_k_f: max,
        min_k_f: min,
        negative_fraction: fraction,
        passed: fraction >= CERT_FRACTION,
    })
}

/// Field whose K_f is −∇f along |x|-increasing rays for the critical weight: chart field +D x.
pub fn critical_certificate_field(n: usize, d: f64) -> ProjectiveField {
    ProjectiveField::dilation(n, -d)
}

/// Field ξ = −x used with the radial weight.
pub fn radial_field(n: usize) -> ProjectiveField {
    ProjectiveField::dilation(n, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pohozaev::field_on_sphere;
    use crate::sphere::{lift, Hemisphere};

    #[test]
    fn critical_weight_values() {
        let f = critical_f(4.0, 1.0).unwrap();
        assert_eq!(f.value(&[0.0, -1.0]), 2.0);
        assert!((f.value(&[1.0, 1e-12]) - 1.0).abs() < 1e-15);
        assert!(critical_f(0.0, 1.0).is_err());
        assert!(critical_f(1.0, -1.0).is_err());
    }

    #[test]
    fn critical_directional_derivative() {
        let f = critical_f(4.0, 1.0).unwrap();
        let pf = ProjectiveField::dilation(1, 4.0);
        let grid = SphereGrid::new(1, 512).unwrap();
        let mut worst: f64 = 0.0;
        for x in &grid.nodes {
            let got = dot(&f.gradient(x), &field_on_sphere(&pf, x));
            let coord = [x[0] / x[1].abs()];
            worst = worst.max((got - f.chart_derivative(&coord)).abs());
        }
        assert!(worst < 1e-9, "{worst}");
    }

    #[test]
    fn radial_defaults_and_errors() {
        let w = RadialWeight::new(1, -4.0, 1.0, None, None).unwrap();
        assert_eq!(w.gamma, -1.0);
        assert_eq!(w.phi_k, 3.0);
        assert!((w.beta0 - 2.0 * w.beta0_bound).abs() < 1e-15);
        assert!(RadialWeight::new(1, -2.0, 1.0, None, None).is_err());
        assert!(RadialWeight::new(1, -4.0, 1.0, Some(0.5), None).is_err());
        assert!(RadialWeight::new(1, -4.0, 1.0, None, Some(0.5 * w.beta0_bound)).is_err());
    }

    #[test]
    fn value_at_one() {
        let w = RadialWeight::new(2, -4.0, 1.0, None, None).unwrap();
        let sol = resolve_radial_f(&w).unwrap();
        let want = w.beta0 * 2f64.powf(w.gamma * 3.0 / 2.0);
        assert!((sol.f(1.0) - want).abs() < 1e-12);
    }

    #[test]
    fn radial_ode_and_limits() {
        let w = RadialWeight::new(1, -4.0, 1.0, None, None).unwrap();
        let sol = resolve_radial_f(&w).unwrap();
        assert!(sol.max_residual(1e-3, 1e3, 2001) < 1e-8);
        assert!((sol.limit - 1.0).abs() < 1e-4);
        assert!((sol.pole_exponent(1e-6, 1e-3, 200) - 1.0).abs() < 1e-3);
        // larger beta0 raises f everywhere
        let bigger = RadialWeight::new(1, -4.0, 1.0, None, Some(3.0 * w.beta0_bound)).unwrap();
        let sol2 = resolve_radial_f(&bigger).unwrap();
        for r in [1e-4, 0.3, 1.0, 7.0, 1e4] {
            assert!(sol2.f(r) > sol.f(r));
        }
    }

    #[test]
    fn mirror_symmetry() {
        let w = RadialWeight::new(2, -6.0, 1.0, None, None).unwrap();
        let sol = resolve_radial_f(&w).unwrap();
        let x = lift(&[0.7, -0.2], Hemisphere::South);
        let m = lift(&[0.7, -0.2], Hemisphere::North);
        assert!((sol.value(&x) - sol.value(&m)).abs() < 1e-12);
    }

    #[test]
    fn constant_weight_is_rejected() {
        let grid = SphereGrid::new(1, 64).unwrap();
        let one = crate::support::Constant(1.0);
        let cert = certify_insolvability(&one, -2.0, &radial_field(1), &grid).unwrap();
        assert!(!cert.passed);
        assert_eq!(cert.max_k_f, 0.0);
    }
}
