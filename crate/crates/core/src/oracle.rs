//! Shooting oracle for the planar equation h″ + h = h^{p−1}.
//!
//! Works directly with the ODE in θ and an adaptive Dormand–Prince pair, so it shares no
//! discretization with the spectral solver it is used to check.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{ensure, Error, Result};
use crate::sphere::SphereGrid;
use crate::support::{Basis, BasisFunction, SupportFunction};

/// Target period of a solution invariant under rotation by 2π/3.
pub const TARGET_PERIOD: f64 = 2.0 * PI / 3.0;
pub const ODE_TOL: f64 = 1e-12;
/// Upper end of the h₀ scan.
pub const H_MAX: f64 = 20.0;
const SCAN_START: f64 = 1e-4;
const MAX_STEPS: usize = 2_000_000;

type State = [f64; 2];

fn rhs(p: f64, y: &State) -> State {
    [y[1], y[0].powf(p - 1.0) - y[0]]
}

/// E = (h′)²/2 + h²/2 − h^p/p.
pub fn energy(p: f64, y: &State) -> f64 {
    0.5 * y[1] * y[1] + 0.5 * y[0] * y[0] - y[0].powf(p) / p
}

// Dormand–Prince 5(4) tableau; the right-hand side is autonomous, so the nodes c_i are unused
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// One Dormand–Prince step: (5th-order state, scaled error norm).
fn dopri_step(p: f64, y: &State, h: f64, tol: f64) -> (State, f64) {
    let mut k = [[0.0; 2]; 7];
    for s in 0..7 {
        let mut ys = *y;
        for (j, kj) in k.iter().enumerate().take(s) {
            ys[0] += h * A[s][j] * kj[0];
            ys[1] += h * A[s][j] * kj[1];
        }
        k[s] = rhs(p, &ys);
    }
    let mut y5 = *y;
    let mut err = 0.0;
    for i in 0..2 {
        let mut d5 = 0.0;
        let mut d4 = 0.0;
        for s in 0..7 {
            d5 += B5[s] * k[s][i];
            d4 += B4[s] * k[s][i];
        }
        y5[i] += h * d5;
        let scale = tol + tol * y[i].abs().max(y5[i].abs());
        err += (h * (d5 - d4) / scale).powi(2);
    }
    (y5, (err / 2.0).sqrt())
}

/// Adaptive integrator state for the planar ODE.
struct Integrator {
    p: f64,
    tol: f64,
    t: f64,
    y: State,
    h: f64,
    steps: usize,
}

impl Integrator {
    fn new(p: f64, y: State, tol: f64) -> Self {
        Self { p, tol, t: 0.0, y, h: 1e-3, steps: 0 }
    }

    /// Advance by one accepted step no longer than `limit`; returns the step taken.
    fn step(&mut self, limit: f64) -> Result<f64> {
        loop {
            self.steps += 1;
            if self.steps > MAX_STEPS {
                return Err(Error::NoConvergence("step budget exhausted".into()));
            }
            let h = self.h.min(limit);
            let (y, err) = dopri_step(self.p, &self.y, h, self.tol);
            let factor = if err > 0.0 { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) } else { 5.0 };
            if err <= 1.0 && y[0] > 0.0 && y.iter().all(|v| v.is_finite()) {
                self.t += h;
                self.y = y;
                if h == self.h || factor < 1.0 {
                    self.h = h * factor;
                }
                return Ok(h);
            }
            self.h = h * factor.min(0.5);
            if self.h < 1e-14 {
                return Err(Error::NoConvergence(format!("step size underflow at t = {}", self.t)));
            }
        }
    }

    /// Integrate forward to the exact time `t_end`.
    fn advance_to(&mut self, t_end: f64) -> Result<()> {
        while self.t < t_end {
            let remaining = t_end - self.t;
            if remaining < 1e-15 {
                break;
            }
            self.step(remaining)?;
        }
        Ok(())
    }
}

/// Result of a single shot from (h₀, 0).
#[derive(Debug, Clone, Serialize)]
pub struct ShootState {
    pub p: f64,
    pub h0: f64,
    pub tol: f64,
    pub half_period: f64,
    pub period: f64,
    /// The other turning point of the orbit.
    pub h_turn: f64,
    pub energy: f64,
    pub energy_drift: f64,
}

/// Locate the next zero of h′ after the current position, refined by Newton on a
/// single Dormand–Prince step from the bracketing left endpoint.
fn next_turning_point(it: &mut Integrator, sign: f64) -> Result<(f64, State)> {
    loop {
        let (t0, y0) = (it.t, it.y);
        it.step(f64::INFINITY)?;
        if it.y[1] * sign <= 0.0 {
            // zero of v inside [t0, it.t]
            let mut tau = (it.t - t0) * y0[1] / (y0[1] - it.y[1]);
            let mut y = y0;
            for _ in 0..50 {
                let (yt, _) = dopri_step(it.p, &y0, tau, it.tol);
                let a = rhs(it.p, &yt)[1];
                let dtau = yt[1] / a;
                tau -= dtau;
                y = yt;
                if dtau.abs() < 1e-15 * (1.0 + tau.abs()) {
                    let (yt, _) = dopri_step(it.p, &y0, tau, it.tol);
                    y = yt;
                    break;
                }
            }
            return Ok((t0 + tau, y));
        }
    }
}

/// Full period of the orbit through (h₀, 0).
pub fn shoot(p: f64, h0: f64) -> Result<ShootState> {
    ensure(p < -2.0, || format!("p = {p} must be below −2"))?;
    ensure(h0 > 0.0 && h0.is_finite(), || format!("h0 = {h0} must be positive"))?;
    ensure((h0 - 1.0).abs() > 1e-14, || "h0 = 1 is the equilibrium".into())?;
    let y0 = [h0, 0.0];
    let e0 = energy(p, &y0);
    let mut it = Integrator::new(p, y0, ODE_TOL);
    // h″ has the sign of 1 − h₀, so h′ takes that sign first
    let sign = (1.0 - h0).signum();
    let (t_half, y_half) = next_turning_point(&mut it, sign)?;
    it.t = t_half;
    it.y = y_half;
    let (t_full, y_full) = next_turning_point(&mut it, -sign)?;
    let drift = (energy(p, &y_half) - e0).abs().max((energy(p, &y_full) - e0).abs());
    Ok(ShootState {
        p,
        h0,
        tol: ODE_TOL,
        half_period: t_half,
        period: t_full,
        h_turn: y_half[0],
        energy: e0,
        energy_drift: drift / e0.abs().max(1.0),
    })
}

pub fn period_map(p: f64, h0: f64) -> Result<f64> {
    Ok(shoot(p, h0)?.period)
}

/// Period of the linearization at h = 1.
pub fn small_amplitude_period(p: f64) -> f64 {
    2.0 * PI / (2.0 - p).sqrt()
}

/// Scan of the period map over h₀ = 1 + 1e−4·2^j up to `H_MAX`.
#[derive(Debug, Clone, Serialize)]
pub struct PeriodScan {
    pub p: f64,
    pub samples: Vec<(f64, f64)>,
    pub monotone: bool,
}

pub fn scan_period(p: f64) -> Result<PeriodScan> {
    let mut samples = Vec::new();
    let mut delta = SCAN_START;
    while 1.0 + delta < H_MAX {
        let h0 = 1.0 + delta;
        samples.push((h0, period_map(p, h0)?));
        delta *= 2.0;
    }
    samples.push((H_MAX, period_map(p, H_MAX)?));
    let monotone = samples.windows(2).all(|w| w[1].1 >= w[0].1);
    Ok(PeriodScan { p, samples, monotone })
}

/// A 2π/3-periodic non-constant solution, maximal at θ = 0.
#[derive(Debug, Clone, Serialize)]
pub struct OracleSolution {
    pub p: f64,
    pub h0: f64,
    pub h_min: f64,
    pub period: f64,
    pub energy_drift: f64,
    /// (θ, h, h′) on a uniform grid over [0, 2π).
    pub samples: Vec<(f64, f64, f64)>,
    /// Coefficients of cos(3jθ), j = 0, 1, ….
    pub cos_coeffs: Vec<f64>,
}

const SAMPLES: usize = 1536;
const COEFF_FLOOR: f64 = 1e-14;

impl OracleSolution {
    /// Spectral lift onto the retained cos(3jθ) modes.
    pub fn to_support(&self) -> Result<SupportFunction> {
        let mut functions = Vec::new();
        let mut coeffs = Vec::new();
        for (j, c) in self.cos_coeffs.iter().enumerate() {
            functions.push(BasisFunction::Fourier { k: 3 * j as u32, a: 1.0, b: 0.0 });
            coeffs.push(*c);
        }
        SupportFunction::spectral(Arc::new(Basis { n: 1, functions }), coeffs)
    }

    /// Value at angle θ by the spectral lift.
    pub fn value(&self, theta: f64) -> f64 {
        self.cos_coeffs
            .iter()
            .enumerate()
            .map(|(j, c)| c * (3.0 * j as f64 * theta).cos())
            .sum()
    }

    pub fn amplitude(&self) -> f64 {
        self.h0 - self.h_min
    }
}

/// Integrate from (h₀, 0) over one period, sampled on the uniform θ grid, and fit the
/// cosine series by trapezoid quadrature (spectrally accurate for periodic data).
fn sample_orbit(p: f64, h0: f64, period: f64) -> Result<(Vec<(f64, f64, f64)>, Vec<f64>, f64)> {
    let per = SAMPLES / 3;
    let mut it = Integrator::new(p, [h0, 0.0], ODE_TOL);
    let e0 = energy(p, &it.y);
    let mut one = Vec::with_capacity(per);
    let mut drift: f64 = 0.0;
    for k in 0..per {
        let t = period * k as f64 / per as f64;
        it.advance_to(t)?;
        drift = drift.max((energy(p, &it.y) - e0).abs());
        one.push((it.y[0], it.y[1]));
    }
    let samples = (0..SAMPLES)
        .map(|k| {
            let (h, v) = one[k % per];
            (2.0 * PI * k as f64 / SAMPLES as f64, h, v)
        })
        .collect();
    let modes = per / 2;
    let mut coeffs: Vec<f64> = (0..modes)
        .map(|j| {
            let s: f64 = one
                .iter()
                .enumerate()
                .map(|(k, (h, _))| h * (2.0 * PI * (j * k) as f64 / per as f64).cos())
                .sum();
            let scale = if j == 0 { 1.0 } else { 2.0 };
            scale * s / per as f64
        })
        .collect();
    // beyond the integrator noise floor the modes are round-off, and differentiating them
    // twice would amplify it by (3j)²
    if let Some(cut) = coeffs.iter().position(|c| c.abs() < COEFF_FLOOR) {
        coeffs.truncate(cut.max(1));
    }
    Ok((samples, coeffs, drift / e0.abs().max(1.0)))
}

/// Root of period(h₀) = 2π/3 on the scan, or `None` when the map never reaches it.
pub fn find_symmetric_solution(p: f64) -> Result<Option<OracleSolution>> {
    ensure(p < -2.0, || format!("p = {p} must be below −2"))?;
    let scan = scan_period(p)?;
    let Some(idx) = scan.samples.windows(2).position(|w| {
        (w[0].1 - TARGET_PERIOD).signum() != (w[1].1 - TARGET_PERIOD).signum()
    }) else {
        let (lo, hi) = scan
            .samples
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), s| (a.min(s.1), b.max(s.1)));
        if lo > TARGET_PERIOD {
            return Ok(None);
        }
        return Err(Error::Bracketing(format!(
            "period map over the scan spans [{lo}, {hi}] without crossing 2π/3"
        )));
    };
    let (mut a, mut fa) = (scan.samples[idx].0, scan.samples[idx].1 - TARGET_PERIOD);
    let (mut b, mut fb) = (scan.samples[idx + 1].0, scan.samples[idx + 1].1 - TARGET_PERIOD);
    // Illinois false position
    let mut side = 0i8;
    for _ in 0..200 {
        let c = (a * fb - b * fa) / (fb - fa);
        let fc = period_map(p, c)? - TARGET_PERIOD;
        if fc == 0.0 || (b - a).abs() < 1e-15 * c {
            a = c;
            b = c;
            break;
        }
        if fc.signum() == fb.signum() {
            b = c;
            fb = fc;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = c;
            fa = fc;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
        if fc.abs() < 1e-15 {
            a = c;
            b = c;
            break;
        }
    }
    let h0 = 0.5 * (a + b);
    let shot = shoot(p, h0)?;
    let (samples, cos_coeffs, drift) = sample_orbit(p, h0, shot.period)?;
    Ok(Some(OracleSolution {
        p,
        h0,
        h_min: shot.h_turn,
        period: shot.period,
        energy_drift: drift.max(shot.energy_drift),
        samples,
        cos_coeffs,
    }))
}

/// Onset of non-constant solutions located by bisection on p.
#[derive(Debug, Clone, Serialize)]
pub struct Bifurcation {
    pub threshold: f64,
    pub bracket: (f64, f64),
    pub iterations: usize,
}

pub fn bifurcation(p_lo: f64, p_hi: f64, tol: f64) -> Result<Bifurcation> {
    ensure(p_lo < p_hi && p_hi < -2.0, || format!("invalid bracket [{p_lo}, {p_hi}]"))?;
    ensure(tol > 0.0, || "tolerance must be positive".into())?;
    let exists = |p: f64| -> Result<bool> { Ok(find_symmetric_solution(p)?.is_some()) };
    let (mut lo, mut hi) = (p_lo, p_hi);
    if !exists(lo)? || exists(hi)? {
        return Err(Error::Bracketing(format!(
            "solutions must exist at {lo} and be absent at {hi}"
        )));
    }
    let mut iterations = 0;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if exists(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    Ok(Bifurcation { threshold: 0.5 * (lo + hi), bracket: (lo, hi), iterations })
}

/// Agreement between a variational solution and the oracle.
#[derive(Debug, Clone, Serialize)]
pub struct CrossValidation {
    pub p: f64,
    /// None when both sides are constant.
    pub distance: Option<f64>,
    pub rotation: f64,
    pub oracle_scale: f64,
    pub non_constancy: f64,
    pub passed: bool,
    pub summary: String,
}

pub const CROSS_TOL: f64 = 1e-4;
const CROSS_SAMPLES: usize = 4096;

fn sup_distance(u: &SupportFunction, sol: &OracleSolution, scale: f64, shift: f64) -> f64 {
    (0..CROSS_SAMPLES)
        .map(|k| {
            let t = 2.0 * PI * k as f64 / CROSS_SAMPLES as f64;
            let x = [(t + shift).cos(), (t + shift).sin()];
            (u.value(&x) - scale * sol.value(t)).abs()
        })
        .fold(0.0, f64::max)
}

/// Sup-norm distance after the best rotation. Both sides are normalized to ∫h^p = 2π; the
/// oracle solves h″ + h = h^{p−1} exactly, and any rescaling of it solves the same
/// equation with a different multiplier.
pub fn cross_validate(
    u: &SupportFunction,
    p_u: f64,
    p_oracle: f64,
    solution: Option<&OracleSolution>,
) -> Result<CrossValidation> {
    ensure(u.n() == 1, || "cross-validation needs n = 1 data".into())?;
    ensure(p_u == p_oracle, || format!("exponents differ: {p_u} vs {p_oracle}"))?;
    let p = p_u;
    let fine: Vec<f64> = (0..CROSS_SAMPLES)
        .map(|k| {
            let t = 2.0 * PI * k as f64 / CROSS_SAMPLES as f64;
            u.value(&[t.cos(), t.sin()])
        })
        .collect();
    let mean = fine.iter().sum::<f64>() / fine.len() as f64;
    let non_constancy = fine.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
    let Some(sol) = solution else {
        let passed = non_constancy < 1e-6;
        return Ok(CrossValidation {
            p,
            distance: None,
            rotation: 0.0,
            oracle_scale: 1.0,
            non_constancy,
            passed,
            summary: if passed { "both constant/none".into() } else { "oracle has no solution but u is non-constant".into() },
        });
    };
    let grid = SphereGrid::new(1, 1024)?;
    let lp: f64 = grid.nodes.iter().zip(&grid.weights).map(|(x, w)| w * sol.value(x[1].atan2(x[0])).powf(p)).sum();
    let scale = (2.0 * PI / lp).powf(1.0 / p);
    // start from the maximum of u, then refine the shift by golden section
    let kmax = fine
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(k, _)| k)
        .unwrap_or(0);
    let t0 = 2.0 * PI * kmax as f64 / CROSS_SAMPLES as f64;
    let width = 4.0 * 2.0 * PI / CROSS_SAMPLES as f64;
    let (mut a, mut b) = (t0 - width, t0 + width);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = sup_distance(u, sol, scale, c);
    let mut fd = sup_distance(u, sol, scale, d);
    for _ in 0..60 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = sup_distance(u, sol, scale, c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = sup_distance(u, sol, scale, d);
        }
    }
    let rotation = 0.5 * (a + b);
    let distance = sup_distance(u, sol, scale, rotation);
    let passed = distance < CROSS_TOL;
    Ok(CrossValidation {
        p,
        distance: Some(distance),
        rotation,
        oracle_scale: scale,
        non_constancy,
        passed,
        summary: format!("sup-norm distance {distance:e} after rotation {rotation}"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::support::ma_residual;

    #[test]
    fn linear_limit() {
        for p in [-7.0, -4.0, -10.0] {
            let t = period_map(p, 1.0 + 1e-5).unwrap();
            assert!((t - small_amplitude_period(p)).abs() < 1e-6, "{p}: {t}");
        }
        assert!((small_amplitude_period(-7.0) - TARGET_PERIOD).abs() < 1e-15);
    }

    #[test]
    fn ellipse_orbits_have_period_pi() {
        // p = −2 sits outside the contract, so integrate through the internal pieces
        let p = -2.0;
        let mut it = Integrator::new(p, [1.3, 0.0], ODE_TOL);
        let (t1, y1) = next_turning_point(&mut it, -1.0).unwrap();
        it.t = t1;
        it.y = y1;
        let (t2, _) = next_turning_point(&mut it, 1.0).unwrap();
        assert!((t2 - PI).abs() < 1e-10, "{t2}");
        // the ellipse with a = 1.3, ab = 1 has minimum support 1/1.3
        assert!((y1[0] - 1.0 / 1.3).abs() < 1e-10);
    }

    #[test]
    fn energy_is_conserved() {
        let s = shoot(-8.0, 1.5).unwrap();
        assert!(s.energy_drift < 1e-10, "{}", s.energy_drift);
        let s = shoot(-5.0, 0.6).unwrap();
        assert!(s.energy_drift < 1e-10);
        assert!(s.h_turn > 1.0);
    }

    #[test]
    fn solutions_on_either_side_of_minus_seven() {
        assert!(find_symmetric_solution(-6.0).unwrap().is_none());
        let sol = find_symmetric_solution(-8.0).unwrap().expect("solution at p = −8");
        assert!((sol.period - TARGET_PERIOD).abs() < 1e-12);
        assert!(sol.amplitude() > 1e-2);
        let h = sol.to_support().unwrap();
        let grid = SphereGrid::new(1, 512).unwrap();
        let res = ma_residual(&h, |_| 1.0, -8.0, &grid).unwrap();
        assert!(res < 1e-8, "{res}");
    }

    #[test]
    fn contract_errors() {
        assert!(period_map(-1.0, 1.2).unwrap_err().is_validation());
        assert!(period_map(-8.0, 1.0).unwrap_err().is_validation());
        assert!(period_map(-8.0, -0.5).unwrap_err().is_validation());
        let one = SupportFunction::constant(1, 1.0);
        assert!(cross_validate(&one, -6.0, -8.0, None).unwrap_err().is_validation());
        let rep = cross_validate(&one, -6.0, -6.0, None).unwrap();
        assert!(rep.passed && rep.distance.is_none());
    }

    #[test]
    fn oracle_validates_itself() {
        let sol = find_symmetric_solution(-8.0).unwrap().unwrap();
        let h = sol.to_support().unwrap().rotated(&[vec![0.3f64.cos(), -0.3f64.sin()], vec![0.3f64.sin(), 0.3f64.cos()]]);
        let grid = SphereGrid::new(1, 1024).unwrap();
        let lp = crate::support::lp_integral(&h, -8.0, &grid).unwrap();
        let h = h.scaled((2.0 * PI / lp).powf(-1.0 / 8.0));
        let rep = cross_validate(&h, -8.0, -8.0, Some(&sol)).unwrap();
        assert!(rep.passed, "{}", rep.summary);
        assert!(rep.distance.unwrap() < 1e-10);
    }

    #[test]
    fn bifurcation_at_minus_seven() {
        let b = bifurcation(-8.0, -6.0, 1e-3).unwrap();
        assert!((b.threshold + 7.0).abs() < 1e-3, "{b:?}");
        assert!(scan_period(-8.0).unwrap().monotone);
    }
}
