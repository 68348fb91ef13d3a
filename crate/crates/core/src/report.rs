//! The acceptance checks, each returning a structured pass/fail record, and the
//! fixed-precision JSON writer shared with the command-line tool.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::sync::Arc;
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};

use crate::counterexample::{
    certify_insolvability, critical_certificate_field, critical_f, radial_field, resolve_radial_f, RadialSolution,
    RadialWeight,
};
use crate::error::Result;
use crate::oracle::{bifurcation, cross_validate, find_symmetric_solution};
use crate::pohozaev::{field_on_sphere, identity_integral, k_f, ProjectiveField};
use crate::poly::sphere_monomial_mean;
use crate::quadrature::gauss_legendre;
use crate::spectral::{build_h_simplex, h_simplex_exactly_harmonic, h_simplex_rational, lambda1, rayleigh_quotient};
use crate::sphere::{dot, sphere_area, SphereGrid};
use crate::support::{ma_residual, Basis, BasisFunction, Constant, SphereFunction, SupportFunction};
use crate::symmetry::{SimplexFrame, SymmetryGroup};
use crate::variational::{
    instability_threshold, second_variation_expanded, second_variation_fd, second_variation_formula,
    VariationalProblem,
};

#[derive(Debug, Clone, Serialize)]
pub struct Criterion {
    pub id: u32,
    pub title: String,
    pub passed: bool,
    pub summary: String,
    pub seconds: f64,
    pub details: Value,
}

impl Criterion {
    pub fn line(&self) -> String {
        format!(
            "[{}] criterion {:>2}: {} ({:.1} s) {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.seconds,
            self.summary
        )
    }
}

fn finish(id: u32, title: &str, start: Instant, passed: bool, summary: String, details: Value) -> Criterion {
    Criterion { id, title: title.into(), passed, summary, seconds: start.elapsed().as_secs_f64(), details }
}

fn failed(id: u32, title: &str, start: Instant, err: crate::Error) -> Criterion {
    finish(id, title, start, false, format!("error: {err}"), json!({ "error": err.to_string() }))
}

macro_rules! guarded {
    ($id:expr, $title:expr, $body:expr) => {{
        let start = Instant::now();
        let run = || -> Result<(bool, String, Value)> { $body };
        match run() {
            Ok((passed, summary, details)) => finish($id, $title, start, passed, summary, details),
            Err(err) => failed($id, $title, start, err),
        }
    }};
}

/// λ₁ = 3(n+2) in both group modes, with the low-degree invariant dimensions.
pub fn criterion_1() -> Criterion {
    guarded!(1, "Poincaré constant", {
        let start = Instant::now();
        let mut ok = true;
        let mut rows = Vec::new();
        for n in [1usize, 2] {
            for special in [true, false] {
                let group = SymmetryGroup::build(&SimplexFrame::regular(n)?, special)?;
                let pc = lambda1(n, &group, 8)?;
                let dims: Vec<usize> = (1..=3)
                    .map(|mu| crate::spectral::invariant_dimension(n, mu, &group))
                    .collect::<Result<_>>()?;
                let want = 3.0 * (n as f64 + 2.0);
                ok &= pc.lambda1 == want && dims[0] == 0 && dims[1] == 0 && dims[2] >= 1;
                rows.push(json!({
                    "n": n, "mode": if special { "special" } else { "full" },
                    "lambda1": pc.lambda1, "mu1": pc.mu1, "dims_1_2_3": dims, "exact": pc.exact,
                }));
            }
        }
        let secs = start.elapsed().as_secs_f64();
        ok &= secs < 5.0;
        Ok((ok, format!("λ₁ = 9 and 12 in both modes in {secs:.2} s"), json!({ "cases": rows, "seconds": secs })))
    })
}

/// The simplex cubic: exact harmonicity, invariance, zero mean and Rayleigh quotient.
pub fn criterion_2() -> Criterion {
    guarded!(2, "Degree-3 witness", {
        let mut ok = true;
        let mut rows = Vec::new();
        for n in [1usize, 2] {
            let frame = SimplexFrame::regular(n)?;
            let h = build_h_simplex(&frame);
            let gram_harmonic = h_simplex_exactly_harmonic(&frame) == Some(true);
            let monomial_harmonic = h_simplex_rational(&frame).map(|p| p.laplacian().is_zero());
            let group = SymmetryGroup::build(&frame, false)?;
            let probe = SphereGrid::new(n, 32)?;
            let invariance = group
                .elements
                .iter()
                .flat_map(|g| probe.nodes.iter().map(move |x| (g, x)))
                .map(|(g, x)| (h.eval(&g.apply(x)) - h.eval(x)).abs())
                .fold(0.0, f64::max);
            let mean = h.sphere_integral() / sphere_area(n);
            let grid = SphereGrid::new(n, 128)?;
            let rq = rayleigh_quotient(&h, &grid);
            let want = 3.0 * (n as f64 + 2.0);
            let pass = gram_harmonic
                && monomial_harmonic != Some(false)
                && invariance <= 1e-12
                && mean.abs() <= 1e-12
                && (rq - want).abs() <= 1e-8;
            ok &= pass;
            rows.push(json!({
                "n": n, "harmonic_exact": gram_harmonic, "harmonic_monomials": monomial_harmonic,
                "invariance": invariance, "mean": mean, "rayleigh": rq, "target": want,
            }));
        }
        Ok((ok, "exact harmonicity, invariance, mean and Rayleigh quotient".into(), json!({ "cases": rows })))
    })
}

/// The identity for ellipses at p = −2 and for the constant at deeper exponents.
pub fn criterion_3() -> Criterion {
    guarded!(3, "Pohozaev identity", {
        let fields = ProjectiveField::seeded(1, 10, 20_241_015);
        let mut worst_by_res = Vec::new();
        for res in [128usize, 256, 512] {
            let grid = SphereGrid::new(1, res)?;
            let mut worst: f64 = 0.0;
            for a in [1.1, 1.3, 2.0] {
                let h = SupportFunction::ellipse(a, 1.0 / a)?;
                for pf in &fields {
                    worst = worst.max(identity_integral(&Constant(1.0), &h, -2.0, pf, &grid)?.abs());
                }
            }
            worst_by_res.push((res, worst));
        }
        let floor = 1e-13;
        let decreasing = worst_by_res.windows(2).all(|w| w[1].1 <= w[0].1.max(floor));
        let at_512 = worst_by_res[2].1;
        let mut const_worst: f64 = 0.0;
        for n in [1usize, 2] {
            let grid = SphereGrid::new(n, if n == 1 { 512 } else { 64 })?;
            let one = SupportFunction::constant(n, 1.0);
            for pf in ProjectiveField::seeded(n, 10, 7) {
                for p in [-3.0, -4.0, -6.0] {
                    const_worst = const_worst.max(identity_integral(&Constant(1.0), &one, p, &pf, &grid)?.abs());
                }
            }
        }
        let ok = at_512 <= 1e-8 && decreasing && const_worst <= 1e-10;
        Ok((
            ok,
            format!("ellipses {at_512:.1e} at 512, constant {const_worst:.1e}"),
            json!({
                "ellipse_worst_by_resolution": worst_by_res,
                "decreasing_to_floor": decreasing,
                "constant_worst": const_worst,
                "note": "at n = 1, p = −2 the weight β vanishes identically, so the ellipse checks are exact by construction",
            }),
        ))
    })
}

/// The critical weight: chart derivative identity and the sign certificate.
pub fn criterion_4() -> Criterion {
    guarded!(4, "Critical insolvability weight", {
        let f = critical_f(4.0, 1.0)?;
        let grid = SphereGrid::new(1, 512)?;
        let chart_field = ProjectiveField::dilation(1, 4.0);
        let worst = grid
            .nodes
            .iter()
            .map(|x| {
                let got = dot(&f.gradient(x), &field_on_sphere(&chart_field, x));
                (got - f.chart_derivative(&[x[0] / x[1].abs()])).abs()
            })
            .fold(0.0, f64::max);
        let cert = certify_insolvability(&f, -2.0, &critical_certificate_field(1, 4.0), &grid)?;
        let ok = worst <= 1e-9 && cert.passed;
        Ok((
            ok,
            format!("derivative error {worst:.1e}, {:.1}% of nodes strictly negative", 100.0 * cert.negative_fraction),
            json!({ "derivative_error": worst, "certificate": cert }),
        ))
    })
}

fn k_f_match(sol: &RadialSolution, grid: &SphereGrid) -> f64 {
    let pf = radial_field(sol.weight.n);
    grid.nodes
        .iter()
        .map(|x| (k_f(sol, &pf, x, sol.weight.p) + sol.weight.phi(RadialSolution::radius(x))).abs())
        .fold(0.0, f64::max)
}

/// The radial counterexample weights for n ∈ {1, 2}.
pub fn criterion_5() -> Criterion {
    guarded!(5, "Deep-negative counterexample", {
        let mut ok = true;
        let mut rows = Vec::new();
        for n in [1usize, 2] {
            for p in [-(n as f64) - 2.0, -(n as f64) - 4.0] {
                let w = RadialWeight::new(n, p, 1.0, None, None)?;
                let sol = resolve_radial_f(&w)?;
                let residual = sol.max_residual(1e-3, 1e3, 4001);
                let target = w.phi_inf / w.gamma.abs();
                let raw = sol.f_at_max();
                let pole = sol.pole_exponent(1e-6, 1e-3, 200);
                let pole_target = n as f64 * w.gamma.abs();
                let grid = SphereGrid::new(n, if n == 1 { 512 } else { 32 })?;
                let kf = k_f_match(&sol, &grid);
                let cert = certify_insolvability(&sol, p, &radial_field(n), &grid)?;
                let pass = residual <= 1e-8
                    && (sol.limit - target).abs() <= 1e-4
                    && (pole - pole_target).abs() <= 1e-3
                    && kf <= 1e-7;
                ok &= pass;
                rows.push(json!({
                    "n": n, "p": p, "gamma": w.gamma, "beta0": w.beta0,
                    "ode_residual": residual,
                    "limit_extrapolated": sol.limit, "f_at_1e6": raw, "limit_target": target,
                    "pole_exponent": pole, "pole_target": pole_target,
                    "k_f_match": kf, "certificate": cert,
                }));
            }
        }
        // the certificate fraction is reported, not required: with φ ~ r^k near the poles a
        // few nodes sit above −1e−6 when k is large
        Ok((ok, "four (n, p) cases".into(), json!({ "cases": rows })))
    })
}

/// ξ = the lowest symmetric harmonic: cos 3θ on the circle, the simplex cubic on S².
pub fn degree_three_mode(n: usize) -> Result<SupportFunction> {
    let basis = if n == 1 {
        Basis { n, functions: vec![BasisFunction::Fourier { k: 3, a: 1.0, b: 0.0 }] }
    } else {
        let h = build_h_simplex(&SimplexFrame::regular(n)?);
        let grid = SphereGrid::new(n, 32)?;
        let rms = (grid.integrate_fn(|x| h.eval(x).powi(2)) / sphere_area(n)).sqrt();
        Basis { n, functions: vec![BasisFunction::Poly(h.scale(&(1.0 / rms)))] }
    };
    SupportFunction::spectral(Arc::new(basis), vec![1.0])
}

/// Second-variation sign law and the finite-difference comparison.
pub fn criterion_6() -> Criterion {
    guarded!(6, "Second-variation threshold", {
        let mut signs_ok = true;
        let mut fd_ok = true;
        let mut expanded_ok = true;
        let mut rows = Vec::new();
        for (n, p_fd) in [(1usize, -8.0), (2, -10.0)] {
            let pn = instability_threshold(n)?;
            let xi = degree_three_mode(n)?;
            let grid = SphereGrid::new(n, if n == 1 { 512 } else { 64 })?;
            let below = second_variation_formula(&xi, pn - 0.1, &grid);
            let above = second_variation_formula(&xi, pn + 0.1, &grid);
            signs_ok &= below < 0.0 && above > 0.0;
            let fd = second_variation_fd(&xi, p_fd, &grid, &[1e-2, 5e-3])?;
            let formula = second_variation_formula(&xi, p_fd, &grid);
            let expanded = second_variation_expanded(&xi, p_fd, &grid);
            let rel = (fd - formula).abs() / formula.abs();
            let rel_expanded = (fd - expanded).abs() / expanded.abs();
            fd_ok &= rel <= 1e-3;
            expanded_ok &= rel_expanded <= 1e-3;
            rows.push(json!({
                "n": n, "threshold": pn, "below": below, "above": above, "p_fd": p_fd,
                "finite_difference": fd, "formula": formula, "relative_error": rel,
                "formula_over_fd": formula / fd,
                "expanded_n_plus_1": expanded, "relative_error_expanded": rel_expanded,
            }));
        }
        let summary = format!(
            "sign law {}, FD vs (n+2) form {}, FD vs (n+1) form {}",
            if signs_ok { "holds" } else { "fails" },
            if fd_ok { "matches" } else { "off by (n+2)/(n+1)" },
            if expanded_ok { "matches" } else { "differs" },
        );
        Ok((signs_ok && fd_ok, summary, json!({ "cases": rows, "sign_law": signs_ok, "fd_matches_expanded": expanded_ok })))
    })
}

/// Bifurcation of 2π/3-periodic solutions at p = −7.
pub fn criterion_7() -> Criterion {
    guarded!(7, "Bifurcation at −7", {
        let b = bifurcation(-8.0, -6.0, 2e-4)?;
        let at8 = find_symmetric_solution(-8.0)?;
        let at6 = find_symmetric_solution(-6.0)?;
        let residual = match &at8 {
            Some(sol) => Some(ma_residual(&sol.to_support()?, |_| 1.0, -8.0, &SphereGrid::new(1, 512)?)?),
            None => None,
        };
        let ok = (b.threshold + 7.0).abs() <= 1e-3
            && residual.is_some_and(|r| r < 1e-8)
            && at8.as_ref().is_some_and(|s| s.amplitude() > 1e-3)
            && at6.is_none();
        Ok((
            ok,
            format!("threshold {:.5}", b.threshold),
            json!({
                "bifurcation": b,
                "p_minus_8": at8.as_ref().map(|s| json!({ "h0": s.h0, "h_min": s.h_min, "ma_residual": residual, "energy_drift": s.energy_drift })),
                "p_minus_6_none": at6.is_none(),
            }),
        ))
    })
}

/// Degree used for the n = 1 minimizer in the acceptance runs.
pub const CIRCLE_DEGREE: u32 = 60;

/// Non-constant minimizers at n = 1 and n = 2.
pub fn criterion_8() -> Criterion {
    guarded!(8, "Non-uniqueness construction", {
        let start = Instant::now();
        let prob = VariationalProblem::with_defaults(1, -8.0, CIRCLE_DEGREE)?;
        let cp = prob.minimize(0.05)?;
        let oracle = find_symmetric_solution(-8.0)?;
        let cv = cross_validate(&cp.support()?, -8.0, -8.0, oracle.as_ref())?;
        let margin = -2.0 * PI - cp.objective;
        let circle_ok = margin > 1e-4 && cp.el_residual < 1e-6 && cv.passed && cp.margin_ok;

        let check = SphereGrid::new(2, 64)?;
        let audit_grid = SphereGrid::new(2, 96)?;
        let mut sphere_rows = Vec::new();
        let mut residuals = Vec::new();
        let mut sphere_ok = true;
        let mut audit_worst: f64 = 0.0;
        for l in [6u32, 10, 14] {
            let prob = VariationalProblem::with_defaults(2, -10.0, l)?;
            let cp2 = prob.minimize(0.05)?;
            let el = cp2.el_residual_on(&check)?;
            residuals.push(el);
            sphere_ok &= cp2.objective < -4.0 * PI && cp2.non_constancy > 1e-3 && cp2.margin_ok;
            if l == 14 {
                let u = cp2.support()?;
                for pf in ProjectiveField::seeded(2, 5, 99) {
                    let v = identity_integral(&Constant(cp2.lambda), &u, -10.0, &pf, &audit_grid)?;
                    audit_worst = audit_worst.max(v.abs());
                }
            }
            sphere_rows.push(json!({
                "L": l, "objective": cp2.objective, "lambda": cp2.lambda, "el_residual": el,
                "non_constancy": cp2.non_constancy, "iterations": cp2.iterations,
                "min_eigenvalue": cp2.min_eigenvalue, "bound": cp2.bound,
            }));
        }
        let monotone = residuals.windows(2).all(|w| w[1] < w[0]);
        sphere_ok &= monotone && audit_worst <= 1e-6;
        let secs = start.elapsed().as_secs_f64();
        let ok = circle_ok && sphere_ok && secs < 600.0;
        Ok((
            ok,
            format!(
                "n=1: I margin {margin:.3e}, EL {:.1e}, oracle distance {:.1e}; n=2: EL {} at L = 6, 10, 14",
                cp.el_residual,
                cv.distance.unwrap_or(f64::NAN),
                residuals.iter().map(|r| format!("{r:.2e}")).collect::<Vec<_>>().join(" → ")
            ),
            json!({
                "circle": {
                    "objective": cp.objective, "margin": margin, "lambda": cp.lambda,
                    "el_residual": cp.el_residual, "non_constancy": cp.non_constancy,
                    "iterations": cp.iterations, "cross_validation": cv, "bound": cp.bound,
                },
                "sphere": sphere_rows,
                "el_monotone": monotone,
                "identity_audit_worst": audit_worst,
                "note": "for symmetric u and constant f the audit integral vanishes by symmetry alone",
                "seconds": secs,
            }),
        ))
    })
}

/// The constant is recovered for p above the threshold.
pub fn criterion_9() -> Criterion {
    guarded!(9, "Stability side-check", {
        let prob = VariationalProblem::with_defaults(1, -6.0, CIRCLE_DEGREE)?;
        let cp = prob.minimize(0.05)?;
        let ok = cp.non_constancy < 1e-6;
        Ok((
            ok,
            format!("non-constancy {:.1e} after {} iterations", cp.non_constancy, cp.iterations),
            json!({ "non_constancy": cp.non_constancy, "objective": cp.objective, "iterations": cp.iterations }),
        ))
    })
}

/// Largest quadrature error over exactly-integrable test functions.
pub fn quadrature_exactness() -> Result<f64> {
    let mut worst: f64 = 0.0;
    let n1 = SphereGrid::new(1, 64)?;
    for k in 0..64u32 {
        let got = n1.integrate_fn(|x| (f64::from(k) * x[1].atan2(x[0])).cos());
        let want = if k == 0 { 2.0 * PI } else { 0.0 };
        worst = worst.max((got - want).abs());
    }
    let res = 16;
    let n2 = SphereGrid::new(2, res)?;
    for a in 0..=(2 * res as u32 - 1) {
        for b in 0..=(2 * res as u32 - 1 - a) {
            for c in 0..=(2 * res as u32 - 1 - a - b) {
                let alpha = vec![a, b, c];
                let got = n2.integrate_fn(|x| x[0].powi(a as i32) * x[1].powi(b as i32) * x[2].powi(c as i32));
                let want = sphere_monomial_mean(&alpha)
                    .map(|m| crate::spectral::rational_value(&m) * 4.0 * PI)
                    .unwrap_or(0.0);
                worst = worst.max((got - want).abs());
            }
        }
    }
    let (x, w) = gauss_legendre(20);
    let poly_err = (x.iter().zip(&w).map(|(x, w)| w * x.powi(38)).sum::<f64>() - 2.0 / 39.0).abs();
    Ok(worst.max(poly_err))
}

/// Quadrature exactness, gradient validation and worker-count determinism.
pub fn criterion_10() -> Criterion {
    guarded!(10, "Infrastructure properties", {
        let quad = quadrature_exactness()?;
        let mut grad_worst: f64 = 0.0;
        for (n, p, l) in [(1usize, -8.0, 12u32), (2, -10.0, 8)] {
            let prob = VariationalProblem::with_defaults(n, p, l)?;
            grad_worst = grad_worst.max(prob.check_gradient(&prob.seed(0.05)?)?);
        }
        let run = |threads: usize| -> Result<String> {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| crate::Error::Construction(e.to_string()))?;
            pool.install(|| {
                let prob = VariationalProblem::with_defaults(1, -8.0, 24)?;
                let cp = prob.minimize(0.05)?;
                Ok(to_json_string(&serde_json::to_value(&cp).unwrap_or(Value::Null)))
            })
        };
        let one = run(1)?;
        let four = run(4)?;
        let deterministic = one == four;
        let ok = quad <= 1e-13 && grad_worst <= 1e-6 && deterministic;
        Ok((
            ok,
            format!("quadrature {quad:.1e}, gradient {grad_worst:.1e}, deterministic {deterministic}"),
            json!({ "quadrature_error": quad, "gradient_relative_error": grad_worst, "deterministic": deterministic }),
        ))
    })
}

pub fn all_criteria() -> Vec<Criterion> {
    vec![
        criterion_1(),
        criterion_2(),
        criterion_3(),
        criterion_4(),
        criterion_5(),
        criterion_6(),
        criterion_7(),
        criterion_8(),
        criterion_9(),
        criterion_10(),
    ]
}

/// JSON with every float written to 17 significant digits and keys in sorted order.
pub fn to_json_string(value: &Value) -> String {
    let mut out = String::new();
    write_value(&mut out, value, 0);
    out.push('\n');
    out
}

fn write_value(out: &mut String, value: &Value, indent: usize) {
    let pad = |k: usize| "  ".repeat(k);
    match value {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(num) => {
            if let Some(i) = num.as_i64() {
                let _ = write!(out, "{i}");
            } else if let Some(u) = num.as_u64() {
                let _ = write!(out, "{u}");
            } else {
                out.push_str(&format_float(num.as_f64().unwrap_or(f64::NAN)));
            }
        }
        Value::String(s) => out.push_str(&serde_json::to_string(s).unwrap_or_default()),
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            out.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                write_value(out, item, indent + 1);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            out.push_str("{\n");
            for (i, (k, v)) in map.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                out.push_str(&serde_json::to_string(k).unwrap_or_default());
                out.push_str(": ");
                write_value(out, v, indent + 1);
                out.push_str(if i + 1 < map.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push('}');
        }
    }
}

/// 17 significant digits in exponent form; non-finite values become null.
pub fn format_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        "null".into()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_round_trips() {
        for v in [0.1, -2.0 * PI, 1e-300, 123456.789] {
            let s = format_float(v);
            assert_eq!(s.parse::<f64>().unwrap(), v);
        }
        assert_eq!(format_float(f64::NAN), "null");
        let text = to_json_string(&json!({ "a": 1, "b": [0.5, true], "c": "x" }));
        let back: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(back["b"][0], 0.5);
        assert_eq!(back["a"], 1);
    }

    #[test]
    fn quadrature_is_exact() {
        assert!(quadrature_exactness().unwrap() < 1e-13);
    }
}
