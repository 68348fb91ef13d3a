use lpm_core::counterexample::{
    certify_insolvability, critical_certificate_field, critical_f, radial_field, resolve_radial_f, RadialWeight,
};
use lpm_core::oracle::{bifurcation, find_symmetric_solution, scan_period, small_amplitude_period, TARGET_PERIOD};
use lpm_core::pohozaev::{identity_integral, ProjectiveField};
use lpm_core::report::{all_criteria, degree_three_mode, format_float};
use lpm_core::spectral::lambda1;
use lpm_core::sphere::SphereGrid;
use lpm_core::support::{Constant, SphereFunction, SupportFunction};
use lpm_core::symmetry::{SimplexFrame, SymmetryGroup};
use lpm_core::variational::{
    default_resolution, instability_threshold, second_variation_expanded, second_variation_fd,
    second_variation_formula, OptimizerSettings, VariationalProblem, DEFAULT_MARGIN,
};
use serde_json::{json, Value};

use crate::config::{Command, Mode, RunConfig};
use crate::CliError;

/// The result of one subcommand: JSON payload, CSV tables and whether every check passed.
pub struct Output {
    pub result: Value,
    pub tables: Vec<Table>,
    pub passed: bool,
}

pub struct Table {
    pub name: String,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn to_csv(&self) -> Result<String, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).map_err(|e| CliError::Output(e.to_string()))?;
        for row in &self.rows {
            w.write_record(row.iter().map(|v| format_float(*v))).map_err(|e| CliError::Output(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Output(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| CliError::Output(e.to_string()))
    }
}

fn ok(result: Value) -> Output {
    Output { result, tables: Vec::new(), passed: true }
}

fn require<T>(v: Option<T>, name: &str, cmd: Command) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::Validation(format!("{} needs --{name}", cmd.name())))
}

pub fn run(cmd: Command, cfg: &RunConfig) -> Result<Output, CliError> {
    match cmd {
        Command::Eigen => eigen(cfg),
        Command::VerifyPohozaev => verify_pohozaev(cfg),
        Command::BuildCounterexample => build_counterexample(cfg),
        Command::SecondVariation => second_variation(cfg),
        Command::Minimize => minimize(cfg),
        Command::Oracle => oracle(cfg),
        Command::Bifurcation => bifurcate(cfg),
        Command::Report => report(),
    }
}

fn eigen(cfg: &RunConfig) -> Result<Output, CliError> {
    let n = cfg.n_or(2);
    let mu_max = cfg.mu_max.unwrap_or(8);
    if !(1..=8).contains(&mu_max) {
        return Err(CliError::Validation(format!("mu-max {mu_max} outside 1..=8")));
    }
    let special = cfg.mode.unwrap_or(Mode::Special) == Mode::Special;
    let group = SymmetryGroup::build(&SimplexFrame::regular(n)?, special)?;
    let pc = lambda1(n, &group, mu_max)?;
    Ok(ok(json!({
        "n": n,
        "group_order": group.order(),
        "mu1": pc.mu1,
        "lambda1": pc.lambda1,
        "dims_by_degree": pc.dims_by_degree,
        "exact": pc.exact,
    })))
}

fn verify_pohozaev(cfg: &RunConfig) -> Result<Output, CliError> {
    let n = cfg.n_or(1);
    let p = cfg.p.unwrap_or(-2.0);
    let res = cfg.resolution.unwrap_or(if n == 1 { 512 } else { 64 });
    let grid = SphereGrid::new(n, res)?;
    let fields = ProjectiveField::seeded(n, 10, cfg.seed.unwrap_or(20_241_015));
    // exact solutions with f ≡ 1: the constant always, ellipses with ab = 1 at n = 1, p = −2
    let mut cases: Vec<(String, SupportFunction)> = vec![("constant".into(), SupportFunction::constant(n, 1.0))];
    if n == 1 && p == -2.0 {
        for a in [1.1, 1.3, 2.0] {
            cases.push((format!("ellipse a={a}"), SupportFunction::ellipse(a, 1.0 / a)?));
        }
    }
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    let mut table = Table { name: "identity".into(), header: vec!["case", "field", "integral"], rows: Vec::new() };
    for (ci, (name, h)) in cases.iter().enumerate() {
        let values: Vec<f64> = fields
            .iter()
            .map(|pf| identity_integral(&Constant(1.0), h, p, pf, &grid))
            .collect::<Result<_, _>>()?;
        for (fi, v) in values.iter().enumerate() {
            table.rows.push(vec![ci as f64, fi as f64, *v]);
            worst = worst.max(v.abs());
        }
        rows.push(json!({ "case": name, "integrals": values }));
    }
    let passed = worst <= 1e-8;
    Ok(Output {
        result: json!({ "n": n, "p": p, "resolution": res, "cases": rows, "worst": worst, "passed": passed }),
        tables: vec![table],
        passed,
    })
}

fn build_counterexample(cfg: &RunConfig) -> Result<Output, CliError> {
    let n = cfg.n_or(1);
    let critical = -(n as f64) - 1.0;
    let p = cfg.p.unwrap_or(critical - 1.0);
    let res = cfg.resolution.unwrap_or(if n == 1 { 512 } else { 32 });
    let grid = SphereGrid::new(n, res)?;
    if p == critical {
        let f = critical_f(cfg.d.unwrap_or(4.0), cfg.c.unwrap_or(1.0))?;
        let cert = certify_insolvability(&f, p, &critical_certificate_field(n, f.d), &grid)?;
        let rows = grid.nodes.iter().map(|x| vec![x[n], f.value(x)]).collect();
        return Ok(Output {
            passed: cert.passed,
            result: json!({ "kind": "critical", "n": n, "p": p, "d": f.d, "c": f.c, "certificate": cert }),
            tables: vec![Table { name: "weight".into(), header: vec!["x_last", "f"], rows }],
        });
    }
    let phi_inf = cfg.phi_inf.unwrap_or(1.0);
    let w = RadialWeight::new(n, p, phi_inf, cfg.phi_k, cfg.beta0)?;
    let sol = resolve_radial_f(&w)?;
    let cert = certify_insolvability(&sol, p, &radial_field(n), &grid)?;
    let rows = (0..=240)
        .map(|i| {
            let r = 10f64.powf(-6.0 + 12.0 * f64::from(i) / 240.0);
            let f = sol.f(r);
            vec![r, w.phi(r), f, w.ode_residual(r, f, sol.r_fprime(r))]
        })
        .collect();
    let residual = sol.max_residual(1e-3, 1e3, 4001);
    Ok(Output {
        passed: cert.passed,
        result: json!({
            "kind": "radial",
            "weight": w,
            "ode_residual": residual,
            "limit_extrapolated": sol.limit,
            "f_at_r_max": sol.f_at_max(),
            "limit_target": phi_inf / w.gamma.abs(),
            "pole_exponent": sol.pole_exponent(1e-6, 1e-3, 200),
            "pole_target": n as f64 * w.gamma.abs(),
            "certificate": cert,
        }),
        tables: vec![Table { name: "profile".into(), header: vec!["r", "phi", "f", "residual"], rows }],
    })
}

fn second_variation(cfg: &RunConfig) -> Result<Output, CliError> {
    let n = cfg.n_or(1);
    let threshold = instability_threshold(n)?;
    let p = cfg.p.unwrap_or(threshold - 1.0);
    let res = cfg.resolution.unwrap_or(if n == 1 { 512 } else { 64 });
    let grid = SphereGrid::new(n, res)?;
    let xi = degree_three_mode(n)?;
    let formula = second_variation_formula(&xi, p, &grid);
    let expanded = second_variation_expanded(&xi, p, &grid);
    let fd = second_variation_fd(&xi, p, &grid, &[1e-2, 5e-3])?;
    Ok(ok(json!({
        "n": n,
        "p": p,
        "threshold": threshold,
        "formula": formula,
        "expanded": expanded,
        "finite_difference": fd,
        "relative_error_formula": (fd - formula).abs() / formula.abs(),
        "relative_error_expanded": (fd - expanded).abs() / expanded.abs(),
    })))
}

fn minimize(cfg: &RunConfig) -> Result<Output, CliError> {
    let n = cfg.n_or(1);
    let p = require(cfg.p, "p", Command::Minimize)?;
    let l = cfg.l.unwrap_or(if n == 1 { 60 } else { 10 });
    let res = cfg.resolution.unwrap_or_else(|| default_resolution(n, l));
    let mut settings = OptimizerSettings::default();
    if let Some(tol) = cfg.tol {
        settings.tol = tol;
    }
    if let Some(m) = cfg.max_iter {
        settings.max_iter = m;
    }
    let special = cfg.mode.unwrap_or(Mode::Full) == Mode::Special;
    let prob = VariationalProblem::new(n, p, l, res, special, DEFAULT_MARGIN, settings)?;
    let cp = prob.minimize(cfg.seed_amplitude.unwrap_or(0.05))?;
    let u = cp.support()?;
    let data = u.nodal(&prob.grid)?;
    let rows = prob
        .grid
        .nodes
        .iter()
        .zip(&data.values)
        .map(|(x, v)| {
            let mut row = if n == 1 { vec![x[1].atan2(x[0])] } else { x.clone() };
            row.push(*v);
            row
        })
        .collect();
    let header = if n == 1 { vec!["theta", "u"] } else { vec!["x", "y", "z", "u"] };
    let reference = -(n as f64 + 1.0) * lpm_core::support::unit_ball_volume(n);
    Ok(Output {
        passed: true,
        result: json!({
            "critical_point": cp,
            "constant_objective": reference,
            "below_constant": cp.objective < reference,
        }),
        tables: vec![Table { name: "solution".into(), header, rows }],
    })
}

fn oracle(cfg: &RunConfig) -> Result<Output, CliError> {
    let mut exponents = Vec::new();
    if let Some([lo, hi]) = cfg.scan {
        for i in 0..=20 {
            exponents.push(lo + (hi - lo) * f64::from(i) / 20.0);
        }
    } else {
        exponents.push(require(cfg.p, "p", Command::Oracle)?);
    }
    let mut periods = Table { name: "periods".into(), header: vec!["p", "h0", "period"], rows: Vec::new() };
    let mut found = Table { name: "existence".into(), header: vec!["p", "exists", "h0", "amplitude"], rows: Vec::new() };
    let mut results = Vec::new();
    for &p in &exponents {
        let scan = scan_period(p)?;
        for (h0, t) in &scan.samples {
            periods.rows.push(vec![p, *h0, *t]);
        }
        let sol = find_symmetric_solution(p)?;
        found.rows.push(match &sol {
            Some(s) => vec![p, 1.0, s.h0, s.amplitude()],
            None => vec![p, 0.0, f64::NAN, 0.0],
        });
        let solution = if exponents.len() == 1 {
            sol.as_ref().map(|s| serde_json::to_value(s).unwrap_or(Value::Null))
        } else {
            sol.as_ref().map(|s| json!({ "h0": s.h0, "h_min": s.h_min, "amplitude": s.amplitude() }))
        };
        results.push(json!({
            "p": p,
            "small_amplitude_period": small_amplitude_period(p),
            "target_period": TARGET_PERIOD,
            "monotone": scan.monotone,
            "solution": solution,
        }));
    }
    Ok(Output { result: json!({ "runs": results }), tables: vec![periods, found], passed: true })
}

fn bifurcate(cfg: &RunConfig) -> Result<Output, CliError> {
    let [lo, hi] = cfg.scan.unwrap_or([-8.0, -6.0]);
    let tol = cfg.tol.unwrap_or(1e-4);
    let b = bifurcation(lo, hi, tol)?;
    Ok(ok(json!({
        "threshold": b.threshold,
        "bracket": [b.bracket.0, b.bracket.1],
        "iterations": b.iterations,
        "tolerance": tol,
        "distance_to_minus_seven": (b.threshold + 7.0).abs(),
        "target_period": TARGET_PERIOD,
    })))
}

fn report() -> Result<Output, CliError> {
    let criteria = all_criteria();
    for c in &criteria {
        eprintln!("{}", c.line());
    }
    let passed = criteria.iter().all(|c| c.passed);
    let rows = criteria.iter().map(|c| vec![f64::from(c.id), f64::from(u8::from(c.passed)), c.seconds]).collect();
    Ok(Output {
        result: json!({
            "passed": criteria.iter().filter(|c| c.passed).count(),
            "failed": criteria.iter().filter(|c| !c.passed).count(),
            "criteria": criteria,
        }),
        tables: vec![Table { name: "summary".into(), header: vec!["criterion", "passed", "seconds"], rows }],
        passed,
    })
}
