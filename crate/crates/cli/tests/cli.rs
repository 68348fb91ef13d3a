use std::process::{Command, Output};

use serde_json::Value;

fn lpm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lpm")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn num(v: &Value) -> f64 {
    v.as_f64().expect("number")
}

#[test]
fn no_arguments_prints_usage_and_fails() {
    let out = lpm(&[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn help_and_version_succeed() {
    assert_eq!(lpm(&["--help"]).status.code(), Some(0));
    assert_eq!(lpm(&["--version"]).status.code(), Some(0));
}

#[test]
fn invalid_inputs_exit_with_one() {
    for args in [
        &["eigen", "--n", "0"][..],
        &["oracle", "--p", "3"],
        &["oracle"],
        &["eigen", "--p", "abc"],
        &["bifurcation", "--scan", "-6", "-8"],
        &["unknown-command"],
    ] {
        let out = lpm(args);
        assert_eq!(out.status.code(), Some(1), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(out.stdout.is_empty(), "{args:?} wrote to stdout");
    }
}

#[test]
fn eigen_reports_twelve_for_the_tetrahedral_group() {
    let out = lpm(&["eigen", "--n", "2"]);
    assert!(out.status.success());
    let doc = json(&out);
    assert_eq!(doc["schema_version"], 1);
    assert_eq!(doc["subcommand"], "eigen");
    assert_eq!(num(&doc["result"]["lambda1"]), 12.0);
    assert_eq!(doc["result"]["mu1"], 3);
}

#[test]
fn bifurcation_locates_minus_seven() {
    let out = lpm(&["bifurcation", "--tol", "1e-3"]);
    assert!(out.status.success());
    let t = num(&json(&out)["result"]["threshold"]);
    assert!((t + 7.0).abs() < 2e-3, "threshold {t}");
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.json");
    std::fs::write(&path, r#"{"subcommand": "eigen", "n": 1, "mu_max": 6}"#).unwrap();
    let p = path.to_str().unwrap();

    let from_file = json(&lpm(&["--config", p]));
    assert_eq!(from_file["config"]["n"], 1);
    assert_eq!(num(&from_file["result"]["lambda1"]), 9.0);

    let overridden = json(&lpm(&["--config", p, "--n", "2"]));
    assert_eq!(overridden["config"]["n"], 2);
    assert_eq!(overridden["config"]["mu_max"], 6);
    assert_eq!(num(&overridden["result"]["lambda1"]), 12.0);
}

#[test]
fn config_without_subcommand_or_with_unknown_keys_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    for (name, text) in [("empty.json", "{}"), ("typo.json", r#"{"subcommand": "eigen", "nn": 2}"#)] {
        let path = dir.path().join(name);
        std::fs::write(&path, text).unwrap();
        let out = lpm(&["--config", path.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(1), "{name}");
    }
}

#[test]
fn output_is_identical_across_worker_counts() {
    for args in [
        &["verify-pohozaev", "--n", "1", "--p", "-2"][..],
        &["build-counterexample", "--n", "1", "--p", "-4"],
        &["minimize", "--n", "1", "--p", "-8", "--L", "12", "--tol", "1e-9"],
    ] {
        let one = lpm(&[args, &["--workers", "1"]].concat());
        let four = lpm(&[args, &["--workers", "4"]].concat());
        assert!(one.status.success(), "{args:?}: {}", String::from_utf8_lossy(&one.stderr));
        assert_eq!(one.stdout, four.stdout, "{args:?}");
    }
}

#[test]
fn out_directory_receives_json_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = lpm(&["oracle", "--p", "-8", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success());
    let written = std::fs::read(dir.path().join("oracle.json")).unwrap();
    assert_eq!(written, out.stdout);
    let mut reader = csv::Reader::from_path(dir.path().join("oracle_periods.csv")).unwrap();
    assert_eq!(reader.headers().unwrap(), vec!["p", "h0", "period"]);
    let rows: Vec<Vec<f64>> = reader
        .records()
        .map(|r| r.unwrap().iter().map(|v| v.parse().unwrap()).collect())
        .collect();
    assert!(rows.len() > 10);
    // the period grows with the amplitude
    assert!(rows.windows(2).all(|w| w[1][2] >= w[0][2]));
}

#[test]
fn second_variation_agrees_with_finite_differences() {
    let doc = json(&lpm(&["second-variation", "--n", "1", "--p", "-8"]));
    let r = &doc["result"];
    assert!(num(&r["relative_error_expanded"]) < 1e-4);
    assert!(num(&r["formula"]) < 0.0 && num(&r["finite_difference"]) < 0.0);
}

#[test]
fn critical_counterexample_certificate_passes() {
    let out = lpm(&["build-counterexample", "--n", "2", "--p", "-3", "--d", "2", "--c", "0.5"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let cert = &json(&out)["result"]["certificate"];
    assert_eq!(cert["passed"], true);
    assert!(num(&cert["max_k_f"]) <= 1e-9);
}
