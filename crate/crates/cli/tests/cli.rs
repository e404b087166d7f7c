use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

fn shtest(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_shtest")).args(args).output().expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("valid json")
}

fn write_config(dir: &tempfile::TempDir, name: &str, body: &str) -> String {
    let path = dir.path().join(name);
    fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn limits_reference_caps() {
    let v = stdout_json(&shtest(&["limits"]));
    assert!((v["m_minus_2n_C"].as_f64().unwrap() - 1.5987).abs() < 1e-3);
    assert!((v["mC"].as_f64().unwrap() - 2.8777).abs() < 1e-3);
    assert_eq!(v["symmetric"], false);
}

#[test]
fn limits_gaussian_is_symmetric_and_saturated_shape_has_no_security() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        &dir,
        "g.json",
        r#"{"pair":{"kind":"gaussian_shift","a":1.0,"vbar":0.0,"sigma":1.0},"shape":{"m":4,"n":2}}"#,
    );
    let v = stdout_json(&shtest(&["limits", "--config", &cfg]));
    assert_eq!(v["symmetric"], true);
    assert_eq!(v["m_minus_2n_C"].as_f64().unwrap(), 0.0);
}

#[test]
fn limits_csv_rate_table() {
    let out = shtest(&["limits", "--format", "csv", "--points", "11"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,I0,I1"));
    assert_eq!(lines.count(), 11);
}

#[test]
fn region_csv_shape() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let out = shtest(&["region", "--points", "100", "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success());
    let text = fs::read_to_string(out_dir.join("region.csv")).unwrap();
    let rows: Vec<Vec<String>> = text.lines().skip(1).map(|l| l.split(',').map(String::from).collect()).collect();
    assert_eq!(rows.len(), 100);
    let first_h_e: f64 = rows[0][1].parse().unwrap();
    assert!((first_h_e - 2.8777).abs() < 1e-3);
    let h_e: Vec<f64> = rows.iter().filter_map(|r| r[1].parse().ok()).collect();
    assert!(h_e.windows(2).all(|w| w[1] <= w[0] + 1e-12));
}

#[test]
fn simulate_writes_csv_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        &dir,
        "s.json",
        r#"{
            "pair": {"kind": "bernoulli", "p0": 0.02, "p1": 0.6},
            "shape": {"m": 9, "n": 2},
            "detector": {"kind": "bayes"},
            "horizon": 8,
            "trials": 2000,
            "master_seed": 3,
            "sampler": {"kind": "tilted", "w": "auto"}
        }"#,
    );
    let out_dir = dir.path().join("run");
    let out = shtest(&["simulate", "--config", &cfg, "--out", out_dir.to_str().unwrap(), "--seed", "11"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(out_dir.join("estimate.csv")).unwrap();
    assert!(csv.starts_with("k,p_err0,se0,p_err1,se1,worst"));
    assert_eq!(csv.lines().count(), 9);
    let summary: Value = serde_json::from_str(&fs::read_to_string(out_dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["seed"], 11);
    assert_eq!(summary["config_echo"]["master_seed"], 11);
    assert!(summary["fitted_exponent"].as_f64().is_some());
}

#[test]
fn simulate_is_deterministic_given_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        &dir,
        "s.json",
        r#"{"pair":{"kind":"bernoulli","p0":0.1,"p1":0.5},"shape":{"m":3,"n":1},
            "detector":{"kind":"secure","z_s":0.1},"attack":{"kind":"flip"},"horizon":6,"trials":500}"#,
    );
    let a = shtest(&["simulate", "--config", &cfg, "--seed", "5", "--format", "json"]);
    let b = shtest(&["simulate", "--config", &cfg, "--seed", "5", "--format", "json"]);
    assert_eq!(stdout_json(&a), stdout_json(&b));
}

#[test]
fn config_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(&dir, "bad.json", r#"{"pair":{"kind":"bernoulli","p0":0.7,"p1":0.7},"shape":{"m":3,"n":1}}"#);
    assert_eq!(shtest(&["limits", "--config", &bad]).status.code(), Some(2));
    assert_eq!(shtest(&["simulate"]).status.code(), Some(2));
    let missing = dir.path().join("nope.json");
    assert_eq!(shtest(&["limits", "--config", missing.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(shtest(&["reproduce", "table9"]).status.code(), Some(2));
}

#[test]
fn unfittable_exponent_is_not_an_error_but_explicit_window_is_checked() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        &dir,
        "s.json",
        r#"{"pair":{"kind":"bernoulli","p0":0.02,"p1":0.6},"shape":{"m":9,"n":2},
            "detector":{"kind":"bayes"},"horizon":3,"trials":10,"fit_window":[1,9]}"#,
    );
    assert_eq!(shtest(&["simulate", "--config", &cfg]).status.code(), Some(2));
    let short = write_config(
        &dir,
        "short.json",
        r#"{"pair":{"kind":"bernoulli","p0":0.02,"p1":0.6},"shape":{"m":9,"n":2},
            "detector":{"kind":"bayes"},"horizon":3,"trials":10}"#,
    );
    let v = stdout_json(&shtest(&["simulate", "--config", &short, "--format", "json"]));
    assert!(v["fitted_exponent"].is_null());
    assert!(v["fit_error"].as_str().unwrap().contains("insufficient"));
}

#[test]
fn reproduce_fig2_and_small_fig4() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("repro");
    let o = out_dir.to_str().unwrap();
    assert!(shtest(&["reproduce", "fig2", "--points", "50", "--out", o]).status.success());
    let fig2 = fs::read_to_string(out_dir.join("fig2.csv")).unwrap();
    assert_eq!(fig2.lines().count(), 51);
    let out = shtest(&["reproduce", "fig4", "--trials", "300", "--horizon", "6", "--out", o]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let fig4 = fs::read_to_string(out_dir.join("fig4.csv")).unwrap();
    assert_eq!(fig4.lines().count(), 1 + 2 * 6);
    assert!(fig4.contains("naive_bayes,") && fig4.contains("secure_z1.4282,"));
}

#[test]
fn reproduce_table1_small_budget_json() {
    let v = stdout_json(&shtest(&["reproduce", "table1", "--trials", "200", "--horizon", "10", "--format", "json"]));
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[2]["detector"], "q_out_of_m");
    assert_eq!(v["budget"]["trials"], 200);
}

#[test]
fn simulate_accepts_a_mixture_sampler() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        &dir,
        "mix.json",
        r#"{"pair":{"kind":"bernoulli","p0":0.02,"p1":0.6},"shape":{"m":9,"n":2},
            "detector":{"kind":"secure","z_s":1.4282},"attack":{"kind":"rate_target","z_s":1.4282},
            "horizon":10,"trials":2000,
            "sampler":{"kind":"mixture","components":[{"w":0.0,"subset":0},{"w":{"theta0":0.6,"theta1":0.6},"subset":3},{"subset":7}]}}"#,
    );
    let v = stdout_json(&shtest(&["simulate", "--config", &cfg, "--format", "json"]));
    assert_eq!(v["records"].as_array().unwrap().len(), 10);
    assert_eq!(v["config_echo"]["sampler"]["components"][2]["w"], "auto");
    let empty = write_config(
        &dir,
        "empty.json",
        r#"{"pair":{"kind":"bernoulli","p0":0.02,"p1":0.6},"shape":{"m":9,"n":2},
            "detector":{"kind":"bayes"},"horizon":4,"trials":10,"sampler":{"kind":"mixture","components":[]}}"#,
    );
    assert_eq!(shtest(&["simulate", "--config", &empty]).status.code(), Some(2));
}
