use std::process::{Command, Output};

use serde_json::Value;

fn finsler(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_finsler"))
        .args(args)
        .env_remove("FINSLER_TOL")
        .output()
        .expect("binary runs")
}

fn json_result(out: &Output) -> Value {
    let v: Value = serde_json::from_slice(&out.stdout).expect("stdout is JSON");
    assert_eq!(v["schema"], 1);
    v["result"].clone()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn classify_landsberg_member_on_standard_fixture() {
    let out = finsler(&["classify", "--phi", "shen_landsberg", "--params", r#"{"c1":1,"c2":0.5}"#]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let r = json_result(&out);
    assert_eq!(r["kind"], "SigmaTCondition");
    assert_eq!(r["grid"].as_array().unwrap().len(), 33);
}

#[test]
fn classify_berwald_member_reports_fitted_constant() {
    let out = finsler(&["classify", "--phi", "ShenBerwald", "--params", r#"{"c":2}"#, "--fixture", "unit_b"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let r = json_result(&out);
    assert_eq!(r["kind"], "TCondition");
    let c = r["t_condition"]["fit"]["c"].as_f64().unwrap();
    assert!((c - 2.0).abs() < 1e-6, "{c}");
}

#[test]
fn verify_randers_matches_oracle() {
    let out = finsler(&["verify", "--phi", "randers"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let r = json_result(&out);
    assert!(r["max_rel"].as_f64().unwrap() <= 1e-9);
    assert_eq!(r["passed"], true);
    // fixture y plus eight seeded directions
    assert_eq!(r["points"].as_array().unwrap().len(), 9);
}

#[test]
fn excluded_linear_sqrt_is_a_domain_error() {
    let out = finsler(&["tensors", "--phi", "linear_sqrt", "--params", r#"{"c1":1,"c2":1}"#]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("rho + phi*phi''*m^2"), "{}", stderr(&out));
    assert!(out.stdout.is_empty());
}

#[test]
fn kropina_at_s_outside_domain_is_a_domain_error() {
    let out = finsler(&["tensors", "--phi", "kropina", "--y", "-1,0.2,0"]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
}

#[test]
fn config_errors_exit_2() {
    for args in [
        vec!["classify", "--phi", "no_such_family"],
        vec!["classify", "--phi", "randers", "--fixture", "/nonexistent/fixture.json"],
        vec!["classify", "--phi", "randers", "--grid", "2"],
        vec!["classify", "--phi", "shen_berwald", "--params", "not json"],
        vec!["tensors", "--phi", "randers", "--y", "1,2"],
        vec!["frobnicate"],
    ] {
        let out = finsler(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", stderr(&out));
    }
}

#[test]
fn tolerance_comes_from_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_finsler"))
        .args(["classify", "--phi", "randers"])
        .env("FINSLER_TOL", "0.001")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json_result(&out)["tol"], 0.001);
    let out = Command::new(env!("CARGO_BIN_EXE_finsler"))
        .args(["classify", "--phi", "randers"])
        .env("FINSLER_TOL", "0")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn identical_runs_are_byte_identical() {
    for args in [
        vec!["tensors", "--phi", "shen_landsberg", "--params", r#"{"c1":1,"c2":0.5}"#, "--fixture", "tilted"],
        vec!["verify", "--phi", "kropina", "--fixture", "kropina", "--seed", "11"],
        vec!["classify", "--phi", "randers", "--format", "csv"],
    ] {
        let a = finsler(&args);
        let b = finsler(&args);
        assert_eq!(a.status.code(), Some(0), "{args:?}: {}", stderr(&a));
        assert!(!a.stdout.is_empty());
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}

#[test]
fn seed_is_recorded_and_changes_directions() {
    let a = finsler(&["verify", "--phi", "randers", "--seed", "1"]);
    let b = finsler(&["verify", "--phi", "randers", "--seed", "2"]);
    let va: Value = serde_json::from_slice(&a.stdout).unwrap();
    let vb: Value = serde_json::from_slice(&b.stdout).unwrap();
    assert_eq!(va["seed"], 1);
    assert_eq!(vb["seed"], 2);
    assert_ne!(va["result"]["points"][1]["y"], vb["result"]["points"][1]["y"]);
    // the fixture direction does not depend on the seed
    assert_eq!(va["result"]["points"][0]["y"], vb["result"]["points"][0]["y"]);
}

#[test]
fn tensors_csv_is_lexicographic() {
    let out = finsler(&["tensors", "--phi", "randers", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("tensor,i,j,k,l,value"));
    let t_rows: Vec<&str> = text.lines().filter(|l| l.starts_with("T,")).collect();
    assert_eq!(t_rows.len(), 81);
    assert!(t_rows[0].starts_with("T,0,0,0,0,"));
    assert!(t_rows[1].starts_with("T,0,0,0,1,"));
    assert!(t_rows[80].starts_with("T,2,2,2,2,"));
}

#[test]
fn ode_check_csv_header_and_out_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ode.csv");
    let out = finsler(&[
        "ode-check",
        "--phi",
        "shen_landsberg",
        "--params",
        r#"{"c1":1,"c2":0.5}"#,
        "--format",
        "csv",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("s,residual_trivial,residual_landsberg,phi_closed,phi_quadrature,ratio"));
    assert_eq!(lines.count(), 33);
}

#[test]
fn ode_check_normalized_parameterization() {
    let out = finsler(&[
        "ode-check",
        "--phi",
        "shen_landsberg",
        "--params",
        r#"{"c2_prime":0.8,"c_lin":0.3,"b0":1.0}"#,
        "--fixture",
        "unit_b",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let r = json_result(&out);
    assert_eq!(r["passed"], true);
    assert!(r["ode"]["max_abs_landsberg"].as_f64().unwrap() <= 1e-10);
}

#[test]
fn ode_check_special_case() {
    let out = finsler(&["ode-check", "--phi", "special", "--params", r#"{"c1":1,"b_sq":0.36}"#]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let r = json_result(&out);
    assert!(r["ratio_spread"].as_f64().unwrap() <= 1e-8);
}

#[test]
fn fixture_can_be_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("fx.json");
    std::fs::write(&path, r#"{"dim":3,"a":[[2,0,0],[0,1,0],[0,0,1]],"b":[0.5,0.1,0],"b0":1.0,"y":[1,1,1]}"#).unwrap();
    let out = finsler(&["verify", "--phi", "randers", "--fixture", path.to_str().unwrap(), "--directions", "2"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(json_result(&out)["passed"], true);
}

#[test]
fn suite_passes_and_lists_every_criterion() {
    let out = finsler(&["suite", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 9);
    assert!(rows.iter().all(|r| r.ends_with(",true")), "{text}");
}
