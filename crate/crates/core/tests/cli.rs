use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_min-energy"))
}

fn model(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn report(path: PathBuf) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

const SCALAR: &str = r#"{"type":"spectral","lambdas":[-1.0],"b_diag":[1.0]}"#;

#[test]
fn scalar_gramian_csv() {
    let dir = tempfile::tempdir().unwrap();
    let m = model(dir.path(), "m.json", SCALAR);
    let out = dir.path().join("out");
    let o = run(&["gramian", "--model", m.to_str().unwrap(), "--t", "1", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let csv = fs::read_to_string(out.join("gramian.csv")).unwrap();
    assert!(csv.starts_with("col_1\r\n"));
    assert!(csv.contains("0.43233235838"));
}

#[test]
fn infinite_gramian_report_marks_horizon() {
    let dir = tempfile::tempdir().unwrap();
    let m = model(dir.path(), "m.json", SCALAR);
    let out = dir.path().join("out");
    let o = run(&["gramian", "--model", m.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let r = report(out.join("gramian_report.json"));
    assert_eq!(r["result"]["gramian"]["horizon"], "+inf");
    assert_eq!(r["provenance"]["version"], env!("CARGO_PKG_VERSION"));
}

#[test]
fn missing_model_reports_on_stderr() {
    let o = run(&["gramian", "--model", "/nonexistent/model.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("model.json"));
}

#[test]
fn verify_two_mode_lists_four_solutions() {
    let dir = tempfile::tempdir().unwrap();
    let m = model(
        dir.path(),
        "m.json",
        r#"{"type":"spectral","lambdas":[-1.0,-2.0],"b_diag":[1.0,1.0]}"#,
    );
    let out = dir.path().join("out");
    let o = run(&["verify", "--model", m.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let r = report(out.join("certificate.json"));
    assert_eq!(r["solution_count"], 4);
    assert_eq!(r["certificate"]["passed"], true);
    assert_eq!(r["provenance"]["seed"], "0x5eed");
}

#[test]
fn verify_landau_model() {
    let dir = tempfile::tempdir().unwrap();
    let m = model(
        dir.path(),
        "m.json",
        r#"{"type":"landau","n_modes":8,"rho_minus":0.2,"rho_plus":0.8}"#,
    );
    let out = dir.path().join("out");
    let o = run(&["verify", "--model", m.to_str().unwrap(), "--samples", "10", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(report(out.join("certificate.json"))["solution_count"], 256);
}

#[test]
fn synthesize_scalar_and_zero_targets() {
    let dir = tempfile::tempdir().unwrap();
    let m = model(dir.path(), "m.json", SCALAR);
    let out = dir.path().join("one");
    let o = run(&["synthesize", "--model", m.to_str().unwrap(), "--target", "1", "--t", "1", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let r = report(out.join("synthesis_report.json"));
    assert!((r["result"]["v_inf"].as_f64().unwrap() - 1.0).abs() < 1e-6);
    assert!(r["result"]["bcle_residual"].as_f64().unwrap() < 1e-4);
    let traj = fs::read_to_string(out.join("trajectory.csv")).unwrap();
    assert!(traj.starts_with("r,y_1\r\n"));
    assert!(fs::read_to_string(out.join("control.csv")).unwrap().starts_with("r,u_1\r\n"));

    let out = dir.path().join("zero");
    let o = run(&["synthesize", "--model", m.to_str().unwrap(), "--target", "0", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let r = report(out.join("synthesis_report.json"));
    assert_eq!(r["result"]["v_inf"], 0.0);
    assert_eq!(r["result"]["energy"], 0.0);
}

#[test]
fn synthesize_rejects_wrong_target_length() {
    let dir = tempfile::tempdir().unwrap();
    let m = model(dir.path(), "m.json", SCALAR);
    let o = run(&["synthesize", "--model", m.to_str().unwrap(), "--target", "1,2", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn auxiliary_scalar_tight_case() {
    let dir = tempfile::tempdir().unwrap();
    let m = model(dir.path(), "m.json", SCALAR);
    let out = dir.path().join("out");
    let o = run(&["auxiliary", "--model", m.to_str().unwrap(), "--t", "1", "--target", "1", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let r = report(out.join("auxiliary_report.json"));
    assert!((r["result"]["value"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert!((r["result"]["argmin_z"][0].as_f64().unwrap() - (-1.0f64).exp()).abs() < 1e-9);
}

#[test]
fn landau_examples() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("e1");
    let o = run(&["landau", "--n-modes", "8", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let r = report(out.join("landau_report.json"));
    assert!(r["value_check"]["rel_err"].as_f64().unwrap() <= 1e-12);
    assert_eq!(r["inverse_gramian"]["form"], "-2A");
    let profiles = fs::read_to_string(out.join("profiles.csv")).unwrap();
    assert_eq!(profiles.lines().count(), 513);

    let out = dir.path().join("flat");
    let o = run(&["landau", "--n-modes", "1", "--target", "0", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(report(out.join("landau_report.json"))["value_check"]["v_inf"], 0.0);

    let o = run(&["landau", "--rho-minus", "1.5", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(6));
}

#[test]
fn all_on_dense_model() {
    let dir = tempfile::tempdir().unwrap();
    let m = model(
        dir.path(),
        "m.json",
        r#"{"type":"dense","A":[[-1.0,0.5,0.0],[0.2,-2.0,0.3],[0.0,0.1,-1.5]],"B":[[1.0],[0.5],[0.2]]}"#,
    );
    let out = dir.path().join("out");
    let o = run(&["all", "--model", m.to_str().unwrap(), "--seed", "2a", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(out.join("all_report.json"));
    assert_eq!(r["passed"], true);
    assert_eq!(r["provenance"]["seed"], "0x2a");
}

#[test]
fn bad_seed_and_tolerance_are_parameter_errors() {
    let dir = tempfile::tempdir().unwrap();
    let m = model(dir.path(), "m.json", SCALAR);
    let m = m.to_str().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(run(&["verify", "--model", m, "--seed", "xyz", "--out", out]).status.code(), Some(3));
    assert_eq!(run(&["verify", "--model", m, "--tol", "0", "--out", out]).status.code(), Some(3));
}

#[test]
fn unstable_model_is_a_precondition_failure() {
    let dir = tempfile::tempdir().unwrap();
    let m = model(dir.path(), "m.json", r#"{"type":"dense","A":[[0.5]],"B":[[1.0]]}"#);
    let o = run(&["gramian", "--model", m.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
}
