use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_betheforge"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn chain_file(name: &str, body: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("betheforge-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

#[test]
fn ybe_exact_is_zero() {
    let out = run(&["ybe", "--kind", "sp4", "--x", "1/3", "--y", "-2/5", "--z", "7/4"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("ybe") && text.contains('0'), "{text}");
}

#[test]
fn ybe_float_backend() {
    let out = run(&["ybe", "--kind", "gl3", "--x", "0.3", "--y", "-1.2", "--z", "2.5", "--backend", "float"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn ybe_pole_is_an_error() {
    let out = run(&["ybe", "--kind", "gl2", "--x", "1", "--y", "1", "--z", "2"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}

#[test]
fn chain_check_reports_vacuum() {
    let spec = chain_file("sp4.json", r#"{"model":"sp4","length":2}"#);
    let out = run(&["chain-check", "--spec", spec.to_str().unwrap(), "--x", "1/3", "--y", "5/7"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["rtt_residual"], 0.0);
    assert_eq!(v["commuting_residual"], 0.0);
    assert_eq!(v["vacuum"]["local_slot"], 3);
}

#[test]
fn solve_refines_sp4_singlet_guess() {
    let spec = chain_file("sp4-l2.json", r#"{"model":"sp4","length":2}"#);
    let out = run(&[
        "solve", "--spec", spec.to_str().unwrap(), "--N", "1", "--P", "2", "--starts", "0",
        "--guess", "-1.25,0.27,-0.77",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let sols = json(&out);
    assert!(!sols.as_array().unwrap().is_empty());
}

#[test]
fn gl3_empty_roots_check() {
    let spec = chain_file("gl3.json", r#"{"model":"gl3","length":2}"#);
    let out = run(&["gl3", "--spec", spec.to_str().unwrap(), "--check"]);
    let v = json(&out);
    assert!(v.get("verdict").is_some());
    assert!(v.get("residuals").is_some());
}

#[test]
fn verify_filter_writes_report() {
    let path = std::env::temp_dir().join(format!("betheforge-report-{}.json", std::process::id()));
    let out = run(&["verify", "--filter", "rmatrix.gl2.*", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("rmatrix.gl2.ybe.exact"));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["summary"]["failed"], 0);
}

#[test]
fn verify_unmatched_filter_exits_two() {
    let out = run(&["verify", "--filter", "nothing.here"]);
    assert_eq!(out.status.code(), Some(2));
}
