use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coexist")).args(args).env("COEXIST_THREADS", "1").output().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

fn disk() -> PathBuf {
    let dir = std::env::temp_dir().join(format!("coexist-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("disk.json");
    std::fs::write(&path, r#"{"kind":"ball","center":[0,0],"radius":1}"#).unwrap();
    path
}

#[test]
fn measure_envelope() {
    let path = disk();
    let out = run(&["measure", "--region", path.to_str().unwrap(), "--depth", "6"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["schema"], "coexist/1");
    assert_eq!(v["config"]["format"], "json");
    assert_eq!(v["config"]["command"]["depth"], 6);
    let (inner, outer) = (v["result"]["inner"].as_f64().unwrap(), v["result"]["outer"].as_f64().unwrap());
    assert!(inner < std::f64::consts::PI && std::f64::consts::PI < outer);
}

#[test]
fn table_defaults_to_csv() {
    let path = disk();
    let out = run(&["measure", "--region", path.to_str().unwrap(), "--table", "0..4"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 6);
    assert!(text.lines().next().unwrap().contains("inner"));
}

#[test]
fn usage_errors_exit_two() {
    let path = disk();
    assert_eq!(run(&["--format", "csv", "measure", "--region", path.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(run(&["measure", "--region", "/nonexistent/region.json"]).status.code(), Some(2));
    assert_eq!(run(&["integrate", "--rho", "x +", "--box", "0:1"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn integrate_exit_codes() {
    let out = run(&["integrate", "--rho", "x", "--box", "0:1", "--tol", "1e-3"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["result"]["proper"], 0.5);
    let out = run(&["integrate", "--rho", "exp(x)", "--box", "0:1", "--tol", "1e-12", "--max-depth", "6"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(json(&out)["result"]["proper"].is_null());
}
