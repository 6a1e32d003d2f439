//! End-to-end runs of the `wiener-tau` binary.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wiener-tau"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).expect("report written")).expect("valid JSON")
}

fn out_arg(dir: &Path) -> String {
    dir.to_str().expect("utf-8 path").to_owned()
}

#[test]
fn one_soliton_tau_at_the_origin() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["tau-eval", "--out", &out_arg(dir.path())]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&dir.path().join("tau_eval.json"));
    // 1 + m / (p - q) = 1 + 1/2
    assert!((v["tau_det"].as_f64().unwrap() - 1.5).abs() < 1e-15);
    assert!((v["tau_subset_sum"].as_f64().unwrap() - 1.5).abs() < 1e-15);
}

#[test]
fn kdv_field_peaks_at_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["field", "--out", &out_arg(dir.path())]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&dir.path().join("field.json"));
    assert_eq!(v["points"], 201);
    assert_eq!(v["argmax"], 100);
    assert!((v["max"].as_f64().unwrap() - 2.0).abs() < 1e-12);
    let csv = std::fs::read_to_string(dir.path().join("field.csv")).unwrap();
    assert_eq!(csv.lines().count(), 202);
    assert_eq!(csv.lines().next(), Some("x,u"));
}

#[test]
fn three_soliton_kp_residual_is_small() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["residual", "--out", &out_arg(dir.path())]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&dir.path().join("residual.json"));
    assert_eq!(v["points"], 100);
    assert!(v["max_relative"].as_f64().unwrap() <= 1e-8);
}

#[test]
fn kps_chain_at_random_points() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["kps-check", "--out", &out_arg(dir.path())]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let v = json(&dir.path().join("kps_check.json"));
    assert_eq!(v["reports"].as_array().unwrap().len(), 20);
}

fn thm01(dir: &Path) -> Output {
    run(&[
        "mc-verify", "--suite", "thm01", "--samples", "2000", "--steps", "256", "--seed", "5", "--out", &out_arg(dir),
    ])
}

#[test]
fn monte_carlo_reruns_are_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let (oa, ob) = (thm01(a.path()), thm01(b.path()));
    assert_eq!(oa.status.code(), ob.status.code());
    assert_ne!(oa.status.code(), Some(2));
    for name in ["thm01_printed.json", "thm01_continued.json"] {
        let (mut x, mut y) = (json(&a.path().join(name)), json(&b.path().join(name)));
        x["wall_ms"] = Value::Null;
        y["wall_ms"] = Value::Null;
        assert_eq!(x, y, "{name}");
        assert_eq!(x["samples"], 2000);
        assert_eq!(x["seed"], 5);
    }
}

#[test]
fn effective_config_reproduces_the_run() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert_eq!(run(&["residual", "--seed", "9", "--out", &out_arg(a.path())]).status.code(), Some(0));
    let mut cfg = json(&a.path().join("effective_config.json"));
    assert_eq!(cfg["residual"]["seed"], 9);
    cfg["out"] = Value::String(out_arg(b.path()));
    let path = a.path().join("replay.json");
    std::fs::write(&path, cfg.to_string()).unwrap();
    assert_eq!(run(&["residual", "--config", path.to_str().unwrap()]).status.code(), Some(0));
    assert_eq!(json(&a.path().join("residual.json")), json(&b.path().join("residual.json")));
    assert_eq!(json(&b.path().join("effective_config.json")), cfg);
}

#[test]
fn bad_configs_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("garbage", "{ not json"),
        ("unknown_field", r#"{"command": "tau-eval", "what": 1}"#),
        ("wrong_command", r#"{"command": "field"}"#),
        ("foreign_block", r#"{"command": "tau-eval", "field": {}}"#),
        ("bad_params", r#"{"command": "tau-eval", "tau_eval": {"params": {"m": [1], "p": [0.5], "q": [0.5]}}}"#),
    ];
    for (name, text) in cases {
        let path = dir.path().join(format!("{name}.json"));
        std::fs::write(&path, text).unwrap();
        let o = run(&["tau-eval", "--config", path.to_str().unwrap(), "--out", &out_arg(dir.path())]);
        assert_eq!(o.status.code(), Some(2), "{name}");
    }
    let o = run(&["mc-verify", "--suite", "levy", "--steps", "100", "--out", &out_arg(dir.path())]);
    assert_eq!(o.status.code(), Some(2), "steps below the minimum");
}
