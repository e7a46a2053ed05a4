//! Runs the `lurye` binary: exit codes, written outputs and determinism.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const TABLE2_G06: &str =
    r#"{"plant": {"transfer_function": {"domain": "z", "num": [2, 0.92], "den": [1, -0.5, 0], "g": 0.6}}, "k": 1}"#;
const TABLE2_G10: &str =
    r#"{"plant": {"transfer_function": {"domain": "z", "num": [2, 0.92], "den": [1, -0.5, 0], "g": 1.0}}, "k": 1}"#;

const THETA_SWEEP: &str = r#"{
  "plant": {"transfer_function": {"domain": "s", "num": [1], "den": [1, 100.1, 11, 100], "g": 50}},
  "k": 1,
  "multiplier": {"domain": "s", "taps": [[6.283185307179586, 0.82]], "class": {"altshuller": 3.141592653589793}},
  "sweep": {"parameter": "theta", "start": 1.0, "stop": 1.08, "step": 0.01}
}"#;

const GAIN_SWEEP: &str = r#"{
  "plant": {"transfer_function": {"domain": "s", "num": [1], "den": [1, 100.1, 11, 100], "g": 1}},
  "k": 1,
  "sweep": {"parameter": "gain", "start": 20.70, "stop": 20.85, "step": 0.01}
}"#;

fn lurye(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lurye")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("json report")
}

#[test]
fn check_exit_codes_follow_the_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let ok = write(dir.path(), "g06.json", TABLE2_G06);
    let bad = write(dir.path(), "g10.json", TABLE2_G10);
    let o = lurye(&["check", "--config", &ok]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(code(&lurye(&["check", "--config", &bad])), 1);
}

#[test]
fn malformed_config_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "broken.json", "{\n  \"plant\": {\n    \"transfer_function\": [1, 2,\n");
    let o = lurye(&["check", "--config", &p]);
    assert_eq!(code(&o), 2);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line"), "{err}");
}

#[test]
fn unknown_experiment_and_bad_flags_are_usage_errors() {
    assert_eq!(code(&lurye(&["reproduce", "no-such-experiment"])), 2);
    assert_eq!(code(&lurye(&["--format", "xml", "reproduce", "--list"])), 2);
    assert_eq!(code(&lurye(&["check"])), 2);
}

#[test]
fn empty_sweep_range_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "sweep.json", THETA_SWEEP);
    let o = lurye(&["sweep", "--config", &p, "--start", "1.1", "--stop", "1.0"]);
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn theta_sweep_is_suitable_throughout() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "sweep.json", THETA_SWEEP);
    let o = lurye(&["--format", "json", "sweep", "--config", &p]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    let rows = v["table"].as_array().unwrap();
    assert_eq!(rows.len(), 9);
    assert!(rows.iter().all(|r| r["suitable"] == true && r["margin"].as_f64().unwrap() > 0.0));
    assert_eq!(rows[0]["theta"], 1.0);
    assert_eq!(rows[8]["theta"], 1.08);
}

#[test]
fn gain_sweep_margin_changes_sign_near_critical_gain() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "sweep.json", GAIN_SWEEP);
    let o = lurye(&["--format", "json", "sweep", "--config", &p]);
    assert_eq!(code(&o), 0);
    let rows = json(&o)["table"].as_array().unwrap().clone();
    let last_suitable =
        rows.iter().filter(|r| r["suitable"] == true).map(|r| r["gain"].as_f64().unwrap()).fold(0.0, f64::max);
    let first_unsuitable = rows
        .iter()
        .filter(|r| r["suitable"] == false)
        .map(|r| r["gain"].as_f64().unwrap())
        .fold(f64::INFINITY, f64::min);
    assert!((last_suitable - 20.77).abs() < 1e-9, "{last_suitable}");
    assert!((first_unsuitable - 20.78).abs() < 1e-9, "{first_unsuitable}");
}

#[test]
fn out_dir_gets_report_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "g06.json", TABLE2_G06);
    let out = dir.path().join("run");
    let o = lurye(&[
        "--format",
        "csv",
        "--grid-density",
        "2048",
        "check",
        "--config",
        &cfg,
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let manifest: Value = serde_json::from_slice(&std::fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "check");
    assert_eq!(manifest["format"], "csv");
    assert_eq!(manifest["grid_density"], 2048);
    assert_eq!(manifest["config"]["k"], 1.0);
    assert_eq!(manifest["config"]["plant"]["transfer_function"]["g"], 0.6);
    assert!(out.join("report.csv").exists());
    assert!(manifest["files"].as_array().unwrap().iter().any(|f| f == "report.csv"));
}

#[test]
fn reproduce_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let runs: Vec<_> = (0..2)
        .map(|i| {
            let out = dir.path().join(format!("run{i}"));
            let o = lurye(&["--format", "json", "reproduce", "g07-steady-state", "--out", out.to_str().unwrap()]);
            assert_eq!(code(&o), 0);
            (
                o.stdout,
                std::fs::read(out.join("report.json")).unwrap(),
                std::fs::read(out.join("manifest.json")).unwrap(),
            )
        })
        .collect();
    assert_eq!(runs[0], runs[1]);
}

#[test]
fn reproduce_lists_every_experiment() {
    let o = lurye(&["--format", "json", "reproduce", "--list"]);
    assert_eq!(code(&o), 0);
    let names: Vec<String> =
        json(&o)["table"].as_array().unwrap().iter().map(|r| r["name"].as_str().unwrap().to_string()).collect();
    for n in [
        "circle-threshold-fromion",
        "altshuller-threshold-fromion",
        "fromion-attractors",
        "fromion-subharmonic",
        "table2-bounds",
        "g07-steady-state",
        "g09-chaos",
        "g07-attractor-uniqueness",
    ] {
        assert!(names.iter().any(|x| x == n), "missing {n}");
    }
}
