use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn olab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_olab")).current_dir(dir).args(args).output().expect("binary runs")
}

fn json(path: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

fn error_of(out: &Output) -> Value {
    serde_json::from_slice::<Value>(&out.stderr).expect("stderr is a JSON error object")["error"].clone()
}

#[test]
fn gen_then_corr_writes_report_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert!(olab(d, &["gen", "--mobius", "200000", "--out", "mu.bin"]).status.success());
    assert!(d.join("mu.bin.manifest.json").exists());

    let args = ["corr", "--in", "mu.bin", "--stat", "short-interval", "--H", "100", "--cutoffs", "1e4,1e5"];
    let out = olab(d, &[&args[..], &["--out", "a.json"]].concat());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&d.join("a.json"));
    assert_eq!(report["tag"], "ortmsvf");
    let tail = report["result"][0]["report"]["tail"][0].as_f64().unwrap();
    assert!(tail > 0.0 && tail < 0.02, "{tail}");

    let manifest = json(&d.join("a.json.manifest.json"));
    assert_eq!(manifest["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
    assert!(manifest["wall_time_s"].as_f64().is_some());
    assert_eq!(manifest["command"]["corr"]["h"][0], 100);
    assert_eq!(manifest["extra"]["zero_padded"], 0);

    assert!(olab(d, &[&args[..], &["--out", "b.json", "--workers", "3"]].concat()).status.success());
    assert_eq!(std::fs::read(d.join("a.json")).unwrap(), std::fs::read(d.join("b.json")).unwrap());
}

#[test]
fn monte_carlo_without_seed_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = olab(dir.path(), &["gen", "--iid", "1000", "--out", "x.bin"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_of(&out)["kind"], "validation");
}

#[test]
fn memory_budget_is_a_resource_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_olab"))
        .current_dir(dir.path())
        .env("OLAB_MEMORY_BUDGET", "1000")
        .args(["gen", "--mobius", "1e4", "--out", "mu.bin"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(error_of(&out)["exit_code"], 3);
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = olab(dir.path(), &["corr", "--stat", "nonsense"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_of(&out)["kind"], "usage");
}

#[test]
fn config_file_values_yield_to_flags() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = r#"{"command": "coupling", "flip": "1/4", "rational": true}"#;
    std::fs::write(d.join("c.json"), cfg).unwrap();
    assert!(olab(d, &["--config", "c.json", "--out", "r.json"]).status.success());
    assert_eq!(json(&d.join("r.json"))["result"]["exact_correlation"], "1/2");
    assert!(olab(d, &["--config", "c.json", "coupling", "--flip", "1/8", "--out", "r.json"]).status.success());
    assert_eq!(json(&d.join("r.json"))["result"]["exact_correlation"], "1/4");
}

#[test]
fn rigidity_and_momo_reports_carry_tags() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = olab(d, &["rigidity", "--harmonic", "4", "--count", "2000", "--seed", "1", "--out", "r.json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(json(&d.join("r.json"))["tag"], "kf");

    assert!(olab(d, &["gen", "--linear-phase", "5000", "--alpha", "0.25", "--out", "e.csv"]).status.success());
    let out = olab(d, &["momo", "--in", "e.csv", "--stat", "sup", "--csv", "blocks.csv", "--out", "m.json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let m = json(&d.join("m.json"));
    assert_eq!(m["tag"], "momo28");
    assert!(m["result"]["value"].as_f64().unwrap() > 0.95);
    let csv = std::fs::read_to_string(d.join("blocks.csv")).unwrap();
    assert!(csv.starts_with("k,b_k,length,sup,guarantee_factor\n"));
}
