use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn multisym(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_multisym")).args(args).env_remove("MULTISYM_THREADS").output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn json(bytes: &[u8]) -> Value {
    serde_json::from_slice(bytes).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn usage_errors_exit_2_with_usage_text() {
    for args in [&["legendre", "--bogus"][..], &["frobnicate"], &[]] {
        let o = multisym(args);
        assert_eq!(code(&o), 2, "{args:?}");
        assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"), "{args:?}");
    }
    let o = multisym(&["verify", "--check", "jacobi"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn bad_thread_cap_is_a_usage_error() {
    let o = Command::new(env!("CARGO_BIN_EXE_multisym"))
        .args(["verify", "--check", "bracket"])
        .env("MULTISYM_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
    let o = Command::new(env!("CARGO_BIN_EXE_multisym"))
        .args(["verify", "--check", "bracket"])
        .env("MULTISYM_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
}

#[test]
fn legendre_table_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for p in [&a, &b] {
        let o = multisym(&["legendre", "--samples", "20", "--seed", "3", "--out", path(p)]);
        assert_eq!(code(&o), 0);
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "lagrangian,e,p11,p12,p21,p22,r,computed,closed_form,abs_error");
    assert_eq!(lines.count(), 60);
}

#[test]
fn evolve_reruns_bit_identically_from_its_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("run.csv");
    let o = multisym(&[
        "evolve", "--nx", "16", "--nt", "11", "--lambda", "0.2", "--init", "noise:7", "--out", path(&first),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(&first).unwrap();
    assert_eq!(csv.lines().count(), 12);
    assert_eq!(csv.lines().next().unwrap().split(',').count(), 2 + 4 * 16);
    let cfg = json(&std::fs::read(dir.path().join("run.json")).unwrap());
    assert_eq!(cfg["lambda"], 0.2);
    assert_eq!(cfg["init"]["seed"], 7);

    let second = dir.path().join("again.csv");
    let o = multisym(&["evolve", "--config", path(&dir.path().join("run.json")), "--out", path(&second)]);
    assert_eq!(code(&o), 0);
    assert_eq!(csv, std::fs::read_to_string(&second).unwrap());
}

#[test]
fn evolve_rejects_cfl_violation() {
    let dir = tempfile::tempdir().unwrap();
    let o = multisym(&["evolve", "--dt", "0.2", "--dx", "0.1", "--out", path(&dir.path().join("x.csv"))]);
    assert_eq!(code(&o), 2);
}

#[test]
fn verify_reports_have_the_documented_fields() {
    let o = multisym(&["verify", "--check", "observable"]);
    assert_eq!(code(&o), 0);
    let r = json(&o.stdout);
    for key in ["check", "grid", "residual", "order_estimate", "pass"] {
        assert!(r.get(key).is_some(), "{key}");
    }
    assert_eq!(r["check"], "observable");
    assert_eq!(r["pass"], true);
}

#[test]
fn verify_flow_from_a_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"lattice": {"nt": 101, "nx": 64, "dt": 0.05, "dx": 0.1}, "lambda": 0.0,
            "init": {"kind": "plane-wave", "mode": 1, "amplitude": 0.5}}"#,
    )
    .unwrap();
    let out = dir.path().join("report.json");
    let o = multisym(&["verify", "--check", "flow", "--config", path(&cfg), "--out", path(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let r = json(&std::fs::read(&out).unwrap());
    assert_eq!(r["grid"].as_array().unwrap().len(), 3);
    assert!((r["order_estimate"].as_f64().unwrap() - 2.0).abs() < 0.3);

    std::fs::write(&cfg, r#"{"levles": 2}"#).unwrap();
    let o = multisym(&["verify", "--check", "flow", "--config", path(&cfg)]);
    assert_eq!(code(&o), 2);
}

#[test]
fn perturb_free_field_reports_null_slopes() {
    let o = multisym(&["perturb", "--n-lambda", "1", "--lambda-min", "0", "--nx", "32", "--nt", "48"]);
    assert_eq!(code(&o), 0);
    let v = json(&o.stdout);
    assert!(v["slope1"].is_null() && v["slope2"].is_null());
    assert!(v["free_residual"].as_f64().unwrap() < 1e-10);
    assert_eq!(v["pass"], true);
}

#[test]
fn perturb_scaling_passes_and_reruns_from_its_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    let o = multisym(&["perturb", "--n-lambda", "4", "--out", path(&a)]);
    assert_eq!(code(&o), 0);
    let v = json(&o.stdout);
    assert!((v["slope1"].as_f64().unwrap() - 1.0).abs() <= 0.1);
    assert!((v["slope2"].as_f64().unwrap() - 2.0).abs() <= 0.2);
    let csv = std::fs::read_to_string(&a).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "lambda,r1,r2,volume,local_slope1,local_slope2");
    assert_eq!(csv.lines().count(), 5);

    let o = multisym(&["perturb", "--config", path(&dir.path().join("a.json")), "--out", path(&b)]);
    assert_eq!(code(&o), 0);
    assert_eq!(csv, std::fs::read_to_string(&b).unwrap());
    assert_eq!(std::fs::read(dir.path().join("a.json")).unwrap(), std::fs::read(dir.path().join("b.json")).unwrap());
}

#[test]
fn perturb_rejects_a_bad_lambda_grid() {
    let o = multisym(&["perturb", "--lambda-min", "0", "--n-lambda", "3"]);
    assert_eq!(code(&o), 2);
    let o = multisym(&["perturb", "--phi1", "plane:x"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn quick_suite_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("suite.json");
    let o = multisym(&["suite", "--quick", "--out", path(&out)]);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(code(&o), 0, "{stdout}");
    assert_eq!(stdout.lines().filter(|l| l.starts_with("[PASS]")).count(), 11);
    let r = json(&std::fs::read(&out).unwrap());
    assert_eq!(r["pass"], true);
    assert_eq!(r["criteria"].as_array().unwrap().len(), 11);
}
