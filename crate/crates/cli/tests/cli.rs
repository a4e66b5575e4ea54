//! End-to-end runs of the `kduality` binary on the shipped configs.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use kduality::commands::ANCHORS;
use serde_json::Value;

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn kduality(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_kduality"));
    cmd.args(args).env_remove("KDUALITY_THREADS");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn run(command: &str, cfg: &str) -> (i32, Value, String) {
    let out = kduality(&[command, "--config", config(cfg).to_str().unwrap()], &[]);
    let report = serde_json::from_slice(&out.stdout).unwrap_or(Value::Null);
    (out.status.code().unwrap(), report, String::from_utf8_lossy(&out.stderr).into_owned())
}

fn records(report: &Value) -> Vec<&Value> {
    report["sections"].as_array().unwrap().iter().flat_map(|s| s["records"].as_array().unwrap()).collect()
}

#[test]
fn log2_verify_passes() {
    let (code, report, stderr) = run("verify", "log2.json");
    assert_eq!(code, 0, "{stderr}");
    assert_eq!(report["pass"], true);
    assert_eq!(report["sections"].as_array().unwrap().len(), 4);
}

#[test]
fn all_zero_potentials_have_zero_residuals() {
    let (code, report, stderr) = run("koopman", "zero.json");
    assert_eq!(code, 0, "{stderr}");
    for r in records(&report) {
        assert_eq!(r["residual"].as_str().unwrap().parse::<f64>().unwrap(), 0.0, "{r}");
    }
}

#[test]
fn depth_one_potential_has_empty_kernel() {
    let (code, report, stderr) = run("dualize", "depth1.json");
    assert_eq!(code, 0, "{stderr}");
    let w = &report["sections"][0]["tables"]["W"];
    assert_eq!(w["values"].as_array().unwrap().len(), 0);
    assert_eq!(w["past_depth"], 0);
}

#[test]
fn depth_one_pairing_certifies_at_large_theta() {
    let (code, _, stderr) = run("pair", "depth1.json");
    assert_eq!(code, 0, "{stderr}");
}

#[test]
fn bad_weights_name_the_constraint() {
    let (code, _, stderr) = run("dualize", "bad_weights.json");
    assert_eq!(code, 2);
    assert!(stderr.contains("weights must be positive and sum to 1"), "{stderr}");
}

#[test]
fn eigenvalue_below_threshold_is_refused() {
    let (code, report, stderr) = run("pair", "log2_below_threshold.json");
    assert_eq!(code, 3, "{stderr}");
    assert!(report["sections"][0]["refusal"].as_str().unwrap().contains("outside theorem regime"));
}

#[test]
fn complex_potential_names_realness() {
    let (code, _, stderr) = run("koopman", "complex_koopman.json");
    assert_eq!(code, 2);
    assert!(stderr.contains("realness precondition"), "{stderr}");
}

#[test]
fn sub_leading_pairing_passes() {
    let (code, report, stderr) = run("pair", "log2_subleading.json");
    assert_eq!(code, 0, "{stderr}");
    assert_eq!(report["pass"], true);
}

#[test]
fn missing_config_is_a_config_error() {
    let out = kduality(&["verify", "--config", "/nonexistent/config.json"], &[]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn every_anchor_is_known() {
    for cfg in ["log2.json", "log2_subleading.json", "zero.json"] {
        let (_, report, _) = run("verify", cfg);
        for r in records(&report) {
            let a = r["anchor"].as_str().unwrap();
            assert!(ANCHORS.contains(&a), "unknown anchor {a:?}");
        }
    }
}

#[test]
fn verify_is_deterministic_and_writes_files() {
    let dir = tempfile::tempdir().unwrap();
    let mut reports = Vec::new();
    for (i, threads) in ["1", "2"].iter().enumerate() {
        let out = dir.path().join(format!("report{i}.json"));
        let trace = dir.path().join(format!("trace{i}.csv"));
        let o = kduality(
            &[
                "verify",
                "--config",
                config("log2.json").to_str().unwrap(),
                "--out",
                out.to_str().unwrap(),
                "--trace",
                trace.to_str().unwrap(),
            ],
            &[("KDUALITY_THREADS", threads)],
        );
        assert_eq!(o.status.code(), Some(0));
        assert!(o.stdout.is_empty());
        let csv = std::fs::read_to_string(&trace).unwrap();
        assert!(csv.starts_with("command,trace,n,re,im,bound\n"));
        assert!(csv.lines().count() > 10);
        reports.push((std::fs::read(&out).unwrap(), csv));
    }
    assert!(reports[0] == reports[1]);
}

#[test]
fn bad_thread_env_is_rejected_unless_flag_given() {
    let cfg = config("zero.json");
    let cfg = cfg.to_str().unwrap();
    let env = [("KDUALITY_THREADS", "many")];
    assert_eq!(kduality(&["dualize", "--config", cfg], &env).status.code(), Some(2));
    assert_eq!(kduality(&["dualize", "--config", cfg, "--threads", "1"], &env).status.code(), Some(0));
}

#[test]
fn tol_flag_tightens_limit_checks() {
    let cfg = config("log2.json");
    let out = kduality(&["pair", "--config", cfg.to_str().unwrap(), "--tol", "1e-40"], &[]);
    assert_eq!(out.status.code(), Some(1));
    let bad = kduality(&["pair", "--config", cfg.to_str().unwrap(), "--tol", "-1"], &[]);
    assert_eq!(bad.status.code(), Some(2));
}
