use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_epidelay"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

const SIM_CONFIG: &str = r#"{
  "population": 100000,
  "susceptible0": 99900,
  "infected0": 100,
  "transmission": {"kind": "constant", "value": 0.3},
  "removal": {
    "mode": "distributed",
    "recovery": {"shape": 4.0, "scale": 2.5},
    "death": {"shape": 3.0, "scale": 3.0},
    "survival_probability": 0.95
  },
  "step": 0.1,
  "horizon": 80
}"#;

/// Simulates and exports a daily dataset, returning its manifest.
fn synthetic_dataset(dir: &Path) -> PathBuf {
    let cfg = dir.join("sim.json");
    fs::write(&cfg, SIM_CONFIG).unwrap();
    let out = dir.join("sim");
    let status = run(&[
        "simulate",
        "--sim-config",
        cfg.to_str().unwrap(),
        "--export",
        "daily",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(status.status.success(), "{}", stderr(&status));
    out.join("dataset").join("manifest.json")
}

fn fit_args<'a>(manifest: &'a str, out: &'a str) -> Vec<&'a str> {
    vec![
        "fit-recovery",
        "--manifest",
        manifest,
        "--p0",
        "0.95",
        "--shape-max",
        "8",
        "--scale-max",
        "6",
        "--shape-step",
        "0.1",
        "--scale-step",
        "0.1",
        "--mode-window",
        "2,15",
        "--out",
        out,
    ]
}

#[test]
fn unknown_command_is_a_usage_error() {
    let out = run(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).to_lowercase().contains("usage"));
    assert_eq!(run(&[]).status.code(), Some(2));
}

#[test]
fn metrics_from_a_given_reproduction_number() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "metrics",
        "--r0",
        "18",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((doc["hit"].as_f64().unwrap() - 0.9444).abs() < 1e-4);
    assert_eq!(doc["resolved_config"]["command"], "metrics");
}

#[test]
fn metrics_integrates_kernels() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "metrics",
        "--recovery",
        "4.7,4.5",
        "--death",
        "4.95,2.05",
        "--p0",
        "0.97",
        "--beta",
        "0.1",
        "--population",
        "1000",
        "--s0",
        "900",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    let expected = 0.1 * 0.9 * (0.97 * 4.7 * 4.5 + 0.03 * 4.95 * 2.05);
    assert!((doc["r0"].as_f64().unwrap() - expected).abs() < 1e-4 * expected);
}

#[test]
fn gamma_summary_prints_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "gamma-summary",
        "--shape",
        "4.7",
        "--scale",
        "4.5",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((doc["mean"].as_f64().unwrap() - 21.15).abs() < 1e-9);
    assert!((doc["mode"].as_f64().unwrap() - 16.65).abs() < 1e-9);
}

#[test]
fn show_defaults_lists_the_table() {
    let out = run(&["--show-defaults"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for key in ["mode_window", "quadrature_step", "tail_mass"] {
        assert!(text.contains(key));
    }
}

#[test]
fn invalid_parameters_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = synthetic_dataset(dir.path());
    let out_dir = dir.path().join("bad");
    let out = run(&[
        "fit-recovery",
        "--manifest",
        manifest.to_str().unwrap(),
        "--p0",
        "1.3",
        "--mode-window",
        "20,10",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert!(err.contains("survival_probability out of [0,1]"), "{err}");
    assert!(err.contains("mode_lower"), "{err}");
    assert!(
        err.lines().all(|l| l.starts_with("error[validation]")),
        "{err}"
    );

    let missing = run(&["smooth", "--manifest", "/no/such/manifest.json"]);
    assert_eq!(missing.status.code(), Some(1));
    assert!(stderr(&missing).starts_with("error[io]"));
}

#[test]
fn empty_feasible_region_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = synthetic_dataset(dir.path());
    let out = run(&[
        "fit-recovery",
        "--manifest",
        manifest.to_str().unwrap(),
        "--p0",
        "0.95",
        "--shape-max",
        "2",
        "--scale-max",
        "1",
        "--mode-window",
        "30,40",
        "--out",
        dir.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(
        stderr(&out).starts_with("error[empty-feasible-region]"),
        "{}",
        stderr(&out)
    );
}

#[test]
fn fit_is_bit_identical_and_replayable() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = synthetic_dataset(dir.path());
    let manifest_before = fs::read(&manifest).unwrap();
    let m = manifest.to_str().unwrap().to_string();

    let first = dir.path().join("first");
    let second = dir.path().join("second");
    for (out, workers) in [(&first, "1"), (&second, "3")] {
        let mut args = fit_args(&m, out.to_str().unwrap());
        args.extend(["--workers", workers]);
        let status = run(&args);
        assert!(status.status.success(), "{}", stderr(&status));
    }
    // worker count is part of the resolved config, so compare the results only
    let a = read_json(&first.join("fit_recovery.json"));
    let b = read_json(&second.join("fit_recovery.json"));
    for key in ["optimal", "sse", "predicted", "surface_minima", "summary"] {
        assert_eq!(a[key], b[key], "{key}");
    }
    assert_eq!(
        fs::read(first.join("fit_recovery.csv")).unwrap(),
        fs::read(second.join("fit_recovery.csv")).unwrap()
    );
    let shape = a["optimal"]["shape"].as_f64().unwrap();
    let scale = a["optimal"]["scale"].as_f64().unwrap();
    assert!(
        (shape - 4.0).abs() < 0.3 && (scale - 2.5).abs() < 0.3,
        "({shape}, {scale})"
    );

    // replaying the embedded config into the same directory reproduces the bytes
    let report = fs::read(first.join("fit_recovery.json")).unwrap();
    let replay = run(&[
        "--config",
        first.join("fit_recovery.json").to_str().unwrap(),
    ]);
    assert!(replay.status.success(), "{}", stderr(&replay));
    assert_eq!(fs::read(first.join("fit_recovery.json")).unwrap(), report);
    assert_eq!(fs::read(&manifest).unwrap(), manifest_before);

    // the report feeds the comparison and metrics commands
    let cmp = dir.path().join("cmp");
    let out = run(&[
        "baseline-compare",
        "--manifest",
        &m,
        "--fit-report",
        first.join("fit_recovery.json").to_str().unwrap(),
        "--out",
        cmp.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let comparison = read_json(&cmp.join("comparison.json"));
    let distributed = comparison["distributed_sse"].as_f64().unwrap();
    for b in comparison["baselines"].as_array().unwrap() {
        assert!(distributed < b["sse"].as_f64().unwrap());
    }
    for t in ["mean", "median", "mode"] {
        assert!(cmp.join(format!("baseline_{t}.csv")).is_file());
    }
    assert_eq!(comparison["ordering"][0], "distributed");
}

#[test]
fn smooth_writes_grid() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = synthetic_dataset(dir.path());
    let out_dir = dir.path().join("s");
    let out = run(&[
        "smooth",
        "--manifest",
        manifest.to_str().unwrap(),
        "--dt",
        "0.5",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = fs::read_to_string(out_dir.join("smooth.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("t,j_hat"));
    let doc = read_json(&out_dir.join("smooth.json"));
    assert_eq!(
        doc["grid_points"].as_u64().unwrap() as usize,
        csv.lines().count() - 1
    );
}
