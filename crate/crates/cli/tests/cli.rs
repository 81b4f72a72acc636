use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cliffdyn"))
}

fn run(args: &[&str], out: &Path) -> Output {
    bin().args(args).arg("--out").arg(out).output().expect("binary runs")
}

fn write_config(dir: &TempDir, name: &str, body: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, body).unwrap();
    p
}

fn example(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn report(dir: &Path) -> Value {
    serde_json::from_slice(&fs::read(dir.join("report.json")).unwrap()).unwrap()
}

fn column(csv: &str, name: &str) -> Vec<f64> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let k = header.iter().position(|h| *h == name).unwrap();
    lines.map(|l| l.split(',').nth(k).unwrap().parse().unwrap()).collect()
}

#[test]
fn verify_with_defaults_passes() {
    let out = TempDir::new().unwrap();
    let o = run(&["verify"], out.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let r = report(out.path());
    assert_eq!(r["schema_version"], 1);
    assert_eq!(r["passed"], true);
    assert!(r["checks"].as_array().unwrap().len() >= 25);
    assert!(r.get("wall_clock_seconds").is_none());
    assert!(out.path().join("timing.json").exists());
}

#[test]
fn verify_selection_runs_only_that_suite() {
    let out = TempDir::new().unwrap();
    let o = run(&["verify", "--suite", "clifford-core"], out.path());
    assert_eq!(o.status.code(), Some(0));
    let r = report(out.path());
    let checks = r["checks"].as_array().unwrap();
    assert!(!checks.is_empty());
    assert!(checks.iter().all(|c| c["suite"] == "clifford-core"));
}

#[test]
fn unknown_suite_is_a_usage_error() {
    let out = TempDir::new().unwrap();
    let o = run(&["verify", "--suite", "no-such-suite"], out.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("verify.suites[0]"));
}

#[test]
fn negative_mass_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "p.json", r#"{"m": -1, "span": [0, 1], "steps": 10}"#);
    let o = run(&["particle", "--config", cfg.to_str().unwrap()], &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("particle.m: must be a positive"));
    assert!(!dir.path().join("out/report.json").exists());
}

#[test]
fn unknown_config_field_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "p.json", r#"{"m": 1, "span": [0, 1], "steps": 10, "mass": 2}"#);
    let o = run(&["particle", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown field `mass`"));
}

#[test]
fn missing_config_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let o = run(&["string"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["string", "--config", "/nonexistent/cfg.json"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn einbein_sign_change_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "p.json",
        r#"{"m": 1, "einbein": {"kind": "linear", "intercept": 1, "slope": -1}, "span": [0, 2], "steps": 10}"#,
    );
    let o = run(&["particle", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("particle.einbein"));
}

#[test]
fn invalid_thread_count_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let o = bin()
        .env("CLIFFDYN_THREADS", "zero")
        .args(["verify", "--suite", "spinor-maps", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    let o = bin()
        .env("CLIFFDYN_THREADS", "2")
        .args(["verify", "--suite", "spinor-maps", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn particle_at_rest_with_vanishing_mu_traces_a_parabola() {
    let dir = TempDir::new().unwrap();
    let o = run(&["particle", "--config", &example("particle.json")], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    let tau = column(&csv, "tau");
    let t = column(&csv, "x0");
    assert_eq!(tau.len(), 201);
    let second: Vec<f64> = t.windows(3).map(|w| w[2] - 2.0 * w[1] + w[0]).collect();
    let h = tau[1] - tau[0];
    for s in &second {
        assert!((s - second[0]).abs() < 1e-12, "x0 is not quadratic in tau");
    }
    // E = tau / 2 and x0 = E^2 for p = (1, 0, 0, 0).
    assert!((second[0] / (h * h) - 0.5).abs() < 1e-8);
    for x in ["x1", "x2", "x3"] {
        assert!(column(&csv, x).iter().all(|v| v.abs() < 1e-14));
    }
}

#[test]
fn reruns_produce_identical_bytes() {
    for (cmd, cfg, files) in [
        ("particle", "particle_rk4.json", vec!["trajectory.csv", "report.json"]),
        ("ensemble", "ensemble.json", vec!["tracks.csv", "frame.json", "report.json"]),
        ("resolve", "resolve.json", vec!["resolved.csv", "phase_points.csv", "report.json"]),
    ] {
        let a = TempDir::new().unwrap();
        let b = TempDir::new().unwrap();
        for d in [&a, &b] {
            let o = run(&[cmd, "--config", &example(cfg)], d.path());
            assert_eq!(o.status.code(), Some(0), "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
        }
        for f in files {
            assert_eq!(
                fs::read(a.path().join(f)).unwrap(),
                fs::read(b.path().join(f)).unwrap(),
                "{cmd}/{f} differs between runs"
            );
        }
    }
}

#[test]
fn seed_flag_overrides_config_and_is_recorded() {
    let dir = TempDir::new().unwrap();
    let o = run(&["ensemble", "--config", &example("ensemble.json"), "--seed", "77"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(report(dir.path())["seed"], 77);
    let frame: Value = serde_json::from_slice(&fs::read(dir.path().join("frame.json")).unwrap()).unwrap();
    assert_eq!(frame["seed"], 77);
}

#[test]
fn failed_invariant_exits_with_one() {
    let dir = TempDir::new().unwrap();
    // Past tau_bar = 0.5 the truncation defect reaches the checked block.
    let cfg = write_config(
        &dir,
        "m.json",
        r#"{"n": 8, "m": 1, "tau_bar_max": 40, "steps": 4,
            "packets": [{"x0": 0, "p0": 0}, {"x0": 0, "p0": 0}, {"x0": 0, "p0": 0}], "shots": 100}"#,
    );
    let o = run(&["matmech", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stdout));
    let r = report(dir.path());
    assert_eq!(r["passed"], false);
    assert!(r["checks"].as_array().unwrap().iter().any(|c| c["passed"] == false));
}

#[test]
fn string_command_writes_every_node() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "s.json", r#"{"m": 0.5, "n_tau": 9, "n_sigma": 7}"#);
    let o = run(&["string", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let csv = fs::read_to_string(dir.path().join("worldsheet.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 9 * 7);
    let meta: Value = serde_json::from_slice(&fs::read(dir.path().join("worldsheet.json")).unwrap()).unwrap();
    assert_eq!(meta["header"]["columns"].as_array().unwrap().len(), 14);
    assert!(!dir.path().join("reduced.csv").exists());
}
