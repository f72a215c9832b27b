//! End-to-end tests of the command-line interface: determinism of the
//! emitted CSV artifacts, exit codes, and config-file handling.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qlanczos"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn oracle_defaults_exit_zero() {
    let out = run(&["oracle"]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("-3.34355957741626"), "stdout: {text}");
    // provenance header carries the full configuration
    assert!(text.lines().any(|l| l.starts_with('#') && l.contains("sites")));
}

#[test]
fn qite_negated_reaches_minus_one_point_six() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trace.csv");
    let out = run(&[
        "qite",
        "--initial",
        "110",
        "--negate-h",
        "--steps",
        "30",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    let text = fs::read_to_string(&path).unwrap();
    let last = text.lines().rev().find(|l| !l.starts_with('#')).unwrap();
    let energy: f64 = last.split(',').nth(2).unwrap().trim().parse().unwrap();
    assert!((energy - (-1.6)).abs() < 0.01, "final energy {energy}");
}

#[test]
fn same_config_and_seed_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let args = |path: &Path| {
        vec![
            "spectrum".to_string(),
            "--mode".into(),
            "shots".into(),
            "--shots".into(),
            "512".into(),
            "--runs".into(),
            "1".into(),
            "--seed".into(),
            "42".into(),
            "--out".into(),
            path.to_str().unwrap().into(),
        ]
    };
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let out_a = bin().args(args(&a)).output().unwrap();
    let out_b = bin().args(args(&b)).output().unwrap();
    assert_eq!(out_a.status.code(), Some(0), "stderr: {}", stderr_of(&out_a));
    assert_eq!(out_b.status.code(), Some(0));
    let bytes_a = fs::read(&a).unwrap();
    let bytes_b = fs::read(&b).unwrap();
    assert!(!bytes_a.is_empty());
    assert_eq!(bytes_a, bytes_b, "same config + seed must be byte-identical");
    // scan diagnostics sit next to the spectrum and are deterministic too
    let scan_a = fs::read(dir.path().join("a-scan.csv")).unwrap();
    let scan_b = fs::read(dir.path().join("b-scan.csv")).unwrap();
    assert_eq!(scan_a, scan_b);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    fs::write(&cfg, "sites = 3\ncoupling = 0.6\nsteps = 7\n").unwrap();
    let a = dir.path().join("a.csv");
    let out = run(&[
        "qite",
        "--config",
        cfg.to_str().unwrap(),
        "--initial",
        "100",
        "--steps",
        "9",
        "--out",
        a.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    let text = fs::read_to_string(&a).unwrap();
    // 9 steps from the flag win over 7 from the file: rows 0..=9
    let rows = text.lines().filter(|l| !l.starts_with('#')).count();
    assert_eq!(rows, 11, "header row plus 10 samples, got:\n{text}");
    assert!(text.lines().any(|l| l.starts_with('#') && l.contains("steps = 9")));
}

#[test]
fn validation_failures_exit_two() {
    // malformed state spec
    let out = run(&["qite", "--initial", "+1x0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("offset"), "stderr: {}", stderr_of(&out));

    // malformed config file
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.conf");
    fs::write(&cfg, "sites = three\n").unwrap();
    let out = run(&["oracle", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "stderr: {}", stderr_of(&out));

    // invalid parameter
    let out = run(&["oracle", "--sites", "0"]);
    assert_eq!(out.status.code(), Some(2));

    // unknown measurement mode
    let out = run(&["spectrum", "--mode", "psychic"]);
    assert_eq!(out.status.code(), Some(2));

    // evolve from a missing spectrum file
    let out = run(&["evolve", "--spectrum", "/nonexistent/spec.csv", "--transition", "100:010"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn numerical_failure_exits_three() {
    // a huge imaginary-time step makes the expansion factor nonpositive
    let out = run(&["qite", "--initial", "100", "--dtau", "50"]);
    assert_eq!(out.status.code(), Some(3), "stderr: {}", stderr_of(&out));
}

#[test]
fn no_partial_file_on_failure() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trace.csv");
    let out = run(&[
        "qite",
        "--initial",
        "100",
        "--dtau",
        "50",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(!path.exists(), "failed run must not leave an output file");
}

#[test]
fn evolve_series_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.csv");
    let out = run(&["spectrum", "--out", spec.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    let series = dir.path().join("series.csv");
    let out = run(&[
        "evolve",
        "--spectrum",
        spec.to_str().unwrap(),
        "--transition",
        "100:010",
        "--samples",
        "50",
        "--out",
        series.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    let text = fs::read_to_string(&series).unwrap();
    let mut data = text.lines().filter(|l| !l.starts_with('#'));
    let header = data.next().unwrap();
    assert!(header.starts_with("t,"), "header: {header}");
    let first = data.next().unwrap();
    // the transition probability starts at zero and the deviation column
    // against the oracle stays tiny
    let fields: Vec<f64> = first.split(',').map(|x| x.trim().parse().unwrap()).collect();
    assert!(fields[1].abs() < 1e-12);
    assert_eq!(data.count(), 49);
}
