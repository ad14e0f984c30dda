use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use roughscat::harness::{load_dataset, read_csv, CheckReport, CHECK_NAMES, SNAPSHOT_POINTS};
use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_roughscat"))
}

fn run(args: &[&str], dir: &Path) -> Output {
    bin().args(args).current_dir(dir).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SMALL: &str = r#"{
    "profile": "example1",
    "schedule": [1, 3],
    "incidence": ["pi/3", 0],
    "n_f": 16,
    "delta": 0.03,
    "seed": 5,
    "m": 6,
    "mesh": {"below": 48},
    "trace": {"kind": "quadrature"}
}"#;

#[test]
fn forward_flat_is_zero_and_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "flat.json", r#"{"profile": "flat", "schedule": "odd(2)", "incidence": [0, "pi/3"], "n_f": 32, "mesh": {"below": 32}}"#);
    for out in ["a", "b"] {
        let o = run(&["forward", "--config", &cfg, "--out", out], dir.path());
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let names: Vec<_> = fs::read_dir(dir.path().join("a")).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(names.len(), 4 + 1 + 1);
    for name in names {
        let a = fs::read(dir.path().join("a").join(&name)).unwrap();
        let b = fs::read(dir.path().join("b").join(&name)).unwrap();
        assert_eq!(a, b, "{name:?}");
    }
    let (_, header, rows) = read_csv(&dir.path().join("a/farfield_k01_d01.csv")).unwrap();
    assert_eq!(header, ["angle", "re", "im"]);
    assert_eq!(rows.len(), 33);
    assert!(rows.iter().all(|r| r[1].abs() <= 1e-12 && r[2].abs() <= 1e-12));
}

#[test]
fn forward_example3_matches_fine_reference() {
    let dir = tempfile::tempdir().unwrap();
    // the default n = 128 is 7.8e-4 away from the reference for this profile
    let coarse = write(dir.path(), "c.json", r#"{"profile": "example3", "schedule": [1], "incidence": [0], "n_f": 64, "mesh": {"below": 256}}"#);
    let fine = write(dir.path(), "f.json", r#"{"profile": "example3", "schedule": [1], "incidence": [0], "n_f": 64, "mesh": {"below": 512}}"#);
    assert!(run(&["forward", "--config", &coarse, "--out", "c"], dir.path()).status.success());
    assert!(run(&["forward", "--config", &fine, "--out", "f"], dir.path()).status.success());
    let (hc, _, c) = read_csv(&dir.path().join("c/farfield_k00_d00.csv")).unwrap();
    let (hf, _, f) = read_csv(&dir.path().join("f/farfield_k00_d00.csv")).unwrap();
    assert_ne!(hc, hf);
    let scale = f.iter().map(|r| r[1].hypot(r[2])).fold(0.0, f64::max);
    let diff = c.iter().zip(&f).map(|(a, b)| (a[1] - b[1]).hypot(a[2] - b[2])).fold(0.0, f64::max);
    assert!(diff <= 1e-6 * scale, "{diff:e} vs {scale:e}");
}

#[test]
fn synthesize_invert_verify_and_tamper() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "small.json", SMALL);
    let o = run(&["synthesize", "--config", &cfg, "--out", "syn"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let o = run(&["synthesize", "--config", &cfg, "--out", "syn2", "--seed", "6"], dir.path());
    assert!(o.status.success());
    let a = load_dataset(&dir.path().join("syn/dataset.json")).unwrap();
    let b = load_dataset(&dir.path().join("syn2/dataset.json")).unwrap();
    assert_ne!(a.config_hash, b.config_hash);
    assert_eq!((a.measurements.seed, b.measurements.seed), (5, 6));
    assert_eq!(a.measurements.wavenumbers, b.measurements.wavenumbers);
    assert_eq!(a.measurements.angles, b.measurements.angles);
    assert_ne!(a.measurements.values, b.measurements.values);

    let o = run(
        &["invert", "--config", &cfg, "--dataset", "syn/dataset.json", "--out", "inv", "--threads", "1"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let inv = dir.path().join("inv");
    let rec: Value = serde_json::from_str(&fs::read_to_string(inv.join("reconstruction.json")).unwrap()).unwrap();
    let hash = rec["config_hash"].as_str().unwrap().to_string();
    assert_eq!(rec["dataset_config_hash"], a.config_hash.as_str());
    assert_eq!(rec["coefficients"].as_array().unwrap().len(), 6);
    assert_eq!(rec["stages"].as_array().unwrap().len(), 2);
    let log = fs::read_to_string(inv.join("iterations.ndjson")).unwrap();
    assert!(!log.is_empty());
    for line in log.lines() {
        let v: Value = serde_json::from_str(line).unwrap();
        assert_eq!(v["config_hash"], hash.as_str());
        assert!(v["err"].is_number());
    }
    for s in 0..2 {
        let (h, header, rows) = read_csv(&inv.join(format!("profile_stage{s:02}.csv"))).unwrap();
        assert_eq!(h, hash);
        assert_eq!(header, ["x1", "h_true", "h_reconstructed"]);
        assert_eq!(rows.len(), SNAPSHOT_POINTS);
        assert_eq!((rows[0][0], rows[400][0]), (-1.0, 1.0));
    }

    for sub in ["syn", "inv"] {
        let o = run(&["verify", sub], dir.path());
        assert!(o.status.success(), "{sub}: {}", String::from_utf8_lossy(&o.stdout));
    }
    let p = inv.join("profile_stage01.csv");
    let text = fs::read_to_string(&p).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    lines[200] = "0e0,0e0,0e0";
    fs::write(&p, lines.join("\n") + "\n").unwrap();
    let o = run(&["verify", "inv"], dir.path());
    assert!(!o.status.success());
    let report: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(report["problems"][0].as_str().unwrap().contains("profile_stage01.csv"));
}

#[test]
fn invert_rejects_mismatched_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "small.json", SMALL);
    assert!(run(&["synthesize", "--config", &cfg, "--out", "syn"], dir.path()).status.success());
    let other = write(dir.path(), "other.json", &SMALL.replace("[1, 3]", "[1, 5]"));
    let o = run(&["invert", "--config", &other, "--dataset", "syn/dataset.json", "--out", "inv"], dir.path());
    assert!(!o.status.success());
    assert!(stderr(&o).contains("schedule"), "{}", stderr(&o));
}

#[test]
fn config_errors_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    let empty = write(dir.path(), "e.json", r#"{"profile": "example1", "schedule": [], "incidence": [0]}"#);
    let o = run(&["synthesize", "--config", &empty, "--out", "x"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("schedule"));
    assert!(!dir.path().join("x").exists());

    let unknown = write(dir.path(), "u.json", "{\n  \"profile\": \"flat\",\n  \"schedule\": [1],\n  \"incidence\": [0],\n  \"colour\": 3\n}");
    let o = run(&["forward", "--config", &unknown, "--out", "x"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let msg = stderr(&o);
    assert!(msg.contains("line 5") && msg.contains("colour"), "{msg}");

    let o = run(&["forward", "--config", "missing.json", "--out", "x"], dir.path());
    assert!(!o.status.success());
}

fn check(args: &[&str]) -> (Output, CheckReport) {
    let dir = tempfile::tempdir().unwrap();
    let o = run(args, dir.path());
    let report: CheckReport = serde_json::from_slice(&o.stdout).unwrap();
    (o, report)
}

#[test]
fn check_passes_and_localizes_injected_fault() {
    let (o, clean) = check(&["check"]);
    assert!(o.status.success(), "{clean:?}");
    assert!(clean.passed && clean.first_failure.is_none());
    let names: Vec<&str> = clean.checks.iter().map(|c| c.name.as_str()).collect();
    assert_eq!(names, CHECK_NAMES);

    let (o, faulty) = check(&["check", "--inject-k2-offset", "1.0"]);
    assert!(!o.status.success());
    assert_eq!(faulty.first_failure.as_deref(), Some("self_convergence"));
    let by_name = |n: &str| faulty.checks.iter().find(|c| c.name == n).unwrap();
    assert!(by_name("flat_null").passed);
    assert!(!by_name("self_convergence").passed);
    let names: Vec<&str> = faulty.checks.iter().map(|c| c.name.as_str()).collect();
    assert_eq!(names, CHECK_NAMES);
}
