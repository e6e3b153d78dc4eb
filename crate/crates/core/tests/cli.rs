use std::fs;
use std::path::Path;
use std::process::Command;

use serde_json::Value;

fn run(cmd: &str, config: &str, dir: &Path, extra: &[&str]) -> (i32, String) {
    let cfg = dir.join("config.json");
    fs::write(&cfg, config).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_fracpoincare"))
        .arg(cmd)
        .arg(&cfg)
        .arg("--output-dir")
        .arg(dir.join("out"))
        .args(extra)
        .output()
        .unwrap();
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stderr).into_owned())
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn whitney_square_is_sound() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _) = run("whitney", r#"{"domain": {"kind": "unit-square"}, "grid": {"j_max": 8}}"#, dir.path(), &[]);
    assert_eq!(code, 0);
    let m = read_json(&dir.path().join("out/manifest.json"));
    assert_eq!(m["summary"]["violations"], 0);
    assert_eq!(m["summary"]["overlaps"], 0);
    assert_eq!(m["parameters"]["grid"]["j_max"], 8);
    assert_eq!(m["command"], "whitney");
    assert!(dir.path().join("out/whitney.csv").exists());
}

#[test]
fn missing_delta_is_a_schema_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"domain": {"kind": "unit-square"}, "exponents": {"p": 2, "q": 2, "tau": 0.5}, "grid": {"h_grid": 0.125}}"#;
    let (code, stderr) = run("energy", cfg, dir.path(), &[]);
    assert_eq!(code, 2);
    let err: Value = serde_json::from_str(stderr.trim()).unwrap();
    assert_eq!(err["path"], "exponents.delta");
    assert_eq!(read_json(&dir.path().join("out/error.json"))["path"], "exponents.delta");
}

#[test]
fn point_outside_domain_is_a_numeric_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"domain": {"kind": "unit-square"}, "grid": {"h_grid": 0.0625}, "options": {"pairs": [[0.5, 0.5, 2.0, 2.0]]}}"#;
    let (code, _) = run("qh-dist", cfg, dir.path(), &[]);
    assert_eq!(code, 3);
}

#[test]
fn randomized_run_needs_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"domain": {"kind": "unit-square"}, "exponents": {"p": 2, "q": 2, "delta": 0.5, "tau": 0.5},
                  "grid": {"h_grid": 0.125}, "options": {"targets": {"count": 1}}}"#;
    let (code, stderr) = run("capacity", cfg, dir.path(), &[]);
    assert_eq!(code, 2);
    assert!(stderr.contains("solver.seed"));
    let (code, _) = run("capacity", cfg, dir.path(), &["--seed-override", "11"]);
    assert_eq!(code, 0);
    let m = read_json(&dir.path().join("out/manifest.json"));
    assert_eq!(m["parameters"]["solver"]["seed"], 11);
    assert_eq!(m["seed_override"], 11);
}

#[test]
fn sjohn_sweep_reports_slopes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"domain": {"kind": "mushroom", "side": 2, "radii": [0.25, 0.125, 0.0625, 0.03125], "sigma": 1.5, "h": 1},
                  "exponents": {"p": 2, "q": 3, "delta": 0.5, "tau": 0.5}}"#;
    let (code, _) = run("sharpness-sjohn", cfg, dir.path(), &[]);
    assert_eq!(code, 0);
    let s = read_json(&dir.path().join("out/sharpness_sjohn.json"));
    let run0 = &s["runs"][0];
    assert!((run0["fit"]["energy"]["slope"].as_f64().unwrap() - 2.0).abs() < 0.2);
    assert!((run0["fit"]["lhs"]["slope"].as_f64().unwrap() - 2.0).abs() < 0.15);
    assert_eq!(run0["verdict"]["verdict"], "violated");
    assert!((s["critical_q"].as_f64().unwrap() - 2.0).abs() < 1e-12);
}
