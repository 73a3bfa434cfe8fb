use serde_json::Value;
use std::path::Path;
use std::process::{Command, Output};

fn bin(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_helicity-lab")).args(args).current_dir(dir).output().expect("binary runs")
}

fn stdout_json(o: &Output) -> Value {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).expect("json on stdout")
}

fn stderr_json(o: &Output) -> Value {
    assert!(!o.status.success());
    serde_json::from_slice(&o.stderr).expect("json on stderr")
}

#[test]
fn beltrami_classical_helicity_is_two_pi() {
    let dir = tempfile::tempdir().unwrap();
    stdout_json(&bin(&["gen", "beltrami", "--n", "64", "--out", "b.vf3"], dir.path()));
    assert!(dir.path().join("b.vf3.json").exists());
    let v = stdout_json(&bin(&["helicity", "b.vf3", "--mode", "classical"], dir.path()));
    let h = v["helicity"].as_f64().unwrap();
    assert!((h - 2.0 * std::f64::consts::PI).abs() < 1e-10, "{h}");
}

#[test]
fn shear_shell_matrix_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    stdout_json(&bin(&["gen", "shear", "--n", "64", "--out", "s.vf3"], dir.path()));
    let o = bin(&["helicity", "s.vf3", "--mode", "shells"], dir.path());
    assert!(o.status.success());
    let csv = String::from_utf8(o.stdout).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("m,mp,value"));
    let mut rows = 0;
    for l in lines {
        let v: f64 = l.rsplit(',').next().unwrap().parse().unwrap();
        assert!(v.abs() <= 1e-12, "{l}");
        rows += 1;
    }
    assert_eq!(rows, 49);
}

#[test]
fn outputs_are_reproducible_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    for (name, seed) in [("a.vf3", "3"), ("b.vf3", "3"), ("c.vf3", "4")] {
        stdout_json(&bin(&["--seed", seed, "gen", "shear", "--n", "16", "--out", name], dir.path()));
    }
    let read = |n: &str| std::fs::read(dir.path().join(n)).unwrap();
    assert_eq!(read("a.vf3"), read("b.vf3"));
    assert_eq!(read("a.vf3.json"), read("b.vf3.json"));
    assert_ne!(read("a.vf3"), read("c.vf3"));
}

#[test]
fn usage_errors_are_json() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin(&["gen", "beltrami", "--bogus"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["error"], "usage");
}

#[test]
fn missing_file_is_a_json_error() {
    let dir = tempfile::tempdir().unwrap();
    let v = stderr_json(&bin(&["helicity", "missing.vf3"], dir.path()));
    assert_eq!(v["error"], "io");
}

#[test]
fn invalid_pipe_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let v = stderr_json(&bin(&["gen", "pipe", "--n", "16", "--lambda", "8", "--out", "p.vf3"], dir.path()));
    assert_eq!(v["error"], "unresolved");
}

#[test]
fn verify_geometry_suite_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin(&["verify", "--suite", "geometry"], dir.path());
    assert!(o.status.success());
    assert!(String::from_utf8(o.stdout).unwrap().starts_with("[PASS]  6"));
    let v = stderr_json(&bin(&["verify", "--suite", "nothing"], dir.path()));
    assert_eq!(v["error"], "invalid_params");
}

#[test]
fn mollified_and_generalized_modes() {
    let dir = tempfile::tempdir().unwrap();
    stdout_json(&bin(&["gen", "beltrami", "--n", "16", "--out", "b.vf3"], dir.path()));
    let v = stdout_json(&bin(
        &["helicity", "b.vf3", "--mode", "mollified", "--kernel", r#"{"kind":"gaussian","eps":0.01}"#],
        dir.path(),
    ));
    let h = v["values"][0]["helicity"].as_f64().unwrap();
    let expect = 2.0 * std::f64::consts::PI * (-0.01f64 * 0.01).exp();
    assert!((h - expect).abs() < 1e-10, "{h} vs {expect}");
    stdout_json(&bin(&["gen", "beltrami", "--n", "32", "--out", "b32.vf3"], dir.path()));
    let class_a = r#"{"kind":"classA","delta":0.25,"support":1.0}"#;
    let g = stdout_json(&bin(
        &["helicity", "b32.vf3", "--mode", "generalized", "--max-shell", "6", "--kernel", class_a],
        dir.path(),
    ));
    assert_eq!(g["report"]["verdict"], "well-defined");
    let h = g["report"]["estimate"].as_f64().unwrap();
    assert!((h - 2.0 * std::f64::consts::PI).abs() < 1e-10);
}

#[test]
fn flow_reports_deformation() {
    let dir = tempfile::tempdir().unwrap();
    stdout_json(&bin(&["gen", "beltrami", "--n", "16", "--out", "b.vf3"], dir.path()));
    let v = stdout_json(&bin(&["flow", "--bg", "b.vf3", "--t1", "0.05", "--steps", "4", "--n", "8"], dir.path()));
    assert_eq!(v["deformation"]["within_bound"], true);
    let e = stderr_json(&bin(&["flow", "--bg", "b.vf3", "--t1", "1.0", "--steps", "1", "--n", "8"], dir.path()));
    assert_eq!(e["error"], "cfl");
}
