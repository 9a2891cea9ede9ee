use std::path::Path;
use std::process::{Command, Output};

fn menger(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_menger")).args(args).output().expect("binary runs")
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn gen_writes_a_loadable_measure() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = menger(&["gen", "--measure", "perturbed:amplitude=0.001/circle:n=30,radius=0.5", "--seed", "4", "--out", out]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let file = dir.path().join("measure.json");
    let m = menger::Measure::load(&file).unwrap();
    assert_eq!(m.len(), 30);
    let o = menger(&["perm", "--measure", file.to_str().unwrap(), "--t", "0"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let expected = menger::permutations::perm_self(menger::Kernel::Finite(0.0), &m, 0.0, menger::Reduction::default());
    assert_eq!(v["value"].as_f64().unwrap(), expected.value);
}

#[test]
fn curvature_and_perm_agree() {
    let o = menger(&["curv", "--measure", "cantor4:level=2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("PASS identity_gap"));
}

#[test]
fn lattice_and_corona_dumps() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert!(menger(&["lattice", "--measure", "segment:n=40", "--out", out]).status.success());
    let lattice = read_json(&dir.path().join("lattice.json"));
    assert!(lattice["cubes"].as_array().unwrap().len() > 40);
    assert!(menger(&["corona", "--measure", "segment:n=40", "--out", out]).status.success());
    let corona = read_json(&dir.path().join("corona.json"));
    let trees = corona["trees"].as_array().unwrap();
    assert_eq!(trees.len(), 1);
    assert!(trees[0]["stop"].as_array().unwrap().is_empty());
}

#[test]
fn graph_fit_writes_curve_and_intervals() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = menger(&["graph-fit", "--measure", "graph:n=64,slope=0.2", "--params", r#"{"alpha":1e8}"#, "--samples", "200", "--out", out]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("graph.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#') && !l.is_empty()).collect();
    assert!(rows.len() >= 200);
    assert!(rows.iter().all(|r| r.split(',').count() == 2));
    let intervals = read_json(&dir.path().join("intervals.json"));
    assert!(!intervals["intervals"].as_array().unwrap().is_empty());
}

#[test]
fn report_runs_shipped_specs_in_both_formats() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = menger(&["report", "ac04", "--out", out]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("PASS ac04-zero-lines"));
    let report = read_json(&dir.path().join("ac04-zero-lines.json"));
    assert_eq!(report["passed"], true);
    let o = menger(&["report", "ac04", "--format", "csv", "--out", out]);
    assert!(o.status.success());
    assert!(dir.path().join("ac04-zero-lines-checks.csv").is_file());
    let spec = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../specs/ac12-cantor-growth.json");
    assert!(menger(&["report", spec.to_str().unwrap(), "--workers", "1"]).status.success());
    let list = menger(&["report", "--list"]);
    assert_eq!(String::from_utf8_lossy(&list.stdout).lines().count(), 16);
}

#[test]
fn single_worker_reports_are_reproducible() {
    let strip = |o: Output| {
        let mut v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
        v.as_object_mut().unwrap().remove("timings");
        v
    };
    let a = strip(menger(&["report", "ac07", "--workers", "1"]));
    let b = strip(menger(&["report", "ac07", "--workers", "1"]));
    assert_eq!(a, b);
}

#[test]
fn exit_codes() {
    assert!(menger(&["scan-sign", "--t", "-3,0,1", "--samples", "2000"]).status.success());
    assert!(menger(&["cantor-growth", "--max-level", "3"]).status.success());
    assert!(menger(&["bilip", "--measure", "cantor4:level=2"]).status.success());
    assert!(menger(&["verify", "--measure", "graph:n=20,slope=0.2"]).status.success());
    assert!(menger(&["mv-check", "--measure", "segment:n=50", "--eps", "0.05,0.1"]).status.success());
    assert!(menger(&["sio", "--measure", "circle:n=40,radius=0.5", "--eps", "0.1,0.2"]).status.success());
    assert!(menger(&["t0-bracket", "--measure", "graph:n=32,slope=0.2"]).status.success());
    assert!(menger(&["c1-estimate", "--theta", "0.5", "--samples", "2000"]).status.success());
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("curved.json");
    std::fs::write(
        &spec,
        r#"{"name":"curved","experiment":{"kind":"collinearity","measures":[{"kind":"circle","n":10,"radius":1.0}],"ts":[1.0]}}"#,
    )
    .unwrap();
    assert_eq!(menger(&["report", spec.to_str().unwrap()]).status.code(), Some(1));
    let unknown = menger(&["report", "no-such-spec"]);
    assert_eq!(unknown.status.code(), Some(2));
    let bad_measure = menger(&["perm", "--measure", "spiral:n=3"]);
    assert_eq!(bad_measure.status.code(), Some(2));
    let too_deep = menger(&["cantor-growth", "--max-level", "6"]);
    assert_eq!(too_deep.status.code(), Some(2));
}
