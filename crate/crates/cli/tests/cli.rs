use std::path::Path;
use std::process::{Command, Output};

fn nodal_lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nodal-lab")).args(args).output().expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn gen_reports_icosphere_counts() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = dir.path().join("s.off");
    let out = nodal_lab(&["gen", "--shape", "icosphere", "--depth", "4", "--out", path(&mesh)]);
    assert_eq!(out.status.code(), Some(0));
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["vertices"], 2562);
    assert_eq!(summary["euler_characteristic"], 2);
    assert!(mesh.exists());
}

#[test]
fn passing_check_exits_zero_and_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("tube.json");
    let out =
        nodal_lab(&["check", "nodal-tube", "--mode", "torus:kx=2,ky=0,phase=0", "--depth", "3", "--out", path(&json)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(report["pass_all"], true);
    let csv = std::fs::read_to_string(dir.path().join("tube.csv")).unwrap();
    assert!(csv.starts_with("x,lhs,rhs,slack,pass"));
}

#[test]
fn violated_check_exits_one() {
    // a tail constant far above the fitted one must break the bound
    let out = nodal_lab(&["check", "tail", "--mode", "torus:kx=2,ky=0,phase=0", "--depth", "3", "--c", "50"]);
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn bad_input_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, "{\"bogus\": 1}").unwrap();
    let out = nodal_lab(&["check", "boundary", "--config", path(&cfg)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));

    assert_eq!(nodal_lab(&["suite", "nope"]).status.code(), Some(2));
    assert_eq!(nodal_lab(&["check", "tail", "--xi", "1.5"]).status.code(), Some(2));
}

#[test]
fn fit_reads_saved_tail_reports() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("tail.json");
    let run = nodal_lab(&["check", "tail", "--mode", "torus:kx=2,ky=0,phase=0", "--depth", "3", "--out", path(&json)]);
    assert_eq!(run.status.code(), Some(0));
    let fit = nodal_lab(&["fit", "--target", "tail-c", "--report", path(&json)]);
    assert_eq!(fit.status.code(), Some(0), "{}", String::from_utf8_lossy(&fit.stderr));
    let out: serde_json::Value = serde_json::from_slice(&fit.stdout).unwrap();
    assert!(out["value"].as_f64().unwrap() > 0.0);
    let wrong = nodal_lab(&["fit", "--target", "density-c", "--report", path(&json)]);
    assert_eq!(wrong.status.code(), Some(2));
}
