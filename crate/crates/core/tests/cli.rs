use std::path::Path;
use std::process::{Command, Output};

use glh_core::io;
use glh_core::spectra::Verdict;
use tempfile::TempDir;

fn glh(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_glh")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn path(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_string_lossy().into_owned()
}

fn build(dir: &TempDir, circuit: &str, idle: &str, out: &str) -> String {
    let file = path(dir, out);
    let o = glh(&["build-clock", "--catalog", circuit, "--idle", idle, "--out", &file]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    file
}

#[test]
fn catalog_lists_toy_circuits() {
    let o = glh(&["catalog"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    for name in ["accept", "reject", "coin"] {
        assert!(text.contains(name), "{text}");
    }
    assert!(text.lines().filter(|l| !l.trim().is_empty()).count() >= 4);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(glh(&["bogus"]).status.code(), Some(2));
    assert_eq!(glh(&["decide"]).status.code(), Some(2));
}

#[test]
fn missing_file_is_an_io_error() {
    assert_eq!(glh(&["decide", "--instance", "/nonexistent/x.json"]).status.code(), Some(9));
}

#[test]
fn malformed_artifact_is_a_format_error() {
    let dir = TempDir::new().unwrap();
    let bad = path(&dir, "bad.json");
    std::fs::write(&bad, "{\"format\":\"glh\",\"version\":1,\"kind\":\"instance\",\"body\":{}}").unwrap();
    assert_eq!(glh(&["decide", "--instance", &bad]).status.code(), Some(8));
}

#[test]
fn decide_accepting_clock_is_yes() {
    let dir = TempDir::new().unwrap();
    let inst = build(&dir, "accept", "2", "inst.json");
    let report = path(&dir, "decision.json");
    let o = glh(&["decide", "--instance", &inst, "--report", &report]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("YES"));
    let d: glh_core::spectra::DecisionReport = io::read_artifact(Path::new(&report), "decision-report").unwrap();
    assert_eq!(d.verdict, Verdict::Yes);
}

#[test]
fn decide_rejecting_clock_is_no() {
    let dir = TempDir::new().unwrap();
    let inst = build(&dir, "reject", "2", "inst.json");
    let o = glh(&["decide", "--instance", &inst]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("NO"));
}

#[test]
fn sampling_is_deterministic_per_seed() {
    let dir = TempDir::new().unwrap();
    let inst = build(&dir, "coin", "1", "inst.json");
    let a = glh(&["sample", "--state", &inst, "--shots", "200", "--seed", "7"]);
    let b = glh(&["sample", "--state", &inst, "--shots", "200", "--seed", "7"]);
    let c = glh(&["sample", "--state", &inst, "--shots", "200", "--seed", "8"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(stdout(&a), stdout(&b));
    assert_ne!(stdout(&a), stdout(&c));
    assert!(stdout(&a).contains("# histogram"));
}

#[test]
fn lift_then_decide() {
    let dir = TempDir::new().unwrap();
    let inst = build(&dir, "accept", "2", "inst.json");
    let lifted = path(&dir, "lifted.json");
    let o = glh(&["lift", "--instance", &inst, "--c", "2", "--out", &lifted]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let l = io::read_instance(Path::new(&lifted)).unwrap();
    assert_eq!(l.c, 2);
    assert!(stdout(&glh(&["decide", "--instance", &lifted])).contains("YES"));
}

#[test]
fn reduce_certify_round_trip() {
    let dir = TempDir::new().unwrap();
    let inst = build(&dir, "reject", "2", "inst.json");
    let (out, cert, h, hp) = (path(&dir, "r.json"), path(&dir, "c.json"), path(&dir, "h.json"), path(&dir, "hp.json"));
    let o = glh(&["reduce", "--instance", &inst, "--out", &out, "--cert", &cert, "--h", &h, "--hprime", &hp]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let o = glh(&["certify", "--h", &h, "--hprime", &hp, "--cert", &cert]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let r = io::read_instance(Path::new(&out)).unwrap();
    assert!(r.hamiltonian.locality() <= 2);
    assert!(stdout(&glh(&["decide", "--instance", &out])).contains("NO"));
}

#[test]
fn report_renders_any_artifact() {
    let dir = TempDir::new().unwrap();
    let inst = build(&dir, "accept", "1", "inst.json");
    let o = glh(&["report", &inst]);
    assert_eq!(o.status.code(), Some(0));
    assert!(!stdout(&o).is_empty());
}

#[test]
fn direct_backend_writes_a_report() {
    let dir = TempDir::new().unwrap();
    let out = path(&dir, "report.json");
    let o = glh(&["build-clock", "--catalog", "accept", "--idle", "3", "--backend", "direct", "--out", &out]);
    assert_eq!(o.status.code(), Some(0));
    let (kind, _) = io::split_artifact(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(kind, "clock-report");
}
