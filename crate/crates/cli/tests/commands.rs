use std::fs;
use std::io::Write;
use std::process::{Command, Output, Stdio};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_reluapprox"))
}

fn run(args: &[&str], dir: &std::path::Path) -> Output {
    bin().args(args).current_dir(dir).output().unwrap()
}

#[test]
fn construct_then_eval() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["construct", "--N", "4", "--grid-points", "20000", "--out", "net.json"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let meta: Value = serde_json::from_slice(&fs::read(dir.path().join("net.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["bound"].as_f64(), Some(0.125));
    assert_eq!(meta["pass"], Value::Bool(true));
    assert_eq!(meta["config"]["N"], 4);

    let mut child = bin()
        .args(["eval", "--network", "net.json"])
        .current_dir(dir.path())
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(b"0.25\n0.5\n1.0\n").unwrap();
    let out = child.wait_with_output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let vals: Vec<f64> = String::from_utf8(out.stdout)
        .unwrap()
        .lines()
        .map(|l| l.parse().unwrap())
        .collect();
    assert_eq!(vals.len(), 3);
    for (v, want) in vals.iter().zip([0.25, 0.0, 0.5]) {
        assert!((v - want).abs() < 1e-12, "{v} vs {want}");
    }
}

#[test]
fn config_file_and_flag_overlay() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("cfg.json"), r#"{"target":"zero","d":2,"N":9,"grid_points":64}"#).unwrap();
    let out = run(&["construct", "--config", "cfg.json", "--N", "4", "--out", "z.json"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let meta: Value = serde_json::from_slice(&fs::read(dir.path().join("z.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["config"]["N"], 4);
    assert_eq!(meta["l1"].as_f64(), Some(0.0));
}

#[test]
fn usage_errors_exit_2_with_record() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["construct", "--N", "4", "--alpha", "1.5"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let rec: Value = serde_json::from_slice(out.stderr.trim_ascii()).unwrap();
    assert_eq!(rec["exit_code"], 2);
    assert_eq!(rec["config"]["alpha"].as_f64(), Some(1.5));

    let out = run(&["check", "--suite", "nope"], dir.path());
    assert_eq!(out.status.code(), Some(2));

    fs::write(dir.path().join("bad.json"), "{\"N\": 4,\n \"bogus\": 1}").unwrap();
    let out = run(&["construct", "--config", "bad.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let rec: Value = serde_json::from_slice(out.stderr.trim_ascii()).unwrap();
    assert_eq!(rec["error"], "parse");
}

#[test]
fn infeasible_budget_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &["construct", "--N", "4", "--delta-target", "1e-300", "--grid-points", "1000", "--out", "x.json"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("x.error.json").exists());
}

#[test]
fn sweep_writes_csv_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &["sweep", "--alpha", "0.5", "--N-list", "2,4,8", "--grid-points", "100000", "--out", "s.csv"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("s.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert!(lines[0].starts_with("# reluapprox "));
    assert_eq!(lines[1], reluapprox_cli::commands::SWEEP_HEADER);
    assert_eq!(lines.len(), 5);
    let summary: Value = serde_json::from_slice(&fs::read(dir.path().join("s.summary.json")).unwrap()).unwrap();
    assert_eq!(summary["rate_defined"], Value::Bool(true));
    assert!(summary["fit"]["slope"].as_f64().unwrap() < -1.0);
}

#[test]
fn cost_table_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["cost", "--N-list", "16,32", "--out", "c.csv"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let csv = fs::read_to_string(dir.path().join("c.csv")).unwrap();
    assert_eq!(csv.lines().nth(1), Some(reluapprox::cost::CSV_HEADER));
    assert!(csv.lines().skip(2).all(|l| l.split(',').count() == 10));
}

#[test]
fn check_filtered_suite_writes_junit() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["check", "--suite", "lemma2", "--m", "3", "--n", "2", "--junit", "r.xml"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(stdout.lines().filter(|l| l.starts_with("PASS ")).count(), 5);
    let xml = fs::read_to_string(dir.path().join("r.xml")).unwrap();
    assert!(xml.contains("failures=\"0\""));
}
