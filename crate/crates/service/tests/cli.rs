use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bizvor(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bizvor"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SMALL: [&str; 4] = ["--candidates", "90", "--regions", "3"];

#[test]
fn build_evolve_export() {
    let dir = tempfile::tempdir().unwrap();
    let out = bizvor(dir.path(), &[&["build-map", "--scenario", "s.json", "--seed", "4"][..], &SMALL].concat());
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("partners over 3 regions"));

    let out = bizvor(dir.path(), &["evolve", "--ticks", "5", "--scenario", "s.json"]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).starts_with("tick 5:"), "{}", stdout(&out));

    let out = bizvor(
        dir.path(),
        &["export-svg", "--scenario", "s.json", "--out", "m.svg", "--consistence-csv", "q.csv", "--kpi-csv", "k.csv"],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(fs::read_to_string(dir.path().join("m.svg")).unwrap().starts_with("<svg"));
    let q = fs::read_to_string(dir.path().join("q.csv")).unwrap();
    assert_eq!(q.lines().count(), 6);
    assert!(fs::read_to_string(dir.path().join("k.csv")).unwrap().starts_with("metric,value\n"));
}

#[test]
fn same_seed_same_file() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["a.json", "b.json"] {
        let args = [&["build-map", "--scenario", name, "--seed", "9"][..], &SMALL].concat();
        assert!(bizvor(dir.path(), &args).status.success());
        assert!(bizvor(dir.path(), &["evolve", "--ticks", "3", "--scenario", name]).status.success());
    }
    assert_eq!(fs::read(dir.path().join("a.json")).unwrap(), fs::read(dir.path().join("b.json")).unwrap());
}

#[test]
fn select_and_montecarlo() {
    let dir = tempfile::tempdir().unwrap();
    let out = bizvor(dir.path(), &["select", "--selector", "exhaustive", "--candidates", "45", "--regions", "3"]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(stdout(&out).lines().count(), 3);

    assert!(bizvor(dir.path(), &[&["build-map"][..], &SMALL].concat()).status.success());
    let out = bizvor(dir.path(), &["montecarlo", "--trials", "3", "--ticks", "4", "--out", "mc.json"]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).starts_with("3 trials x 4 ticks"));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("mc.json")).unwrap()).unwrap();
    assert_eq!(report["per_tick"].as_array().unwrap().len(), 4);
}

#[test]
fn classify_accepts_presets_and_notation() {
    let dir = tempfile::tempdir().unwrap();
    let out = bizvor(dir.path(), &["classify", "B/S", "--soups", "2", "--horizon", "20", "--size", "8"]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).starts_with("class I:"), "{}", stdout(&out));
    let out = bizvor(dir.path(), &["classify", "life", "--soups", "2", "--horizon", "50", "--size", "16", "--seed", "3"]);
    assert!(out.status.success(), "{}", stderr(&out));
}

#[test]
fn failures_exit_nonzero_with_one_line() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [&[&str]; 6] = [
        &["evolve", "--ticks", "1", "--scenario", "missing.json"],
        &["evolve"],
        &["teleport"],
        &["classify", "sparkle"],
        &["select", "--selector", "psychic"],
        &["evolve", "--ticks", "0"],
    ];
    for args in cases {
        let out = bizvor(dir.path(), args);
        assert!(!out.status.success(), "{args:?}");
        let err = stderr(&out);
        assert_eq!(err.trim_end().lines().count(), 1, "{args:?}: {err}");
        assert!(err.starts_with("error: "), "{err}");
    }
    fs::write(dir.path().join("v.json"), r#"{"format_version": 99}"#).unwrap();
    let out = bizvor(dir.path(), &["export-svg", "--scenario", "v.json"]);
    assert!(stderr(&out).contains("unsupported format version 99"));
}
