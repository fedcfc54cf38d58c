use std::path::PathBuf;
use std::process::Command;

use mmf_cli::{run, EXIT_ERROR, EXIT_FOUND, EXIT_NONE};

fn spec(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "core", "specs", name].iter().collect();
    p.to_string_lossy().into_owned()
}

fn drive(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut full = vec!["mmf"];
    full.extend_from_slice(args);
    let code = run(full, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

#[test]
fn find_all_writes_one_file_per_model() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_string_lossy().into_owned();
    let (code, stdout, _) = drive(&["find", "--all", &spec("ceo.mmf"), "--out", &out, "--profile"]);
    assert_eq!(code, EXIT_FOUND);
    let models = std::fs::read_dir(dir.path())
        .unwrap()
        .filter(|e| e.as_ref().unwrap().file_name().to_string_lossy().starts_with("model_"))
        .count();
    assert!(stdout.contains(&format!("solutions: {models}")), "{stdout}");
    assert!(stdout.contains("prunedUnsat"));
    let first = std::fs::read_to_string(dir.path().join("model_001.json")).unwrap();
    let doc: serde_json::Value = serde_json::from_str(&first).unwrap();
    let keys: Vec<&String> = doc.as_object().unwrap().keys().collect();
    assert_eq!(keys, ["objects", "constraint", "witness", "mode"]);
}

#[test]
fn json_output_is_stable() {
    let a = drive(&["find", "--all", &spec("ceo.mmf")]).1;
    let b = drive(&["find", "--all", &spec("ceo.mmf")]).1;
    assert_eq!(a, b);
}

#[test]
fn check_first_reports_one_counterexample() {
    let (code, stdout, _) = drive(&["check", "--first", &spec("ceo_check.mmf")]);
    assert_eq!(code, EXIT_FOUND);
    assert!(stdout.contains("solutions: 1"));
    assert!(stdout.contains("\"violatedRule\": \"nonCeoWithoutManager\""), "{stdout}");
}

#[test]
fn unsat_spec_exits_one() {
    let (code, stdout, _) = drive(&["find", "--first", &spec("unsat.mmf")]);
    assert_eq!(code, EXIT_NONE);
    assert!(stdout.contains("solutions: 0"));
}

#[test]
fn errors_exit_two() {
    assert_eq!(drive(&["find", "/nonexistent/x.mmf"]).0, EXIT_ERROR);
    assert_eq!(drive(&["find", "--solver", "bogus", &spec("ceo.mmf")]).0, EXIT_ERROR);
    assert_eq!(drive(&["check", &spec("ceo.mmf")]).0, EXIT_ERROR);
    let (code, _, err) = drive(&["find", "--bogus-flag", &spec("ceo.mmf")]);
    assert_eq!(code, EXIT_ERROR);
    assert!(!err.is_empty());
}

#[test]
fn timeout_exits_two() {
    let (code, stdout, _) = drive(&["check", "--all", &spec("ceo5_check.mmf"), "--timeout-ms", "0"]);
    assert_eq!(code, EXIT_ERROR);
    assert!(stdout.contains("timed-out"));
}

#[test]
fn dot_output_has_edges() {
    let (code, stdout, _) = drive(&["find", "--first", "--format", "dot", &spec("ceo.mmf")]);
    assert_eq!(code, EXIT_FOUND);
    assert!(stdout.contains("digraph model"));
    assert!(stdout.contains("[label=\"ceo\"]"));
}

#[test]
fn oracle_compare_reports_equality() {
    let (code, stdout, _) = drive(&["oracle", &spec("ceo.mmf"), "--compare"]);
    assert_eq!(code, EXIT_FOUND);
    assert!(stdout.contains("compare: equal"), "{stdout}");
    let (code, stdout, _) = drive(&["oracle", &spec("ceo_check.mmf"), "--compare", "--check"]);
    assert_eq!(code, EXIT_FOUND);
    assert!(stdout.contains("compare: equal"), "{stdout}");
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_mmf");
    let st = Command::new(bin).args(["find", "--first", &spec("unsat.mmf")]).output().unwrap();
    assert_eq!(st.status.code(), Some(EXIT_NONE));
    let st = Command::new(bin).args(["find", "--first", &spec("ceo.mmf")]).output().unwrap();
    assert_eq!(st.status.code(), Some(EXIT_FOUND));
}
