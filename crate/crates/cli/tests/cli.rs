//! The binary end to end: exit codes, reports against the schema, saved
//! transcripts, and workspace diagnostics.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bilayer"))
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().unwrap()
}

fn run_with_input(dir: &Path, args: &[&str], input: &str) -> Output {
    let mut child = bin().current_dir(dir).args(args).stdin(Stdio::piped()).stdout(Stdio::piped()).spawn().unwrap();
    child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn schema() -> jsonschema::Validator {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../docs/report.schema.json");
    let schema: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    jsonschema::validator_for(&schema).unwrap()
}

/// Runs with `--json`, checks the report against the schema and returns it.
fn report(dir: &Path, args: &[&str], code: i32) -> Value {
    let json = dir.join("report.json");
    let mut all: Vec<&str> = args.to_vec();
    all.extend(["--json", json.to_str().unwrap()]);
    let out = run(dir, &all);
    assert_eq!(out.status.code(), Some(code), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    let value: Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    let errors: Vec<String> = schema().iter_errors(&value).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{args:?}: {errors:?}");
    value
}

#[test]
fn oq_finds_the_triple() {
    let dir = tempfile::tempdir().unwrap();
    let r = report(dir.path(), &["oq", "error(1,3)", "error(1,2)"], 0);
    assert_eq!(r["verdict"], "found");
    assert_eq!(r["witness"]["format"], "triple");
    assert!(r["witness"]["text"].as_str().unwrap().contains("H * = *"));
}

#[test]
fn solve_reports_an_exhausted_search() {
    let dir = tempfile::tempdir().unwrap();
    let r = report(dir.path(), &["solve", "error(1,2)", "error(1,3)", "--depth", "3"], 0);
    assert_eq!(r["verdict"], "none");
    assert_eq!(r["certificate"]["mode"], "exhausted");
    assert_eq!(r["certificate"]["depth"], 3);
    assert!(r["certificate"]["positions"].as_u64().unwrap() > 0);
}

#[test]
fn budget_exhaustion_is_inconclusive_with_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let r = report(dir.path(), &["solve", "error(1,2)", "error(1,3)", "--depth", "3", "--budget", "2"], 2);
    assert_eq!(r["verdict"], "inconclusive");
    let r = report(dir.path(), &["verify", "error(2,4)", "error(1,2)", "collapse_chain(2,4)", "--budget", "1"], 2);
    assert_eq!(r["verdict"], "inconclusive");
}

#[test]
fn verify_catalog_witness_and_counterplay() {
    let dir = tempfile::tempdir().unwrap();
    let r = report(dir.path(), &["verify", "error(2,4)", "error(1,2)", "collapse_chain(2,4)"], 0);
    assert_eq!(r["verdict"], "winning");
    assert!(r["plays"].as_u64().unwrap() > 0);
    let r = report(dir.path(), &["--output", "out", "verify", "error(1,3)", "error(1,2)", "copy"], 1);
    assert_eq!(r["verdict"], "counterplay");
    let path = dir.path().join(r["transcript"]["path"].as_str().unwrap());
    let saved = std::fs::read_to_string(&path).unwrap();
    assert_eq!(saved, r["transcript"]["text"].as_str().unwrap());
    // Content-addressed: the same counterplay lands in the same file.
    let again = report(dir.path(), &["--output", "out", "verify", "error(1,3)", "error(1,2)", "copy"], 1);
    assert_eq!(again["transcript"]["path"], r["transcript"]["path"]);
}

#[test]
fn poset_chain_and_duplicates() {
    let dir = tempfile::tempdir().unwrap();
    let dot = dir.path().join("p.dot");
    let r = report(
        dir.path(),
        &["poset", "id(2)", "error(1,3)", "error(1,2)", "--depth", "2", "--dot", dot.to_str().unwrap()],
        0,
    );
    let text = std::fs::read_to_string(&dot).unwrap();
    assert_eq!(r["poset"]["dot"].as_str().unwrap(), text);
    assert!(text.contains("\"error(1,2)\" -> \"error(1,3)\";"));
    assert!(text.contains("\"error(1,3)\" -> \"id(2)\";"));
    assert_eq!(r["poset"]["matrix"][0][0]["relation"], "reducible");
    assert_eq!(r["poset"]["violations"].as_array().unwrap().len(), 0);

    let single = report(dir.path(), &["poset", "error(1,2)"], 0);
    assert_eq!(single["poset"]["dot"], "digraph {\n  \"error(1,2)\";\n}\n");

    let out = run(dir.path(), &["poset", "error(1,2)", "error(1,2)"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("twice"));
}

#[test]
fn workspace_diagnostics_exit_1_with_position() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("ws.bl"), "def e = error(1,3)\ndef bad = error(0,2)\n").unwrap();
    let out = run(dir.path(), &["-w", "ws.bl", "show", "e"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("ws.bl:2:11:"), "{err}");
}

#[test]
fn workspace_names_resolve() {
    let dir = tempfile::tempdir().unwrap();
    let ws = "def e = error(1,3)\ndef j = join(e, error(1,2))\nstrategy t = easy_direction(1,2,3)\n";
    std::fs::write(dir.path().join("ws.bl"), ws).unwrap();
    let r = report(dir.path(), &["-w", "ws.bl", "verify", "e", "error(1,2)", "t"], 0);
    assert_eq!(r["verdict"], "winning");
    assert_eq!(r["source"], "e");
    let out = run(dir.path(), &["-w", "ws.bl", "show", "j"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&out.stdout).lines().count(), 3 + 2);
}

#[test]
fn play_then_replay_under_verify() {
    let dir = tempfile::tempdir().unwrap();
    let args =
        ["--output", "out", "play", "error(1,3)", "error(1,2)", "easy_direction(1,2,3)", "--transcript", "t.txt"];
    let out = run_with_input(dir.path(), &args, "* | {1}\n7\n0\n");
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("is illegal"), "{stdout}");
    assert!(stdout.contains("outcome: win"), "{stdout}");
    let t = std::fs::read_to_string(dir.path().join("t.txt")).unwrap();
    let saved = std::fs::read_dir(dir.path().join("out/transcripts")).unwrap().count();
    assert_eq!(saved, 1);

    let r = report(
        dir.path(),
        &["verify", "error(1,3)", "error(1,2)", "easy_direction(1,2,3)", "--transcript", "t.txt"],
        0,
    );
    assert_eq!(r["verdict"], "replayed");
    assert_eq!(r["transcript"]["text"].as_str().unwrap(), t);
    // Another Nimue move than the strategy would make.
    let forged: String = t
        .lines()
        .map(|l| match l.strip_prefix("round 0 nimue ") {
            Some("{0}") => "round 0 nimue {1}\n".to_string(),
            Some(_) => "round 0 nimue {0}\n".to_string(),
            None => format!("{l}\n"),
        })
        .collect();
    std::fs::write(dir.path().join("forged.txt"), forged).unwrap();
    let r = report(
        dir.path(),
        &["verify", "error(1,3)", "error(1,2)", "easy_direction(1,2,3)", "--transcript", "forged.txt"],
        1,
    );
    assert_eq!(r["verdict"], "mismatch");
    let r = report(dir.path(), &["replay", "error(1,3)", "error(1,2)", "t.txt"], 0);
    assert_eq!(r["verdict"], "replayed");
}

#[test]
fn play_rejects_an_out_of_domain_opening() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_with_input(dir.path(), &["--output", "out", "play", "error(1,3)", "error(1,2)"], "* | {5}\n");
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("outcome: violation merlin 0"));
}

#[test]
fn check_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = report(dir.path(), &["check", "--seed", "9", "--cases", "30"], 0);
    let b = report(dir.path(), &["check", "--seed", "9", "--cases", "30"], 0);
    assert_eq!(a["verdict"], "passed");
    assert_eq!(a["checks"], b["checks"]);
    assert_eq!(a["checks"].as_array().unwrap().len(), 3);
}
