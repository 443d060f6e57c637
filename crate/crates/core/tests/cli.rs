use std::path::{Path, PathBuf};
use std::process::Command;

use lticlass::cli::Report;
use tempfile::TempDir;

struct Run {
    code: i32,
    stdout: String,
}

impl Run {
    fn report(&self) -> Report {
        serde_json::from_str(&self.stdout).unwrap_or_else(|e| panic!("bad report ({e}):\n{}", self.stdout))
    }
}

fn lticlass(args: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_lticlass")).args(args).output().unwrap();
    Run { code: out.status.code().unwrap(), stdout: String::from_utf8(out.stdout).unwrap() }
}

fn write(dir: &TempDir, name: &str, body: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const JORDAN: &str = r#"{"A": [[2,0,0,0],[1,2,0,0],[0,1,2,0],[0,0,1,2]], "C": [[3,4,0,0]], "label": "jordan"}"#;
const DIAG: &str = r#"{"A": [[3,0],[0,3]], "C": [[1,0]]}"#;
const CHAIN: &str = r#"{"A": [[3,0],[1,3]], "C": [[1,0]]}"#;

#[test]
fn invariants_of_jordan_chain() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "j.json", JORDAN);
    let run = lticlass(&["invariants", s(&f)]);
    assert_eq!(run.code, 0);
    let report = run.report();
    assert_eq!(report.command, "invariants");
    assert_eq!(report.inputs, vec!["jordan"]);
    assert_eq!(report.result[0]["value"]["tuple"], serde_json::json!([0, 4, 0, 2, 0, 2, 0]));
}

#[test]
fn equivalence_exit_codes() {
    let dir = TempDir::new().unwrap();
    let (a, b) = (write(&dir, "a.json", DIAG), write(&dir, "b.json", CHAIN));

    let top = lticlass(&["equiv", "--mode", "topological", s(&a), s(&b)]);
    assert_eq!(top.code, 0);
    assert_eq!(top.report().result["verdict"]["summary"], "equivalent");

    let lin = lticlass(&["equiv", "--mode", "linear", s(&a), s(&b)]);
    assert_eq!(lin.code, 1);
    assert_eq!(lin.report().result["verdict"]["summary"], "not equivalent: A matrices not similar");
}

#[test]
fn input_errors_exit_with_two() {
    let dir = TempDir::new().unwrap();
    let cases = [
        (r#"{"A": [[1,2],[3]], "C": [[1,0]]}"#, "ParseError"),
        (r#"{"A": [[1,2]], "C": [[1,0]]}"#, "ShapeError"),
        (r#"{"A": [[1,0],[0,1]], "C": [[1,0,0]]}"#, "ShapeError"),
        (r#"{"A": [[1e400]], "C": [[1]]}"#, "ParseError"),
        (r#"{"A": [[1, 2}"#, "ParseError"),
    ];
    for (i, (body, kind)) in cases.iter().enumerate() {
        let f = write(&dir, &format!("bad{i}.json"), body);
        let run = lticlass(&["invariants", s(&f)]);
        assert_eq!(run.code, 2, "{body}");
        assert_eq!(run.report().result["error"]["kind"], *kind, "{body}");
    }
    let missing = lticlass(&["invariants", "/nonexistent/system.json"]);
    assert_eq!(missing.code, 2);
}

#[test]
fn bad_tolerances_are_value_errors() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "j.json", JORDAN);
    let run = lticlass(&["--tol-rank=-1", "invariants", s(&f)]);
    assert_eq!(run.code, 2);
    assert_eq!(run.report().result["error"]["kind"], "ValueError");
    // Usage errors also exit with 2.
    assert_eq!(lticlass(&["equiv", "--mode", "sideways", s(&f), s(&f)]).code, 2);
}

#[test]
fn reports_are_deterministic_and_round_trip() {
    let dir = TempDir::new().unwrap();
    let (a, b, j) = (write(&dir, "a.json", DIAG), write(&dir, "b.json", CHAIN), write(&dir, "j.json", JORDAN));
    let commands: Vec<Vec<&str>> = vec![
        vec!["invariants", s(&a), s(&b), s(&j)],
        vec!["split", s(&j)],
        vec!["kalman", s(&j), s(&b)],
        vec!["canonical", s(&j)],
        vec!["equiv", "--mode", "linear", s(&a), s(&b)],
        vec!["equiv", "--mode", "topological", s(&a), s(&b)],
        vec!["simulate", s(&j), "--x0", "1,-1,0.5,0", "--points", "5"],
    ];
    for args in commands {
        let mut args = args.clone();
        args.extend(["--seed", "9"]);
        let first = lticlass(&args);
        let second = lticlass(&args);
        assert!(first.code <= 1, "{args:?}: {}", first.stdout);
        assert_eq!(first.stdout, second.stdout, "{args:?}");
        let report = first.report();
        let again: Report = serde_json::from_str(&serde_json::to_string(&report).unwrap()).unwrap();
        assert_eq!(again, report);
        assert_eq!(report.config.seed, 9);
    }
}

#[test]
fn report_fields_come_in_fixed_order() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "j.json", JORDAN);
    let out = lticlass(&["invariants", s(&f)]).stdout;
    let pos = |k: &str| out.find(&format!("\"{k}\"")).unwrap();
    assert!(pos("command") < pos("inputs"));
    assert!(pos("inputs") < pos("config"));
    assert!(pos("config") < pos("warnings"));
    assert!(pos("warnings") < pos("result"));
}

#[test]
fn witness_check_passes_then_fails_when_scaled() {
    let dir = TempDir::new().unwrap();
    let a = write(&dir, "a.json", r#"{"A": [[1,0],[0,-2]], "C": [[1,1]]}"#);
    // Swapping the coordinates: P = [[0,1],[1,0]].
    let b = write(&dir, "b.json", r#"{"A": [[-2,0],[0,1]], "C": [[1,1]]}"#);
    let good = write(&dir, "p.json", r#"{"P": [[0,1],[1,0]]}"#);
    let bad = write(&dir, "q.json", r#"[[0,1.1],[1,0]]"#);

    let run = lticlass(&["check-witness", s(&a), s(&b), "--witness", s(&good)]);
    assert_eq!(run.code, 0, "{}", run.stdout);
    assert_eq!(run.report().result["check"]["passed"], true);

    let run = lticlass(&["check-witness", s(&a), s(&b), "--witness", s(&bad), "--x0", "1,0", "--x0", "0,1"]);
    assert_eq!(run.code, 1);
    assert_eq!(run.report().result["check"]["passed"], false);
    assert_eq!(run.report().result["check"]["initial_states"], 2);
}

#[test]
fn text_output_is_plain() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "j.json", JORDAN);
    let run = lticlass(&["invariants", s(&f), "--output", "text"]);
    assert_eq!(run.code, 0);
    assert!(!run.stdout.trim_start().starts_with('{'));
    assert!(run.stdout.contains("invariants"));
}
