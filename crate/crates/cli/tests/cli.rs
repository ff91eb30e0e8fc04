use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn samples() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../samples")
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_probgkat")).args(args).output().expect("binary runs")
}

fn run_at(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_probgkat")).current_dir(dir).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn die_programs_are_equivalent() {
    let o = run_at(&samples(), &["equiv", "die_direct.pk", "die_knuthyao.pk"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("bisimilar"));
}

#[test]
fn equiv_exit_codes_and_json() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "p.pk", "actions p, q; p");
    let q = write(&dir, "q.pk", "actions p, q; q");
    assert_eq!(run(&["equiv", &p, &p]).status.code(), Some(0));
    let o = run(&["--json", "equiv", &p, &q]);
    assert_eq!(o.status.code(), Some(1));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["bisimilar"], Value::Bool(false));
    assert!(v["partition"].is_array());
}

#[test]
fn metric_values() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "p.pk", "actions p, q; p");
    let q = write(&dir, "q.pk", "actions p, q; q");
    let pp = write(&dir, "pp.pk", "actions p, q; p ; p");
    let pq = write(&dir, "pq.pk", "actions p, q; p ; q");
    assert_eq!(stdout(&run(&["metric", &p, &q])).trim(), "1");
    assert_eq!(stdout(&run(&["metric", &pp, &pq])).trim(), "1/2^1");
    assert_eq!(stdout(&run(&["metric", &p, &p])).trim(), "0");
    let v: Value = serde_json::from_str(&stdout(&run(&["--json", "metric", &pp, &pq]))).unwrap();
    assert_eq!(v["distance"], "1/2");
}

#[test]
fn mismatched_tests_are_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let a = write(&dir, "a.pk", "tests t; 1");
    let b = write(&dir, "b.pk", "tests u; 1");
    let o = run(&["equiv", &a, &b]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!o.stderr.is_empty());
}

#[test]
fn parse_and_io_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let bad = write(&dir, "bad.pk", "actions p; p +{2} p");
    assert_eq!(run(&["automaton", &bad]).status.code(), Some(2));
    assert_eq!(run(&["automaton", "/nonexistent/file.pk"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn proof_checking() {
    let o = run_at(&samples(), &["check-proof", "--cross-check", "die.proof"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let dir = TempDir::new().unwrap();
    let text = std::fs::read_to_string(samples().join("die.proof")).unwrap();
    let broken = write(&dir, "broken.proof", &text.replace("14: h == e by P4", "14: h == e by P3"));
    let o = run(&["--json", "check-proof", &broken]);
    assert_eq!(o.status.code(), Some(1));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["verified"], Value::Bool(false));
    assert_eq!(v["failure"][0], 14);
}

#[test]
fn solution_checking() {
    let o = run_at(&samples(), &["check-solution", "example_system.sys", "example_solution.map"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "solution");
    let dir = TempDir::new().unwrap();
    let wrong = write(&dir, "wrong.map", "x1 := q, x2 := 1");
    let sys = samples().join("example_system.sys");
    assert_eq!(run(&["check-solution", sys.to_str().unwrap(), &wrong]).status.code(), Some(1));
}

#[test]
fn simulation_is_deterministic() {
    let die = samples().join("die_knuthyao.pk");
    let die = die.to_str().unwrap();
    let args = ["simulate", die, "--n", "2000", "--seed", "11", "--policy", "fixed:"];
    let a = stdout(&run(&args));
    assert_eq!(a, stdout(&run(&args)));
    let v: Value = serde_json::from_str(&a).unwrap();
    let total: u64 = ["returned:d1", "returned:d2", "returned:d3"]
        .iter()
        .map(|k| v[k].as_str().unwrap().split('/').next().unwrap().parse::<u64>().unwrap())
        .sum();
    assert_eq!(total, 2000);
    assert_eq!(run(&["simulate", die, "--policy", "sometimes"]).status.code(), Some(2));
}

#[test]
fn simulation_traces_and_policies() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "loop.pk", "tests t; actions p; outputs v; p *[t] ; ret v");
    let o = run(&["simulate", &f, "--n", "3", "--policy", "cycle:t;t;", "--trace"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["frequencies"]["returned:v"], "3/3");
    assert_eq!(v["runs"][0]["trace"].as_array().unwrap().len(), 2);
}

#[test]
fn automaton_json_round_trips_through_equiv() {
    let dir = TempDir::new().unwrap();
    let die = samples().join("die_knuthyao.pk");
    let o = run(&["--json", "automaton", die.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let json = write(&dir, "die.json", &stdout(&o));
    let direct = samples().join("die_direct.pk");
    assert_eq!(run(&["equiv", &json, direct.to_str().unwrap()]).status.code(), Some(0));
    let dot = stdout(&run(&["automaton", "--dot", &json]));
    assert!(dot.starts_with("digraph"));
}

#[test]
fn inspection_commands() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "g.pk", "tests t; actions p; outputs v; (p +{1/2} ret v) +[t] 1");
    assert_eq!(stdout(&run(&["atoms", &f])).lines().collect::<Vec<_>>(), ["{}", "{t}"]);
    let d = stdout(&run(&["derive", &f, "--atom", "t"]));
    assert!(d.contains("1/2  p . 1") && d.contains("1/2  ret v"), "{d}");
    let v: Value = serde_json::from_str(&stdout(&run(&["--json", "derive", &f]))).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 2);
    let x = stdout(&run(&["expand", &f]));
    let expanded = write(&dir, "x.pk", &x);
    assert_eq!(run(&["equiv", &f, &expanded]).status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&run(&["--json", "encode", &f]))).unwrap();
    assert!(
        v["graph"]["nodes"].as_array().unwrap().len() <= v["bounds"]["general"]["nodes"].as_u64().unwrap() as usize
    );
    let m = stdout(&run(&["minimize", &f]));
    assert!(m.starts_with('*'));
}
