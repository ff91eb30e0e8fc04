use std::path::PathBuf;

use probgkat::axioms::{check_proof_text, check_solution, parse_solution_map, parse_system};
use probgkat::equivalence::decide_bisim;
use probgkat::semantics::build_automaton_many;
use probgkat::syntax::parse_program;

fn sample(name: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../samples").join(name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

#[test]
fn die_programs_are_equivalent() {
    let (a1, e1) = parse_program(&sample("die_direct.pk")).unwrap();
    let (a2, e2) = parse_program(&sample("die_knuthyao.pk")).unwrap();
    let alphabet = a1.union(&a2).unwrap();
    let (aut, ids) = build_automaton_many(&alphabet, &[e1, e2]).unwrap();
    assert!(decide_bisim(&aut, ids[0], ids[1]).unwrap().0);
}

#[test]
fn die_proof_verifies() {
    let report = check_proof_text(&sample("die.proof"), true).unwrap();
    assert!(report.verified, "{:?}", report.failure);
    assert_eq!(report.lines.len(), 35);
}

#[test]
fn example_solution_solves_example_system() {
    let sys = parse_system(&sample("example_system.sys")).unwrap();
    let h = parse_solution_map(&sample("example_solution.map"), &sys).unwrap();
    assert!(check_solution(&sys, &h).unwrap());
}
