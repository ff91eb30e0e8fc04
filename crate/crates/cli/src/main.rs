//! `probgkat`: command-line front end.
//!
//! Exit codes: 0 on success (or a positive verdict), 1 on a negative
//! verdict (not bisimilar, proof rejected, not a solution), 2 on input,
//! parse or usage errors.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};
use thiserror::Error;

use probgkat::axioms::{check_proof_text, check_solution, is_salomaa, parse_solution_map, parse_system};
use probgkat::equivalence::{decide_bisim, minimize, pseudometric, separation_level, EncodedGraph, Partition};
use probgkat::prob::{Dist, Outcome};
use probgkat::semantics::{
    build_automaton, build_automaton_many, derivative, expand, merge_automata, Automaton, AutomatonJson, StateId,
};
use probgkat::sim::{sub_seed, AtomPolicy, Simulator, DEFAULT_MAX_STEPS};
use probgkat::syntax::{parse_program, print_expr, print_program, Alphabet, Atom, Expr};

#[derive(Debug, Error)]
enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {msg}")]
    Input { path: PathBuf, msg: String },
    #[error("{0}")]
    Usage(String),
}

fn input_err(path: &Path, msg: impl ToString) -> CliError {
    CliError::Input { path: path.to_path_buf(), msg: msg.to_string() }
}

#[derive(Parser)]
#[command(name = "probgkat", version, about = "Probabilistic GKAT programs: automata, equivalence, proofs, simulation")]
struct Cli {
    /// Print machine-readable JSON on stdout.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the atoms of a program's alphabet.
    Atoms { file: PathBuf },
    /// Print the derivative of a program at one atom, or at every atom.
    Derive {
        file: PathBuf,
        /// Comma-set of the tests that hold, e.g. `t,u`.
        #[arg(long)]
        atom: Option<String>,
    },
    /// Print the reachable automaton of a program.
    Automaton {
        file: PathBuf,
        #[arg(long)]
        dot: bool,
    },
    /// Decide bisimilarity of two programs or automata.
    Equiv { left: PathBuf, right: PathBuf },
    /// Behavioural distance between two programs or automata.
    Metric { left: PathBuf, right: PathBuf },
    /// Quotient an automaton by its greatest bisimulation.
    Minimize {
        file: PathBuf,
        #[arg(long)]
        dot: bool,
    },
    /// Rewrite a program into its guarded/convex sum of derivatives.
    Expand { file: PathBuf },
    /// Three-sorted graph encoding with its size bounds.
    Encode { file: PathBuf },
    /// Check an equational proof script.
    CheckProof {
        file: PathBuf,
        /// Also require every verified line to relate bisimilar programs.
        #[arg(long)]
        cross_check: bool,
    },
    /// Check that a map of expressions solves a system of equations.
    CheckSolution { system: PathBuf, map: PathBuf },
    /// Estimate terminal frequencies by Monte Carlo runs.
    Simulate {
        file: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        n: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// `fixed:<atom>`, `uniform`, or `cycle:<a1;a2;...>`.
        #[arg(long, default_value = "uniform")]
        policy: String,
        #[arg(long, default_value_t = DEFAULT_MAX_STEPS)]
        max_steps: usize,
        /// Include every run's trace in the output.
        #[arg(long)]
        trace: bool,
    },
}

enum Input {
    Program(Alphabet, Expr),
    Automaton(Automaton, StateId),
}

impl Input {
    fn into_automaton(self, path: &Path) -> Result<(Automaton, StateId), CliError> {
        match self {
            Input::Program(a, e) => build_automaton(&a, &e).map_err(|e| input_err(path, e)),
            Input::Automaton(aut, root) => Ok((aut, root)),
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

/// A program in the surface syntax, or an automaton in JSON form (detected
/// by a leading `{`). Automata start at their recorded root, else state 0.
fn load(path: &Path) -> Result<Input, CliError> {
    let text = read(path)?;
    if text.trim_start().starts_with('{') {
        let j: AutomatonJson = serde_json::from_str(&text).map_err(|e| input_err(path, e))?;
        let (aut, root) = Automaton::from_json(&j).map_err(|e| input_err(path, e))?;
        if aut.is_empty() {
            return Err(input_err(path, "automaton has no states"));
        }
        let root = root.unwrap_or(0);
        aut.check_state(root).map_err(|e| input_err(path, e))?;
        return Ok(Input::Automaton(aut, root));
    }
    let (a, e) = parse_program(&text).map_err(|e| input_err(path, e))?;
    Ok(Input::Program(a, e))
}

fn load_program(path: &Path) -> Result<(Alphabet, Expr), CliError> {
    match load(path)? {
        Input::Program(a, e) => Ok((a, e)),
        Input::Automaton(..) => Err(input_err(path, "expected a program, found an automaton")),
    }
}

/// Both inputs in one automaton, with their start states.
fn load_pair(left: &Path, right: &Path) -> Result<(Automaton, StateId, StateId), CliError> {
    match (load(left)?, load(right)?) {
        (Input::Program(a1, e1), Input::Program(a2, e2)) => {
            let a = a1.union(&a2).map_err(|e| CliError::Usage(e.to_string()))?;
            let (aut, ids) = build_automaton_many(&a, &[e1, e2]).map_err(|e| CliError::Usage(e.to_string()))?;
            Ok((aut, ids[0], ids[1]))
        }
        (l, r) => {
            let (a1, x) = l.into_automaton(left)?;
            let (a2, y) = r.into_automaton(right)?;
            let (aut, m1, m2) = merge_automata(&a1, &a2).map_err(|e| CliError::Usage(e.to_string()))?;
            Ok((aut, m1[x], m2[y]))
        }
    }
}

fn outcome_text<S>(o: &Outcome<S>, state: impl Fn(&S) -> String) -> String {
    match o {
        Outcome::Reject => "✗".into(),
        Outcome::Accept => "✓".into(),
        Outcome::Return(v) => format!("ret {v}"),
        Outcome::Step(p, s) => format!("{p} . {}", state(s)),
    }
}

fn outcome_json<S>(o: &Outcome<S>, state: impl Fn(&S) -> Value) -> Value {
    match o {
        Outcome::Reject => json!({"kind": "reject"}),
        Outcome::Accept => json!({"kind": "accept"}),
        Outcome::Return(v) => json!({"kind": "return", "output": v}),
        Outcome::Step(p, s) => json!({"kind": "step", "action": p, "target": state(s)}),
    }
}

fn dist_text<S: Ord + Clone>(d: &Dist<S>, state: impl Fn(&S) -> String) -> String {
    d.iter().map(|(o, w)| format!("{w}: {}", outcome_text(o, &state))).collect::<Vec<_>>().join(", ")
}

fn automaton_text(aut: &Automaton, root: StateId) -> String {
    let mut out = String::new();
    for s in 0..aut.len() {
        let mark = if s == root { "*" } else { " " };
        let _ = writeln!(out, "{mark}s{s}  {}", aut.descr(s));
        for (a, atom) in aut.atoms().iter().enumerate() {
            let _ = writeln!(out, "    {atom}  {}", dist_text(aut.trans(s, a), |t| format!("s{t}")));
        }
    }
    out
}

fn partition_json(part: &Partition) -> Value {
    json!(part.blocks())
}

fn print_json(v: &impl serde::Serialize) {
    println!("{}", serde_json::to_string_pretty(v).expect("serializable"));
}

fn show_automaton(aut: &Automaton, root: StateId, dot: bool, as_json: bool) {
    if dot {
        print!("{}", aut.to_dot(Some(root)));
    } else if as_json {
        print_json(&aut.to_json(Some(root)));
    } else {
        print!("{}", automaton_text(aut, root));
    }
}

fn parse_atom(s: &str, alphabet: &Alphabet) -> Result<Atom, CliError> {
    Atom::parse_literal(s, alphabet).map_err(CliError::Usage)
}

fn parse_policy(s: &str, alphabet: &Alphabet) -> Result<AtomPolicy, CliError> {
    if s == "uniform" {
        Ok(AtomPolicy::UniformRandom)
    } else if let Some(a) = s.strip_prefix("fixed:") {
        Ok(AtomPolicy::Fixed(parse_atom(a, alphabet)?))
    } else if let Some(list) = s.strip_prefix("cycle:") {
        let atoms = list.split(';').map(|a| parse_atom(a, alphabet)).collect::<Result<Vec<_>, _>>()?;
        Ok(AtomPolicy::CyclicSequence(atoms))
    } else {
        Err(CliError::Usage(format!("unknown policy `{s}`; expected fixed:<atom>, uniform or cycle:<a1;a2;...>")))
    }
}

fn run(cli: Cli) -> Result<bool, CliError> {
    let as_json = cli.json;
    match cli.command {
        Command::Atoms { file } => {
            let (a, _) = load_program(&file)?;
            let atoms = a.atoms().map_err(|e| input_err(&file, e))?;
            if as_json {
                print_json(&atoms.iter().map(Atom::literal).collect::<Vec<_>>());
            } else {
                for atom in atoms {
                    println!("{atom}");
                }
            }
        }
        Command::Derive { file, atom } => {
            let (a, e) = load_program(&file)?;
            let atoms = match atom {
                Some(s) => vec![parse_atom(&s, &a)?],
                None => a.atoms().map_err(|e| input_err(&file, e))?,
            };
            let e = Arc::new(e);
            let mut out = Vec::new();
            for atom in atoms {
                let d = derivative(&e, &atom);
                if as_json {
                    let entries: Vec<Value> = d
                        .iter()
                        .map(|(o, w)| json!({"prob": w, "outcome": outcome_json(o, |x| json!(print_expr(x)))}))
                        .collect();
                    out.push(json!({"atom": atom.literal(), "dist": entries}));
                } else {
                    println!("{atom}");
                    for (o, w) in d.iter() {
                        println!("  {w}  {}", outcome_text(o, |x| print_expr(x)));
                    }
                }
            }
            if as_json {
                print_json(&out);
            }
        }
        Command::Automaton { file, dot } => {
            let (aut, root) = load(&file)?.into_automaton(&file)?;
            show_automaton(&aut, root, dot, as_json);
        }
        Command::Equiv { left, right } => {
            let (aut, x, y) = load_pair(&left, &right)?;
            let (same, part) = decide_bisim(&aut, x, y).map_err(|e| CliError::Usage(e.to_string()))?;
            if as_json {
                let states: Vec<String> = aut.states().iter().map(ToString::to_string).collect();
                print_json(&json!({
                    "bisimilar": same,
                    "left": x,
                    "right": y,
                    "partition": partition_json(&part),
                    "states": states,
                }));
            } else {
                println!("{}", if same { "bisimilar" } else { "not bisimilar" });
                println!("{}", partition_json(&part));
            }
            return Ok(same);
        }
        Command::Metric { left, right } => {
            let (aut, x, y) = load_pair(&left, &right)?;
            let level = separation_level(&aut, x, y).map_err(|e| CliError::Usage(e.to_string()))?;
            let d = pseudometric(&aut, x, y).map_err(|e| CliError::Usage(e.to_string()))?;
            let text = match level {
                None => "0".to_string(),
                Some(0) => "1".to_string(),
                Some(n) => format!("1/2^{n}"),
            };
            if as_json {
                print_json(&json!({"distance": d, "level": level, "display": text}));
            } else {
                println!("{text}");
            }
        }
        Command::Minimize { file, dot } => {
            let (aut, root) = load(&file)?.into_automaton(&file)?;
            let (min, map) = minimize(&aut).map_err(|e| input_err(&file, e))?;
            show_automaton(&min, map[root], dot, as_json);
        }
        Command::Expand { file } => {
            let (a, e) = load_program(&file)?;
            let x = expand(&a, &e).map_err(|e| input_err(&file, e))?;
            if as_json {
                print_json(&json!({"expr": print_expr(&x)}));
            } else {
                println!("{}", print_program(&a, &x));
            }
        }
        Command::Encode { file } => {
            let (aut, _) = load(&file)?.into_automaton(&file)?;
            let g = EncodedGraph::encode(&aut);
            let (gn, ge) = g.general_bounds();
            let (pn, pe) = g.per_state_bounds();
            if as_json {
                print_json(&json!({
                    "graph": g,
                    "bounds": {"general": {"nodes": gn, "edges": ge}, "per_state": {"nodes": pn, "edges": pe}},
                }));
            } else {
                println!(
                    "states {}, distributions {}, action-states {}",
                    g.num_states, g.num_distributions, g.num_action_states
                );
                println!("nodes {} (general bound {gn}, per-state bound {pn})", g.num_nodes());
                println!("edges {} (general bound {ge}, per-state bound {pe})", g.num_edges());
            }
        }
        Command::CheckProof { file, cross_check } => {
            let text = read(&file)?;
            let report = check_proof_text(&text, cross_check).map_err(|e| input_err(&file, e))?;
            if as_json {
                print_json(&report);
            } else {
                for l in &report.lines {
                    match &l.error {
                        None => println!("line {:>3}: ok", l.number),
                        Some(e) => println!("line {:>3}: FAILED (source line {}): {e}", l.number, l.source_line),
                    }
                }
                match &report.failure {
                    None => println!("verified {} lines", report.lines.len()),
                    Some((n, _)) => println!("rejected at line {n}"),
                }
            }
            return Ok(report.verified);
        }
        Command::CheckSolution { system, map } => {
            let sys = parse_system(&read(&system)?).map_err(|e| input_err(&system, e))?;
            let h = parse_solution_map(&read(&map)?, &sys).map_err(|e| input_err(&map, e))?;
            let ok = check_solution(&sys, &h).map_err(|e| input_err(&map, e))?;
            let salomaa = is_salomaa(&sys);
            if as_json {
                print_json(&json!({"solution": ok, "salomaa": salomaa}));
            } else {
                println!("{}", if ok { "solution" } else { "not a solution" });
                if !salomaa {
                    println!("note: the system is not Salomaa, so solutions need not be unique");
                }
            }
            return Ok(ok);
        }
        Command::Simulate { file, n, seed, policy, max_steps, trace } => {
            if n == 0 || max_steps == 0 {
                return Err(CliError::Usage("--n and --max-steps must be positive".into()));
            }
            let (aut, root) = load(&file)?.into_automaton(&file)?;
            let policy = parse_policy(&policy, aut.alphabet())?;
            let sim = Simulator::from_automaton(aut, root).map_err(|e| input_err(&file, e))?;
            let est = sim.estimate(&policy, n, seed, max_steps).map_err(|e| CliError::Usage(e.to_string()))?;
            if trace {
                let runs = (0..n)
                    .map(|i| sim.run(&policy, sub_seed(seed, i), max_steps))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| CliError::Usage(e.to_string()))?;
                print_json(&json!({"frequencies": est, "runs": runs}));
            } else {
                print_json(&est);
            }
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
