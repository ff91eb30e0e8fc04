//! Finite probabilistic automata: construction from expressions, merging,
//! JSON interchange, and DOT rendering.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::derivative;
use crate::prob::{Dist, Outcome, ProbError, Rat};
use crate::syntax::{print_expr, Alphabet, AlphabetError, Atom, Expr};

pub type StateId = usize;

#[derive(Debug, Error)]
pub enum AutomatonError {
    #[error(transparent)]
    Alphabet(#[from] AlphabetError),
    #[error("state {0} does not exist")]
    NoSuchState(StateId),
    #[error("transition for state {state}, atom {atom} is missing")]
    MissingTransition { state: StateId, atom: usize },
    #[error("transition for state {state}, atom {atom}: {source}")]
    BadDistribution { state: StateId, atom: usize, source: ProbError },
    #[error("{0}")]
    Json(String),
}

/// What a state stands for: the expression it was derived from, or an
/// opaque name when loaded from elsewhere.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum StateDescr {
    Expr(Arc<Expr>),
    Name(String),
}

impl fmt::Display for StateDescr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StateDescr::Expr(e) => f.write_str(&print_expr(e)),
            StateDescr::Name(n) => f.write_str(n),
        }
    }
}

/// Interning table giving each structurally distinct expression a dense id.
#[derive(Debug, Default)]
pub struct StateTable {
    ids: HashMap<Arc<Expr>, StateId>,
    exprs: Vec<Arc<Expr>>,
}

impl StateTable {
    /// Returns the id of `e` and whether it was newly added.
    pub fn intern(&mut self, e: &Arc<Expr>) -> (StateId, bool) {
        if let Some(&id) = self.ids.get(e) {
            return (id, false);
        }
        let id = self.exprs.len();
        self.ids.insert(e.clone(), id);
        self.exprs.push(e.clone());
        (id, true)
    }

    pub fn get(&self, e: &Expr) -> Option<StateId> {
        self.ids.get(e).copied()
    }

    pub fn expr(&self, id: StateId) -> &Arc<Expr> {
        &self.exprs[id]
    }

    pub fn len(&self) -> usize {
        self.exprs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exprs.is_empty()
    }
}

/// A finite automaton with a transition distribution per state and atom.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Automaton {
    alphabet: Alphabet,
    atoms: Vec<Atom>,
    states: Vec<StateDescr>,
    trans: Vec<Vec<Dist<StateId>>>,
}

impl Automaton {
    /// Validates totality and that every step target exists.
    pub fn new(
        alphabet: Alphabet,
        states: Vec<StateDescr>,
        trans: Vec<Vec<Dist<StateId>>>,
    ) -> Result<Self, AutomatonError> {
        let atoms = alphabet.atoms()?;
        if trans.len() != states.len() {
            return Err(AutomatonError::MissingTransition { state: trans.len().min(states.len()), atom: 0 });
        }
        for (s, row) in trans.iter().enumerate() {
            if row.len() != atoms.len() {
                return Err(AutomatonError::MissingTransition { state: s, atom: row.len().min(atoms.len()) });
            }
            for d in row {
                for (x, _) in d.iter() {
                    if let Outcome::Step(_, t) = x {
                        if *t >= states.len() {
                            return Err(AutomatonError::NoSuchState(*t));
                        }
                    }
                }
            }
        }
        Ok(Automaton { alphabet, atoms, states, trans })
    }

    pub fn empty(alphabet: Alphabet) -> Result<Self, AutomatonError> {
        Automaton::new(alphabet, Vec::new(), Vec::new())
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[StateDescr] {
        &self.states
    }

    pub fn descr(&self, s: StateId) -> &StateDescr {
        &self.states[s]
    }

    pub fn trans(&self, s: StateId, atom: usize) -> &Dist<StateId> {
        &self.trans[s][atom]
    }

    pub fn row(&self, s: StateId) -> &[Dist<StateId>] {
        &self.trans[s]
    }

    pub fn check_state(&self, s: StateId) -> Result<(), AutomatonError> {
        if s < self.states.len() {
            Ok(())
        } else {
            Err(AutomatonError::NoSuchState(s))
        }
    }

    /// Index of the first state whose descriptor is exactly `e`.
    pub fn find_expr(&self, e: &Expr) -> Option<StateId> {
        self.states.iter().position(|d| matches!(d, StateDescr::Expr(x) if **x == *e))
    }

    pub fn to_json(&self, root: Option<StateId>) -> AutomatonJson {
        let states = self.states.iter().enumerate().map(|(id, d)| StateJson { id, descr: d.to_string() }).collect();
        let mut trans = Vec::new();
        for (s, row) in self.trans.iter().enumerate() {
            for (a, d) in row.iter().enumerate() {
                let dist = d
                    .iter()
                    .map(|(x, w)| {
                        let (kind, value) = match x {
                            Outcome::Reject => ("reject", serde_json::Value::Null),
                            Outcome::Accept => ("accept", serde_json::Value::Null),
                            Outcome::Return(v) => ("return", serde_json::Value::String(v.clone())),
                            Outcome::Step(p, t) => ("step", serde_json::json!({"action": p, "state": t})),
                        };
                        EntryJson { kind: kind.to_string(), value, prob: w.clone() }
                    })
                    .collect();
                trans.push(TransJson { state: s, atom: a, dist });
            }
        }
        AutomatonJson {
            tests: self.alphabet.tests().to_vec(),
            atoms: self.atoms.iter().map(Atom::literal).collect(),
            actions: self.alphabet.actions().to_vec(),
            outputs: self.alphabet.outputs().to_vec(),
            states,
            trans,
            root,
        }
    }

    /// Rebuilds an automaton from its JSON form; descriptors become names.
    pub fn from_json(j: &AutomatonJson) -> Result<(Self, Option<StateId>), AutomatonError> {
        let alphabet = Alphabet::new(j.tests.clone(), j.actions.clone(), j.outputs.clone())?;
        let atoms = alphabet.atoms()?;
        let atom_index: Vec<usize> = if j.atoms.is_empty() {
            (0..atoms.len()).collect()
        } else {
            if j.atoms.len() != atoms.len() {
                return Err(AutomatonError::Json(format!("expected {} atoms, found {}", atoms.len(), j.atoms.len())));
            }
            j.atoms
                .iter()
                .map(|lit| {
                    let a = Atom::parse_literal(lit, &alphabet).map_err(AutomatonError::Json)?;
                    Ok(atoms.iter().position(|x| *x == a).expect("parsed atoms are enumerated"))
                })
                .collect::<Result<_, AutomatonError>>()?
        };
        let n = j.states.len();
        let mut states = vec![None; n];
        for s in &j.states {
            if s.id >= n {
                return Err(AutomatonError::NoSuchState(s.id));
            }
            states[s.id] = Some(StateDescr::Name(s.descr.clone()));
        }
        let states: Vec<StateDescr> = states
            .into_iter()
            .enumerate()
            .map(|(i, d)| d.ok_or(AutomatonError::Json(format!("state {i} is not listed"))))
            .collect::<Result<_, _>>()?;
        let mut trans: Vec<Vec<Option<Dist<StateId>>>> = vec![vec![None; atoms.len()]; n];
        for t in &j.trans {
            if t.state >= n {
                return Err(AutomatonError::NoSuchState(t.state));
            }
            let atom = *atom_index
                .get(t.atom)
                .ok_or_else(|| AutomatonError::Json(format!("atom index {} out of range", t.atom)))?;
            let mut entries = Vec::new();
            for e in &t.dist {
                let x = match (e.kind.as_str(), &e.value) {
                    ("reject", _) => Outcome::Reject,
                    ("accept", _) => Outcome::Accept,
                    ("return", serde_json::Value::String(v)) => Outcome::Return(v.clone()),
                    ("step", v) => {
                        let p = v.get("action").and_then(|x| x.as_str());
                        let s = v.get("state").and_then(|x| x.as_u64());
                        match (p, s) {
                            (Some(p), Some(s)) => Outcome::Step(p.to_string(), s as usize),
                            _ => return Err(AutomatonError::Json("step entries need `action` and `state`".into())),
                        }
                    }
                    (k, _) => return Err(AutomatonError::Json(format!("bad distribution entry kind `{k}`"))),
                };
                entries.push((x, e.prob.clone()));
            }
            let d = Dist::from_entries(entries).map_err(|source| AutomatonError::BadDistribution {
                state: t.state,
                atom: t.atom,
                source,
            })?;
            trans[t.state][atom] = Some(d);
        }
        let trans = trans
            .into_iter()
            .enumerate()
            .map(|(s, row)| {
                row.into_iter()
                    .enumerate()
                    .map(|(a, d)| d.ok_or(AutomatonError::MissingTransition { state: s, atom: a }))
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        if let Some(r) = j.root {
            if r >= n {
                return Err(AutomatonError::NoSuchState(r));
            }
        }
        Ok((Automaton::new(alphabet, states, trans)?, j.root))
    }

    /// Graphviz rendering: one point node per state and group of atoms
    /// sharing a distribution, dashed `action | prob` edges to successors,
    /// and doubled edges to termination outcomes.
    pub fn to_dot(&self, root: Option<StateId>) -> String {
        let mut out = String::from("digraph automaton {\n  rankdir=LR;\n");
        let esc = |s: &str| s.replace('\\', "\\\\").replace('"', "\\\"");
        for (s, d) in self.states.iter().enumerate() {
            let shape = if Some(s) == root { "doublecircle" } else { "circle" };
            let _ = writeln!(out, "  s{s} [shape={shape}, label=\"{}\"];", esc(&d.to_string()));
        }
        let mut sinks: Vec<String> = Vec::new();
        for (s, row) in self.trans.iter().enumerate() {
            let mut groups: Vec<(&Dist<StateId>, Vec<usize>)> = Vec::new();
            for (a, d) in row.iter().enumerate() {
                match groups.iter_mut().find(|(g, _)| *g == d) {
                    Some((_, atoms)) => atoms.push(a),
                    None => groups.push((d, vec![a])),
                }
            }
            for (g, (d, atoms)) in groups.iter().enumerate() {
                let mid = format!("s{s}_{g}");
                let label: Vec<String> = atoms.iter().map(|&a| self.atoms[a].to_string()).collect();
                let _ = writeln!(out, "  {mid} [shape=point];");
                let _ = writeln!(out, "  s{s} -> {mid} [label=\"{}\", arrowhead=none];", esc(&label.join(", ")));
                for (x, w) in d.iter() {
                    match x {
                        Outcome::Step(p, t) => {
                            let _ = writeln!(out, "  {mid} -> s{t} [style=dashed, label=\"{} | {w}\"];", esc(p));
                        }
                        other => {
                            let name = match other {
                                Outcome::Accept => "accept".to_string(),
                                Outcome::Reject => "reject".to_string(),
                                Outcome::Return(v) => format!("out_{v}"),
                                Outcome::Step(..) => unreachable!(),
                            };
                            if !sinks.contains(&name) {
                                sinks.push(name.clone());
                            }
                            let _ = writeln!(out, "  {mid} -> {name} [color=\"black:black\", label=\"{w}\"];");
                        }
                    }
                }
            }
        }
        for name in sinks {
            let label = match name.as_str() {
                "accept" => "✓".to_string(),
                "reject" => "✗".to_string(),
                other => other.trim_start_matches("out_").to_string(),
            };
            let _ = writeln!(out, "  {name} [shape=plaintext, label=\"{}\"];", esc(&label));
        }
        out.push_str("}\n");
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutomatonJson {
    #[serde(default)]
    pub tests: Vec<String>,
    #[serde(default)]
    pub atoms: Vec<String>,
    #[serde(default)]
    pub actions: Vec<String>,
    #[serde(default)]
    pub outputs: Vec<String>,
    pub states: Vec<StateJson>,
    pub trans: Vec<TransJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub root: Option<StateId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateJson {
    pub id: StateId,
    pub descr: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransJson {
    pub state: StateId,
    pub atom: usize,
    pub dist: Vec<EntryJson>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryJson {
    pub kind: String,
    #[serde(default)]
    pub value: serde_json::Value,
    pub prob: Rat,
}

/// The reachable automaton of `e`, explored breadth-first.
pub fn build_automaton(alphabet: &Alphabet, e: &Expr) -> Result<(Automaton, StateId), AutomatonError> {
    let (aut, roots) = build_automaton_many(alphabet, std::slice::from_ref(e))?;
    Ok((aut, roots[0]))
}

/// The reachable automaton of several roots sharing one state table.
pub fn build_automaton_many(alphabet: &Alphabet, roots: &[Expr]) -> Result<(Automaton, Vec<StateId>), AutomatonError> {
    let atoms = alphabet.atoms()?;
    let mut table = StateTable::default();
    let mut queue = VecDeque::new();
    let mut root_ids = Vec::new();
    for r in roots {
        let r = Arc::new(r.clone());
        let (id, fresh) = table.intern(&r);
        if fresh {
            queue.push_back(id);
        }
        root_ids.push(id);
    }
    let mut trans: Vec<Vec<Dist<StateId>>> = Vec::new();
    while let Some(id) = queue.pop_front() {
        let e = table.expr(id).clone();
        let row: Vec<Dist<StateId>> = atoms
            .iter()
            .map(|a| {
                derivative(&e, a).map_states(|k| {
                    let (t, fresh) = table.intern(k);
                    if fresh {
                        queue.push_back(t);
                    }
                    t
                })
            })
            .collect();
        if trans.len() <= id {
            trans.resize(id + 1, Vec::new());
        }
        trans[id] = row;
    }
    let states = table.exprs.iter().cloned().map(StateDescr::Expr).collect();
    Ok((Automaton { alphabet: alphabet.clone(), atoms, states, trans }, root_ids))
}

/// Disjoint union of two automata over the same tests. States with the same
/// expression descriptor are shared. Returns the id maps of both inputs.
pub fn merge_automata(
    a1: &Automaton,
    a2: &Automaton,
) -> Result<(Automaton, Vec<StateId>, Vec<StateId>), AutomatonError> {
    let alphabet = a1.alphabet.union(&a2.alphabet)?;
    let atoms = alphabet.atoms()?;
    let atom_map = |from: &Automaton| -> Vec<usize> {
        atoms.iter().map(|a| from.atoms.iter().position(|x| x == a).expect("same tests")).collect()
    };
    let (m1_atoms, m2_atoms) = (atom_map(a1), atom_map(a2));
    let mut states: Vec<StateDescr> = Vec::new();
    let mut by_expr: HashMap<Arc<Expr>, StateId> = HashMap::new();
    let mut place = |d: &StateDescr, states: &mut Vec<StateDescr>| -> StateId {
        if let StateDescr::Expr(e) = d {
            if let Some(&id) = by_expr.get(e) {
                return id;
            }
            by_expr.insert(e.clone(), states.len());
        }
        states.push(d.clone());
        states.len() - 1
    };
    let map1: Vec<StateId> = a1.states.iter().map(|d| place(d, &mut states)).collect();
    let map2: Vec<StateId> = a2.states.iter().map(|d| place(d, &mut states)).collect();
    let mut trans: Vec<Option<Vec<Dist<StateId>>>> = vec![None; states.len()];
    for (src, map, amap) in [(a1, &map1, &m1_atoms), (a2, &map2, &m2_atoms)] {
        for (s, &target) in map.iter().enumerate() {
            if trans[target].is_none() {
                let row = amap.iter().map(|&a| src.trans[s][a].map_states(|t| map[*t])).collect();
                trans[target] = Some(row);
            }
        }
    }
    let trans = trans.into_iter().map(|r| r.expect("every merged state has a source")).collect();
    Ok((Automaton { alphabet, atoms, states, trans }, map1, map2))
}
