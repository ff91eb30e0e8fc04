//! Three-sorted graph encoding of an automaton: state nodes, one node per
//! distinct transition distribution, and one node per `(action, state)`.

use std::collections::HashMap;

use serde::Serialize;

use crate::prob::{Dist, Outcome, Rat};
use crate::semantics::{Automaton, StateId};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "sort", rename_all = "snake_case")]
pub enum NodeKind {
    State { state: StateId },
    Distribution { index: usize },
    ActionState { action: String, state: StateId },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum EdgeLabel {
    Atom(String),
    Prob(Rat),
    Action(String),
}

#[derive(Debug, Clone, Serialize)]
pub struct EncodedEdge {
    pub from: usize,
    pub to: usize,
    pub label: EdgeLabel,
}

/// Nodes are laid out as all states, then all distinct distributions, then
/// `Act × Q` in action-major order.
#[derive(Debug, Clone, Serialize)]
pub struct EncodedGraph {
    pub nodes: Vec<NodeKind>,
    pub edges: Vec<EncodedEdge>,
    /// Termination vector `[✗, ✓, outputs...]` for distribution nodes,
    /// `None` elsewhere.
    pub observables: Vec<Option<Vec<Rat>>>,
    pub num_states: usize,
    pub num_distributions: usize,
    pub num_action_states: usize,
    pub num_atoms: usize,
    pub num_actions: usize,
}

impl EncodedGraph {
    pub fn encode(aut: &Automaton) -> EncodedGraph {
        let q = aut.len();
        let actions = aut.alphabet().actions();
        let outputs = aut.alphabet().outputs();
        let mut dists: Vec<&Dist<StateId>> = Vec::new();
        let mut dist_index: HashMap<&Dist<StateId>, usize> = HashMap::new();
        for s in 0..q {
            for d in aut.row(s) {
                if !dist_index.contains_key(d) {
                    dist_index.insert(d, dists.len());
                    dists.push(d);
                }
            }
        }
        let action_state = |p: usize, s: StateId| q + dists.len() + p * q + s;
        let mut nodes: Vec<NodeKind> = (0..q).map(|state| NodeKind::State { state }).collect();
        nodes.extend((0..dists.len()).map(|index| NodeKind::Distribution { index }));
        for p in actions {
            nodes.extend((0..q).map(|state| NodeKind::ActionState { action: p.clone(), state }));
        }
        let mut edges = Vec::new();
        for s in 0..q {
            for (a, d) in aut.row(s).iter().enumerate() {
                edges.push(EncodedEdge {
                    from: s,
                    to: q + dist_index[d],
                    label: EdgeLabel::Atom(aut.atoms()[a].literal()),
                });
            }
        }
        let mut observables = vec![None; q];
        for (i, d) in dists.iter().enumerate() {
            for ((p, t), w) in d.step_masses(|t| *t) {
                let pi = actions.iter().position(|x| *x == p).expect("declared action");
                edges.push(EncodedEdge { from: q + i, to: action_state(pi, t), label: EdgeLabel::Prob(w) });
            }
            let mut obs = vec![d.get(&Outcome::Reject), d.get(&Outcome::Accept)];
            obs.extend(outputs.iter().map(|v| d.get(&Outcome::Return(v.clone()))));
            observables.push(Some(obs));
        }
        for (pi, p) in actions.iter().enumerate() {
            for s in 0..q {
                edges.push(EncodedEdge { from: action_state(pi, s), to: s, label: EdgeLabel::Action(p.clone()) });
            }
        }
        observables.resize(nodes.len(), None);
        EncodedGraph {
            num_states: q,
            num_distributions: dists.len(),
            num_action_states: actions.len() * q,
            num_atoms: aut.atoms().len(),
            num_actions: actions.len(),
            nodes,
            edges,
            observables,
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Upper bounds on `(nodes, edges)` that hold for every automaton:
    /// `|Q| + |Q||At| + |Act||Q|` and `|Q||At| + |Q||At|·|Act||Q| + |Q||Act|`.
    pub fn general_bounds(&self) -> (usize, usize) {
        let (q, at, act) = (self.num_states, self.num_atoms, self.num_actions);
        (q + q * at + act * q, q * at + q * at * act * q + q * act)
    }

    /// The tighter bounds `|Q| + 2|Act||Q|` and `|Q||At| + |Q|²|Act| +
    /// |Q||Act|`. The node bound assumes at most `|Act||Q|` distinct
    /// distributions, so it can fail when several atoms give one state
    /// different distributions, or when there are no actions at all.
    pub fn per_state_bounds(&self) -> (usize, usize) {
        let (q, at, act) = (self.num_states, self.num_atoms, self.num_actions);
        (q + 2 * act * q, q * at + q * q * act + q * act)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semantics::{build_automaton, StateDescr};
    use crate::syntax::{parse_program, Alphabet};

    #[test]
    fn single_accepting_state() {
        let a = Alphabet::new(Vec::<&str>::new(), ["p"], Vec::<&str>::new()).unwrap();
        let aut =
            Automaton::new(a, vec![StateDescr::Name("x".into())], vec![vec![Dist::dirac(Outcome::Accept)]]).unwrap();
        let g = EncodedGraph::encode(&aut);
        assert_eq!(g.num_nodes(), 3);
        assert_eq!(g.observables[1], Some(vec![Rat::zero(), Rat::one()]));
        assert_eq!(g.observables[0], None);
    }

    #[test]
    fn two_state_example() {
        let (a, _) = parse_program("tests t; actions p, q; outputs v; 1").unwrap();
        let prob = |entries: Vec<(Outcome<usize>, Rat)>| Dist::from_entries(entries).unwrap();
        let half = Rat::half;
        // Atoms are ordered {} then {t}.
        let x1 = vec![
            prob(vec![(Outcome::Step("q".into(), 1), half()), (Outcome::Return("v".into()), half())]),
            prob(vec![(Outcome::Step("p".into(), 0), half()), (Outcome::Step("q".into(), 1), half())]),
        ];
        let x2 = vec![Dist::dirac(Outcome::Accept), Dist::dirac(Outcome::Accept)];
        let names = vec![StateDescr::Name("x1".into()), StateDescr::Name("x2".into())];
        let aut = Automaton::new(a, names, vec![x1, x2]).unwrap();
        let g = EncodedGraph::encode(&aut);
        assert_eq!((g.num_states, g.num_distributions, g.num_action_states), (2, 3, 4));
        assert_eq!(g.num_nodes(), 9);
        // 4 atom edges, 3 probability edges (returns are observables), 4
        // action edges.
        assert_eq!(g.num_edges(), 11);
        let (n, e) = g.per_state_bounds();
        assert!(g.num_nodes() <= n && g.num_edges() <= e);
    }

    #[test]
    fn per_state_node_bound_fails_without_actions() {
        let (a, e) = parse_program("outputs v; ret v").unwrap();
        let (aut, _) = build_automaton(&a, &e).unwrap();
        let g = EncodedGraph::encode(&aut);
        assert_eq!(g.num_nodes(), 2);
        assert_eq!(g.per_state_bounds().0, 1);
        assert!(g.num_nodes() <= g.general_bounds().0);
    }

    #[test]
    fn per_state_bounds_can_fail_with_two_atoms() {
        // One state that accepts under one atom and steps to itself under
        // the other, half of the time.
        let (a, e) = parse_program("tests t; actions p; (p +{1/2} 1) *[t]").unwrap();
        let (aut, _) = build_automaton(&a, &e).unwrap();
        let g = EncodedGraph::encode(&aut);
        let (gn, ge) = g.general_bounds();
        assert!(g.num_nodes() <= gn && g.num_edges() <= ge);
        let one_state = Automaton::new(
            a.clone(),
            vec![StateDescr::Name("x".into())],
            vec![vec![Dist::dirac(Outcome::Accept), Dist::dirac(Outcome::Reject)]],
        )
        .unwrap();
        let g = EncodedGraph::encode(&one_state);
        assert_eq!(g.num_nodes(), 4);
        assert!(g.num_nodes() > g.per_state_bounds().0);
    }
}
