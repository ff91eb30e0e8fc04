//! Binary relations between states, the relation transformer, and max-flow
//! verification that a relation is a bisimulation.

use std::collections::{BTreeMap, BTreeSet};

use super::flow::FlowNetwork;
use super::{refine_once, Partition};
use crate::prob::Rat;
use crate::semantics::{Automaton, StateId};

/// A set of state pairs, either within one automaton or between two.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PairRelation {
    pairs: BTreeSet<(StateId, StateId)>,
}

impl PairRelation {
    pub fn new(pairs: impl IntoIterator<Item = (StateId, StateId)>) -> Self {
        PairRelation { pairs: pairs.into_iter().collect() }
    }

    pub fn full(n: usize, m: usize) -> Self {
        PairRelation::new((0..n).flat_map(|x| (0..m).map(move |y| (x, y))))
    }

    pub fn identity(n: usize) -> Self {
        PairRelation::new((0..n).map(|x| (x, x)))
    }

    pub fn from_partition(part: &Partition) -> Self {
        PairRelation::new(
            part.blocks().iter().flat_map(|b| b.iter().flat_map(move |&x| b.iter().map(move |&y| (x, y)))),
        )
    }

    pub fn contains(&self, x: StateId, y: StateId) -> bool {
        self.pairs.contains(&(x, y))
    }

    pub fn iter(&self) -> impl Iterator<Item = (StateId, StateId)> + '_ {
        self.pairs.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// The partition this relation induces, if it is an equivalence on
    /// `0..n`.
    pub fn as_partition(&self, n: usize) -> Option<Partition> {
        if (0..n).any(|x| !self.contains(x, x)) || self.pairs.iter().any(|&(x, y)| x >= n || y >= n) {
            return None;
        }
        let part = Partition::from_labels((0..n).map(|x| (0..n).find(|&y| self.contains(x, y)).expect("reflexive")));
        (PairRelation::from_partition(&part) == *self).then_some(part)
    }
}

/// Successor masses of `s` under atom `a` for action `p`.
fn step_row(aut: &Automaton, s: StateId, a: usize, p: &str) -> BTreeMap<StateId, Rat> {
    let mut out: BTreeMap<StateId, Rat> = BTreeMap::new();
    for ((action, t), w) in aut.trans(s, a).step_masses(|t| *t) {
        if action == p {
            out.insert(t, w);
        }
    }
    out
}

/// Whether the mass `x` puts on action `p` can be transported onto the mass
/// `y` puts on `p` along `rel`, saturating both sides.
fn transport_saturates(left: &BTreeMap<StateId, Rat>, right: &BTreeMap<StateId, Rat>, rel: &PairRelation) -> bool {
    let lhs_total: Rat = left.values().sum();
    let rhs_total: Rat = right.values().sum();
    if lhs_total != rhs_total {
        return false;
    }
    if lhs_total.is_zero() {
        return true;
    }
    let (source, sink) = (0, 1);
    let l_ids: Vec<StateId> = left.keys().copied().collect();
    let r_ids: Vec<StateId> = right.keys().copied().collect();
    let mut net = FlowNetwork::new(2 + l_ids.len() + r_ids.len(), source, sink);
    for (i, x) in l_ids.iter().enumerate() {
        net.add_edge(source, 2 + i, left[x].clone());
        for (j, y) in r_ids.iter().enumerate() {
            if rel.contains(*x, *y) {
                net.add_unbounded_edge(2 + i, 2 + l_ids.len() + j);
            }
        }
    }
    for (j, y) in r_ids.iter().enumerate() {
        net.add_edge(2 + l_ids.len() + j, sink, right[y].clone());
    }
    net.max_flow() == lhs_total
}

/// Whether `(x, y)` belongs to the transformer's image of `rel`, with the
/// subset conditions decided by max-flow.
pub fn phi_pair_flow(a1: &Automaton, a2: &Automaton, rel: &PairRelation, x: StateId, y: StateId) -> bool {
    let actions: BTreeSet<&String> = a1.alphabet().actions().iter().chain(a2.alphabet().actions()).collect();
    (0..a1.atoms().len()).all(|a| {
        let (dx, dy) = (a1.trans(x, a), a2.trans(y, a));
        dx.observables() == dy.observables()
            && actions.iter().all(|p| transport_saturates(&step_row(a1, x, a, p), &step_row(a2, y, a, p), rel))
    })
}

/// The transformer applied to an arbitrary relation between two automata
/// with the same atoms.
pub fn phi_step_flow(a1: &Automaton, a2: &Automaton, rel: &PairRelation) -> PairRelation {
    assert_eq!(a1.atoms(), a2.atoms(), "automata must share atoms");
    PairRelation::new(
        (0..a1.len())
            .flat_map(|x| (0..a2.len()).map(move |y| (x, y)))
            .filter(|&(x, y)| phi_pair_flow(a1, a2, rel, x, y)),
    )
}

/// The transformer applied to an equivalence, via block masses.
pub fn phi_step_blocks(aut: &Automaton, part: &Partition) -> PairRelation {
    PairRelation::from_partition(&refine_once(aut, part))
}

/// One step of the transformer on a relation over `aut`'s states.
pub fn phi_step(aut: &Automaton, rel: &PairRelation) -> PairRelation {
    match rel.as_partition(aut.len()) {
        Some(part) => phi_step_blocks(aut, &part),
        None => phi_step_flow(aut, aut, rel),
    }
}

/// `∼^(i)`: `i` applications of the transformer to the full relation.
pub fn refinement_chain(aut: &Automaton, i: usize) -> PairRelation {
    let mut rel = PairRelation::full(aut.len(), aut.len());
    for _ in 0..i {
        let next = phi_step(aut, &rel);
        if next == rel {
            break;
        }
        rel = next;
    }
    rel
}

/// The limit of the refinement chain, iterating with the general
/// (flow-based) transformer until two consecutive relations agree.
pub fn stabilized_chain(aut: &Automaton) -> PairRelation {
    let mut rel = PairRelation::full(aut.len(), aut.len());
    loop {
        let next = phi_step_flow(aut, aut, &rel);
        if next == rel {
            return rel;
        }
        rel = next;
    }
}

/// Whether `rel ⊆ X × Y` is a bisimulation between `a1` and `a2`.
pub fn check_bisimulation_flow(a1: &Automaton, a2: &Automaton, rel: &PairRelation) -> bool {
    if a1.atoms() != a2.atoms() {
        return false;
    }
    rel.iter().all(|(x, y)| x < a1.len() && y < a2.len() && phi_pair_flow(a1, a2, rel, x, y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equivalence::coarsest_bisimulation;
    use crate::semantics::{build_automaton, merge_automata};
    use crate::syntax::parse_program;

    fn merged(src1: &str, src2: &str) -> (Automaton, StateId, StateId) {
        let (a1, e1) = parse_program(src1).unwrap();
        let (a2, e2) = parse_program(src2).unwrap();
        let (x, rx) = build_automaton(&a1, &e1).unwrap();
        let (y, ry) = build_automaton(&a2, &e2).unwrap();
        let (m, m1, m2) = merge_automata(&x, &y).unwrap();
        (m, m1[rx], m2[ry])
    }

    #[test]
    fn identity_is_a_bisimulation() {
        let (m, _, _) = merged("actions p, q; (p +{1/3} q) *{1/2}", "actions p, q; p ; q");
        let id = PairRelation::identity(m.len());
        assert!(check_bisimulation_flow(&m, &m, &id));
        let phi = phi_step(&m, &id);
        assert!(id.iter().all(|(x, y)| phi.contains(x, y)));
    }

    #[test]
    fn full_relation_keeps_single_action_pair() {
        let (m, x, y) = merged("actions p; p", "actions p; p ; p");
        let full = PairRelation::full(m.len(), m.len());
        assert!(phi_step(&m, &full).contains(x, y));
        assert!(phi_step_flow(&m, &m, &full).contains(x, y));
    }

    #[test]
    fn roots_separate_at_second_step() {
        let (m, x, y) = merged("actions p, q; p ; p", "actions p, q; p ; q");
        assert!(refinement_chain(&m, 1).contains(x, y));
        assert!(!refinement_chain(&m, 2).contains(x, y));
        assert_eq!(refinement_chain(&m, 0), PairRelation::full(m.len(), m.len()));
    }

    #[test]
    fn lone_root_pair_is_not_a_bisimulation() {
        let (m, x, y) = merged("actions p, q; p", "actions p, q; q");
        assert!(!check_bisimulation_flow(&m, &m, &PairRelation::new([(x, y)])));
        let (m, x, y) = merged("actions p; p ; p", "actions p; p ; 1 ; p");
        // Bisimilar roots, but the successors are not related.
        assert!(!check_bisimulation_flow(&m, &m, &PairRelation::new([(x, y)])));
    }

    #[test]
    fn greatest_bisimulation_passes_flow_check() {
        let (m, _, _) = merged(
            "tests t; actions p; outputs v; (p +[t] ret v) *{1/2} ; p",
            "tests t; actions p; outputs v; ((p +[t] ret v) ; (p +[t] ret v) *{1/2} +{1/2} 1) ; p",
        );
        let rel = PairRelation::from_partition(&coarsest_bisimulation(&m));
        assert!(check_bisimulation_flow(&m, &m, &rel));
        assert_eq!(stabilized_chain(&m), rel);
    }

    #[test]
    fn partition_detection() {
        let part = Partition::from_labels([0, 1, 0]);
        let rel = PairRelation::from_partition(&part);
        assert_eq!(rel.as_partition(3), Some(part));
        assert_eq!(PairRelation::new([(0, 1)]).as_partition(2), None);
    }
}
