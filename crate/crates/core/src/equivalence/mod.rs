//! Bisimilarity: partition refinement, the relation transformer and its
//! refinement chain, the behavioural pseudometric, max-flow verification of
//! candidate relations, quotients, and the three-sorted graph encoding.

use std::collections::HashMap;

use serde::Serialize;

use crate::prob::{Outcome, Rat};
use crate::semantics::{Automaton, AutomatonError, StateId};

mod encode;
pub mod flow;
mod minimize;
mod relation;

pub use encode::{EdgeLabel, EncodedGraph, NodeKind};
pub use minimize::minimize;
pub use relation::{
    check_bisimulation_flow, phi_pair_flow, phi_step, phi_step_blocks, phi_step_flow, refinement_chain,
    stabilized_chain, PairRelation,
};

/// A partition of the states into disjoint nonempty blocks. Blocks are
/// numbered in order of their least member.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Partition {
    #[serde(skip)]
    block_of: Vec<usize>,
    blocks: Vec<Vec<StateId>>,
}

impl Partition {
    /// Builds a partition from arbitrary block labels, renumbering them.
    pub fn from_labels<K: Eq + std::hash::Hash>(labels: impl IntoIterator<Item = K>) -> Partition {
        let mut ids: HashMap<K, usize> = HashMap::new();
        let mut block_of = Vec::new();
        let mut blocks: Vec<Vec<StateId>> = Vec::new();
        for (s, k) in labels.into_iter().enumerate() {
            let next = ids.len();
            let b = *ids.entry(k).or_insert(next);
            if b == blocks.len() {
                blocks.push(Vec::new());
            }
            blocks[b].push(s);
            block_of.push(b);
        }
        Partition { block_of, blocks }
    }

    /// Everything in one block.
    pub fn trivial(n: usize) -> Partition {
        Partition::from_labels(std::iter::repeat_n((), n))
    }

    pub fn block_of(&self, s: StateId) -> usize {
        self.block_of[s]
    }

    pub fn blocks(&self) -> &[Vec<StateId>] {
        &self.blocks
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn num_states(&self) -> usize {
        self.block_of.len()
    }

    pub fn same_block(&self, x: StateId, y: StateId) -> bool {
        self.block_of[x] == self.block_of[y]
    }

    /// Whether every block of `self` lies inside a block of `coarser`.
    pub fn refines(&self, coarser: &Partition) -> bool {
        self.blocks.iter().all(|b| b.iter().all(|&s| coarser.same_block(s, b[0])))
    }
}

type Observables = Vec<(Outcome<()>, Rat)>;
type StepMasses = Vec<((String, usize), Rat)>;
type Signature = Vec<(Observables, StepMasses)>;

/// Per atom: the termination probabilities and the mass sent to each
/// `(action, block)`.
fn signature(aut: &Automaton, s: StateId, part: &Partition) -> Signature {
    aut.row(s)
        .iter()
        .map(|d| {
            let steps = d.step_masses(|t| part.block_of(*t)).into_iter().collect();
            (d.observables(), steps)
        })
        .collect()
}

/// One application of the transformer to an equivalence: states are
/// related iff their signatures over `part` coincide.
pub fn refine_once(aut: &Automaton, part: &Partition) -> Partition {
    Partition::from_labels((0..aut.len()).map(|s| signature(aut, s, part)))
}

/// The partitions `∼^(0) ⊇ ∼^(1) ⊇ ...` up to and including the first one
/// that is stable under refinement.
pub fn partition_chain(aut: &Automaton) -> Vec<Partition> {
    let mut chain = vec![Partition::trivial(aut.len())];
    loop {
        let last = chain.last().expect("chain is nonempty");
        let next = refine_once(aut, last);
        if next == *last {
            return chain;
        }
        chain.push(next);
    }
}

/// The coarsest bisimulation equivalence.
pub fn coarsest_bisimulation(aut: &Automaton) -> Partition {
    partition_chain(aut).pop().expect("chain is nonempty")
}

/// Whether `x` and `y` are bisimilar, together with the greatest
/// bisimulation as a partition.
pub fn decide_bisim(aut: &Automaton, x: StateId, y: StateId) -> Result<(bool, Partition), AutomatonError> {
    aut.check_state(x)?;
    aut.check_state(y)?;
    let part = coarsest_bisimulation(aut);
    Ok((part.same_block(x, y), part))
}

/// The largest `n` with `x ∼^(n) y`, or `None` when they are bisimilar.
pub fn separation_level(aut: &Automaton, x: StateId, y: StateId) -> Result<Option<usize>, AutomatonError> {
    aut.check_state(x)?;
    aut.check_state(y)?;
    let chain = partition_chain(aut);
    if chain.last().expect("chain is nonempty").same_block(x, y) {
        return Ok(None);
    }
    let first_split = chain.iter().position(|p| !p.same_block(x, y)).expect("separated somewhere");
    Ok(Some(first_split - 1))
}

/// `d(x, y)`: `0` when bisimilar, otherwise `2^-n` for the last chain
/// stage `n` relating them.
pub fn pseudometric(aut: &Automaton, x: StateId, y: StateId) -> Result<Rat, AutomatonError> {
    Ok(match separation_level(aut, x, y)? {
        None => Rat::zero(),
        Some(n) => Rat::pow2_neg(n as u32),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semantics::{build_automaton, build_automaton_many, merge_automata};
    use crate::syntax::{parse_expr, parse_program};

    fn merged(src1: &str, src2: &str) -> (Automaton, StateId, StateId) {
        let (a1, e1) = parse_program(src1).unwrap();
        let (a2, e2) = parse_program(src2).unwrap();
        let (x, rx) = build_automaton(&a1, &e1).unwrap();
        let (y, ry) = build_automaton(&a2, &e2).unwrap();
        let (m, m1, m2) = merge_automata(&x, &y).unwrap();
        (m, m1[rx], m2[ry])
    }

    #[test]
    fn die_programs_are_bisimilar() {
        let (m, x, y) = merged(
            "outputs d1,d2,d3; ret d1 +{1/3} (ret d2 +{1/2} ret d3)",
            "outputs d1,d2,d3; ((ret d1 +{1/2} ret d2) +{1/2} (ret d3 +{1/2} 1)) *[1]",
        );
        let (same, part) = decide_bisim(&m, x, y).unwrap();
        assert!(same);
        assert_eq!(refine_once(&m, &part), part);
    }

    #[test]
    fn different_biases_are_not_bisimilar() {
        let (m, x, y) = merged("actions p, q; p +{1/3} q", "actions p, q; p +{1/2} q");
        assert!(!decide_bisim(&m, x, y).unwrap().0);
        assert!(decide_bisim(&m, x, x).unwrap().0);
    }

    #[test]
    fn pseudometric_examples() {
        let (m, x, y) = merged("actions p, q; p", "actions p, q; q");
        assert_eq!(pseudometric(&m, x, y).unwrap(), Rat::one());
        assert_eq!(pseudometric(&m, x, x).unwrap(), Rat::zero());
        let (m, x, y) = merged("actions p, q; p ; p", "actions p, q; p ; q");
        assert_eq!(pseudometric(&m, x, y).unwrap(), Rat::half());
    }

    #[test]
    fn chain_is_decreasing() {
        let (a, e) =
            parse_program("tests t; actions p, q; outputs v; (p +[t] q ; ret v) *{1/3} ; (q +{1/2} p *[t])").unwrap();
        let (aut, _) = build_automaton(&a, &e).unwrap();
        let chain = partition_chain(&aut);
        for w in chain.windows(2) {
            assert!(w[1].refines(&w[0]));
        }
    }

    #[test]
    fn shared_table_merges_equal_roots() {
        let (a, e) = parse_program("actions p; p ; 1").unwrap();
        let f = parse_expr("p", &a).unwrap();
        let (aut, roots) = build_automaton_many(&a, &[e, f]).unwrap();
        assert!(decide_bisim(&aut, roots[0], roots[1]).unwrap().0);
    }

    #[test]
    fn invalid_states_are_reported() {
        let (a, e) = parse_program("1").unwrap();
        let (aut, _) = build_automaton(&a, &e).unwrap();
        assert!(decide_bisim(&aut, 0, 5).is_err());
    }
}
