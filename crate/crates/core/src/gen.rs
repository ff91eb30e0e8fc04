//! Seeded random generators for expressions, automata, axiom instances and
//! systems of equations. Used by the property and acceptance tests.

use std::sync::Arc;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::axioms::{
    instantiate_rule, metavariable_sort, AxiomError, AxiomId, Binding, Bindings, Instance, MetaSort, SalomaaSystem,
    SysTerm,
};
use crate::prob::{Dist, Outcome, Rat};
use crate::semantics::{Automaton, StateDescr};
use crate::syntax::{Alphabet, Expr, Test};

const TESTS: [&str; 2] = ["t", "u"];
const ACTIONS: [&str; 2] = ["p", "q"];
const OUTPUTS: [&str; 2] = ["v", "w"];

pub struct Gen {
    rng: ChaCha8Rng,
}

impl Gen {
    pub fn new(seed: u64) -> Self {
        Gen { rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    /// An alphabet with up to `max_tests` tests and one or two actions and
    /// outputs.
    pub fn alphabet(&mut self, max_tests: usize) -> Alphabet {
        let nt = self.rng.random_range(0..=max_tests.min(TESTS.len()));
        let na = self.rng.random_range(1..=ACTIONS.len());
        let no = self.rng.random_range(1..=OUTPUTS.len());
        Alphabet::new(TESTS[..nt].to_vec(), ACTIONS[..na].to_vec(), OUTPUTS[..no].to_vec()).expect("fixed names")
    }

    /// The alphabet with exactly `tests` tests and both actions and outputs.
    pub fn full_alphabet(tests: usize) -> Alphabet {
        Alphabet::new(TESTS[..tests].to_vec(), ACTIONS.to_vec(), OUTPUTS.to_vec()).expect("fixed names")
    }

    /// Probabilities are drawn from a few common values and small fractions
    /// so that coincidences between subterms are frequent.
    pub fn prob(&mut self) -> Rat {
        const COMMON: [(i64, i64); 7] = [(0, 1), (1, 4), (1, 3), (1, 2), (2, 3), (3, 4), (1, 1)];
        if self.rng.random_bool(0.7) {
            let (n, d) = *COMMON.choose(&mut self.rng).expect("nonempty");
            Rat::new(n, d)
        } else {
            let d = self.rng.random_range(1..=8);
            Rat::new(self.rng.random_range(0..=d), d)
        }
    }

    pub fn test(&mut self, alphabet: &Alphabet, depth: usize) -> Test {
        let tests = alphabet.tests();
        let leaf = depth == 0 || self.rng.random_bool(0.5);
        if leaf {
            return match self.rng.random_range(0..6) {
                0 => Test::One,
                1 => Test::Zero,
                _ if tests.is_empty() => Test::One,
                _ => Test::prim(tests.choose(&mut self.rng).expect("nonempty").clone()),
            };
        }
        match self.rng.random_range(0..3) {
            0 => Test::not(self.test(alphabet, depth - 1)),
            1 => Test::and(self.test(alphabet, depth - 1), self.test(alphabet, depth - 1)),
            _ => Test::or(self.test(alphabet, depth - 1), self.test(alphabet, depth - 1)),
        }
    }

    fn leaf(&mut self, alphabet: &Alphabet) -> Expr {
        match self.rng.random_range(0..6) {
            0 | 1 => Expr::act(alphabet.actions().choose(&mut self.rng).expect("an action").clone()),
            2 => Expr::ret(alphabet.outputs().choose(&mut self.rng).expect("an output").clone()),
            3 => Expr::one(),
            4 => Expr::zero(),
            _ => Expr::test(self.test(alphabet, 2)),
        }
    }

    fn sized(&mut self, alphabet: &Alphabet, size: usize) -> Expr {
        if size <= 1 {
            return self.leaf(alphabet);
        }
        if size == 2 || self.rng.random_bool(0.2) {
            let body = self.sized(alphabet, size - 1);
            return if self.rng.random_bool(0.5) {
                Expr::while_loop(body, self.test(alphabet, 1))
            } else {
                Expr::prob_loop(body, self.prob())
            };
        }
        let left = self.rng.random_range(1..size - 1);
        let e = self.sized(alphabet, left);
        let f = self.sized(alphabet, size - 1 - left);
        match self.rng.random_range(0..3) {
            0 => Expr::seq(e, f),
            1 => Expr::guarded(e, self.test(alphabet, 2), f),
            _ => Expr::prob(e, self.prob(), f),
        }
    }

    /// An expression with AST size between 1 and `max_size`.
    pub fn expr(&mut self, alphabet: &Alphabet, max_size: usize) -> Expr {
        let size = self.rng.random_range(1..=max_size.max(1));
        self.sized(alphabet, size)
    }

    /// An expression that never terminates without first taking an action
    /// (or rejecting): an action followed by anything, or `0`.
    pub fn productive_expr(&mut self, alphabet: &Alphabet, max_size: usize) -> Expr {
        if self.rng.random_range(0..8) == 0 {
            return Expr::zero();
        }
        let p = Expr::act(alphabet.actions().choose(&mut self.rng).expect("an action").clone());
        if max_size <= 2 || self.rng.random_bool(0.3) {
            return p;
        }
        let rest = self.expr(alphabet, max_size - 2);
        Expr::seq(p, rest)
    }

    fn outcome(&mut self, alphabet: &Alphabet, states: usize) -> Outcome<usize> {
        match self.rng.random_range(0..6) {
            0 => Outcome::Reject,
            1 => Outcome::Accept,
            2 => Outcome::Return(alphabet.outputs().choose(&mut self.rng).expect("an output").clone()),
            _ => Outcome::Step(
                alphabet.actions().choose(&mut self.rng).expect("an action").clone(),
                self.rng.random_range(0..states),
            ),
        }
    }

    fn dist(&mut self, alphabet: &Alphabet, states: usize) -> Dist<usize> {
        let k = self.rng.random_range(1..=3);
        let entries: Vec<(Outcome<usize>, i64)> =
            (0..k).map(|_| (self.outcome(alphabet, states), self.rng.random_range(1..=3))).collect();
        let total: i64 = entries.iter().map(|(_, w)| w).sum();
        let mut b = crate::prob::DistBuilder::new();
        for (o, w) in entries {
            b.add(o, Rat::new(w, total));
        }
        b.try_finish().expect("weights sum to one")
    }

    /// An automaton with `states` states. Some rows copy an earlier row so
    /// that nontrivial bisimilarities are common.
    pub fn automaton(&mut self, alphabet: &Alphabet, states: usize) -> Automaton {
        let atoms = alphabet.atoms().expect("small alphabet").len();
        let mut rows: Vec<Vec<Dist<usize>>> = Vec::with_capacity(states);
        for _ in 0..states {
            let row = if !rows.is_empty() && self.rng.random_bool(0.3) {
                rows.choose(&mut self.rng).expect("nonempty").clone()
            } else {
                (0..atoms).map(|_| self.dist(alphabet, states)).collect()
            };
            rows.push(row);
        }
        let descr = (0..states).map(|i| StateDescr::Name(format!("s{i}"))).collect();
        Automaton::new(alphabet.clone(), descr, rows).expect("well-formed rows")
    }

    fn binding(&mut self, alphabet: &Alphabet, sort: MetaSort, max_size: usize) -> Binding {
        match sort {
            MetaSort::Expr => {
                let e = if self.rng.random_bool(0.3) {
                    self.productive_expr(alphabet, max_size)
                } else {
                    self.expr(alphabet, max_size)
                };
                Binding::Expr(Arc::new(e))
            }
            MetaSort::Test => Binding::Test(self.test(alphabet, 2)),
            MetaSort::Prob => Binding::Prob(self.prob()),
            MetaSort::Output => Binding::Output(alphabet.outputs().choose(&mut self.rng).expect("an output").clone()),
        }
    }

    /// Random bindings for every metavariable of `id` that satisfy its side
    /// conditions, with the instance. Gives up after `attempts` tries.
    pub fn axiom_instance(
        &mut self,
        id: AxiomId,
        alphabet: &Alphabet,
        max_size: usize,
        attempts: usize,
    ) -> Option<(Bindings, Instance)> {
        for _ in 0..attempts {
            let mut b = Bindings::new();
            for m in id.metavariables() {
                let sort = metavariable_sort(m).expect("schema metavariable");
                let value = self.binding(alphabet, sort, max_size);
                b.insert(m, value);
            }
            match instantiate_rule(id, &b) {
                Ok(inst) => return Some((b, inst)),
                Err(AxiomError::SideCondition { .. }) => continue,
                Err(e) => panic!("generated bindings for {id} are ill-sorted: {e}"),
            }
        }
        None
    }

    fn sys_prob(&mut self, alphabet: &Alphabet, names: &[String], max_size: usize) -> SysTerm {
        let leaf = |g: &mut Gen| {
            if g.rng.random_bool(0.6) {
                let x = names.choose(&mut g.rng).expect("nonempty").clone();
                SysTerm::Prefixed(Arc::new(g.productive_expr(alphabet, max_size)), x)
            } else {
                SysTerm::Closed(Arc::new(g.expr(alphabet, max_size)))
            }
        };
        let k = self.rng.random_range(1..=3);
        let mut t = leaf(self);
        for _ in 1..k {
            let next = leaf(self);
            t = SysTerm::prob(t, self.prob(), next);
        }
        t
    }

    /// A system with `n` indeterminates `x1..xn` whose prefixes never
    /// terminate, so that it has a unique solution.
    pub fn salomaa_system(&mut self, alphabet: &Alphabet, n: usize, max_size: usize) -> SalomaaSystem {
        let names: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
        let equations = names
            .iter()
            .map(|x| {
                let mut t = self.sys_prob(alphabet, &names, max_size);
                if self.rng.random_bool(0.5) {
                    let other = self.sys_prob(alphabet, &names, max_size);
                    t = SysTerm::guarded(t, self.test(alphabet, 1), other);
                }
                (x.clone(), t)
            })
            .collect();
        SalomaaSystem { alphabet: alphabet.clone(), equations }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::axioms::is_salomaa;

    #[test]
    fn expressions_respect_size_and_alphabet() {
        let mut g = Gen::new(1);
        for _ in 0..300 {
            let a = g.alphabet(2);
            let e = g.expr(&a, 40);
            assert!(e.ast_size() <= 40);
            e.check(&a).unwrap();
        }
    }

    #[test]
    fn generators_are_deterministic() {
        let a = Gen::full_alphabet(2);
        let x: Vec<Expr> = (0..20).map(|_| Gen::new(9).expr(&a, 30)).collect();
        let y: Vec<Expr> = (0..20).map(|_| Gen::new(9).expr(&a, 30)).collect();
        assert_eq!(x, y);
    }

    #[test]
    fn systems_are_salomaa() {
        let mut g = Gen::new(3);
        for _ in 0..50 {
            let a = g.alphabet(2);
            let n = g.rng().random_range(1..=3);
            assert!(is_salomaa(&g.salomaa_system(&a, n, 6)));
        }
    }

    #[test]
    fn every_schematic_axiom_can_be_instantiated() {
        let mut g = Gen::new(4);
        let a = Gen::full_alphabet(1);
        for id in AxiomId::ALL.iter().copied().filter(|id| !matches!(id, AxiomId::BA | AxiomId::UA)) {
            assert!(g.axiom_instance(id, &a, 8, 200).is_some(), "{id}");
        }
    }
}
