//! Monte Carlo execution of programs and automata.
//!
//! Each run draws its randomness from a ChaCha8 generator seeded by mixing
//! the user seed with the run index, so `estimate` gives the same counts
//! whether runs execute sequentially or in parallel.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::prob::{Dist, Outcome, Rat};
use crate::semantics::{build_automaton, Automaton, AutomatonError, StateId};
use crate::syntax::{Alphabet, Atom, Expr};

pub const DEFAULT_MAX_STEPS: usize = 10_000;

/// Odd constant used by splitmix64 to spread run indices.
const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Automaton(#[from] AutomatonError),
    #[error("atom {0} is not an atom of the alphabet")]
    UnknownAtom(Atom),
    #[error("cyclic atom sequence is empty")]
    EmptyCycle,
    #[error("state {0} does not exist")]
    NoSuchState(StateId),
}

/// How the ambient atom is chosen before each transition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AtomPolicy {
    Fixed(Atom),
    UniformRandom,
    /// Atom `k mod len` is used for the `k`-th transition.
    CyclicSequence(Vec<Atom>),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Terminal {
    Rejected,
    Accepted,
    Returned(String),
    Timeout,
}

impl fmt::Display for Terminal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Terminal::Rejected => f.write_str("rejected"),
            Terminal::Accepted => f.write_str("accepted"),
            Terminal::Returned(v) => write!(f, "returned:{v}"),
            Terminal::Timeout => f.write_str("timeout"),
        }
    }
}

impl Serialize for Terminal {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceStep {
    pub atom: String,
    pub action: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RunResult {
    pub terminal: Terminal,
    pub trace: Vec<TraceStep>,
}

/// Terminal counts over `n` runs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Estimate {
    pub n: u64,
    pub counts: BTreeMap<Terminal, u64>,
}

impl Estimate {
    pub fn frequency(&self, t: &Terminal) -> Rat {
        let c = self.counts.get(t).copied().unwrap_or(0);
        Rat::from_big(BigInt::from(c), BigInt::from(self.n))
    }

    pub fn frequencies(&self) -> BTreeMap<Terminal, Rat> {
        self.counts.keys().map(|t| (t.clone(), self.frequency(t))).collect()
    }
}

impl Serialize for Estimate {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_map(self.counts.iter().map(|(t, c)| (t.to_string(), format!("{c}/{}", self.n))))
    }
}

/// Seed of run `index` derived from `seed` by one splitmix64 step.
pub fn sub_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Picks an outcome of `d` for a uniform 64-bit draw `u`: the first outcome
/// in canonical order whose cumulative mass `c` satisfies `u / 2^64 < c`.
fn sample(d: &Dist<StateId>, u: u64) -> &Outcome<StateId> {
    let u = BigInt::from(u);
    let mut cum = Rat::zero();
    let mut last = None;
    for (o, w) in d.iter() {
        cum = &cum + w;
        last = Some(o);
        if &u * cum.denom() < cum.numer() << 64 {
            return o;
        }
    }
    last.expect("distributions are nonempty")
}

/// A program compiled once and then executed many times.
#[derive(Debug, Clone)]
pub struct Simulator {
    aut: Automaton,
    start: StateId,
}

impl Simulator {
    pub fn new(alphabet: &Alphabet, e: &Expr) -> Result<Self, SimError> {
        let (aut, start) = build_automaton(alphabet, e)?;
        Ok(Simulator { aut, start })
    }

    pub fn from_automaton(aut: Automaton, start: StateId) -> Result<Self, SimError> {
        if start >= aut.len() {
            return Err(SimError::NoSuchState(start));
        }
        Ok(Simulator { aut, start })
    }

    pub fn automaton(&self) -> &Automaton {
        &self.aut
    }

    fn resolve(&self, policy: &AtomPolicy) -> Result<Resolved, SimError> {
        let index =
            |a: &Atom| self.aut.atoms().iter().position(|b| b == a).ok_or_else(|| SimError::UnknownAtom(a.clone()));
        Ok(match policy {
            AtomPolicy::Fixed(a) => Resolved::Cycle(vec![index(a)?]),
            AtomPolicy::UniformRandom => Resolved::Uniform(self.aut.atoms().len()),
            AtomPolicy::CyclicSequence(v) if v.is_empty() => return Err(SimError::EmptyCycle),
            AtomPolicy::CyclicSequence(v) => Resolved::Cycle(v.iter().map(index).collect::<Result<_, _>>()?),
        })
    }

    /// One run with its own seed. Stops with `Timeout` once `max_steps`
    /// action steps have been taken without terminating.
    pub fn run(&self, policy: &AtomPolicy, seed: u64, max_steps: usize) -> Result<RunResult, SimError> {
        let policy = self.resolve(policy)?;
        Ok(self.run_resolved(&policy, seed, max_steps, true))
    }

    fn run_resolved(&self, policy: &Resolved, seed: u64, max_steps: usize, record: bool) -> RunResult {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut state = self.start;
        let mut trace = Vec::new();
        for k in 0..max_steps {
            let a = match policy {
                Resolved::Uniform(n) => rng.random_range(0..*n),
                Resolved::Cycle(v) => v[k % v.len()],
            };
            let terminal = match sample(self.aut.trans(state, a), rng.random::<u64>()) {
                Outcome::Reject => Terminal::Rejected,
                Outcome::Accept => Terminal::Accepted,
                Outcome::Return(v) => Terminal::Returned(v.clone()),
                Outcome::Step(p, t) => {
                    if record {
                        trace.push(TraceStep { atom: self.aut.atoms()[a].literal(), action: p.clone() });
                    }
                    state = *t;
                    continue;
                }
            };
            return RunResult { terminal, trace };
        }
        RunResult { terminal: Terminal::Timeout, trace }
    }

    /// `n` runs with seeds `sub_seed(seed, i)`, counted in parallel.
    pub fn estimate(&self, policy: &AtomPolicy, n: u64, seed: u64, max_steps: usize) -> Result<Estimate, SimError> {
        let policy = self.resolve(policy)?;
        let counts = (0..n)
            .into_par_iter()
            .fold(BTreeMap::new, |mut acc: BTreeMap<Terminal, u64>, i| {
                let r = self.run_resolved(&policy, sub_seed(seed, i), max_steps, false);
                *acc.entry(r.terminal).or_default() += 1;
                acc
            })
            .reduce(BTreeMap::new, |mut a, b| {
                for (t, c) in b {
                    *a.entry(t).or_default() += c;
                }
                a
            });
        Ok(Estimate { n, counts })
    }
}

enum Resolved {
    Uniform(usize),
    Cycle(Vec<usize>),
}

/// Runs `e` once from `seed`.
pub fn run_once(
    alphabet: &Alphabet,
    e: &Expr,
    policy: &AtomPolicy,
    seed: u64,
    max_steps: usize,
) -> Result<RunResult, SimError> {
    Simulator::new(alphabet, e)?.run(policy, seed, max_steps)
}

/// Terminal frequencies of `e` over `n` runs.
pub fn estimate(
    alphabet: &Alphabet,
    e: &Expr,
    policy: &AtomPolicy,
    n: u64,
    seed: u64,
    max_steps: usize,
) -> Result<Estimate, SimError> {
    Simulator::new(alphabet, e)?.estimate(policy, n, seed, max_steps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_program;

    fn prog(src: &str) -> (Alphabet, Expr) {
        parse_program(src).unwrap()
    }

    fn fixed_empty(a: &Alphabet) -> AtomPolicy {
        AtomPolicy::Fixed(Atom::parse_literal("", a).unwrap())
    }

    #[test]
    fn return_terminates_immediately() {
        let (a, e) = prog("outputs v; ret v");
        for policy in [fixed_empty(&a), AtomPolicy::UniformRandom] {
            let r = run_once(&a, &e, &policy, 7, DEFAULT_MAX_STEPS).unwrap();
            assert_eq!(r.terminal, Terminal::Returned("v".into()));
            assert!(r.trace.is_empty());
        }
        let est = estimate(&a, &e, &AtomPolicy::UniformRandom, 50, 1, 10).unwrap();
        assert_eq!(est.frequency(&Terminal::Returned("v".into())), Rat::one());
    }

    #[test]
    fn zero_rejects() {
        let (a, e) = prog("tests t; 0");
        let r = run_once(&a, &e, &AtomPolicy::UniformRandom, 0, 3).unwrap();
        assert_eq!(r.terminal, Terminal::Rejected);
    }

    #[test]
    fn action_loop_times_out() {
        let (a, e) = prog("actions p; p *[1]");
        let r = run_once(&a, &e, &fixed_empty(&a), 3, 5).unwrap();
        assert_eq!(r.terminal, Terminal::Timeout);
        assert_eq!(r.trace.len(), 5);
        assert!(r.trace.iter().all(|s| s.action == "p"));
    }

    #[test]
    fn cyclic_policy_drives_guards() {
        let (a, e) = prog("tests t; actions p; outputs v; p *[t] ; ret v");
        let t = Atom::parse_literal("t", &a).unwrap();
        let f = Atom::parse_literal("", &a).unwrap();
        let r = run_once(&a, &e, &AtomPolicy::CyclicSequence(vec![t.clone(), t, f]), 0, 100).unwrap();
        assert_eq!(r.terminal, Terminal::Returned("v".into()));
        assert_eq!(r.trace.len(), 2);
        assert!(matches!(run_once(&a, &e, &AtomPolicy::CyclicSequence(vec![]), 0, 1), Err(SimError::EmptyCycle)));
    }

    #[test]
    fn unknown_atom_is_an_error() {
        let (a, e) = prog("tests t; 1");
        let (b, _) = prog("tests u; 1");
        let bad = AtomPolicy::Fixed(Atom::parse_literal("u", &b).unwrap());
        assert!(matches!(run_once(&a, &e, &bad, 0, 1), Err(SimError::UnknownAtom(_))));
    }

    #[test]
    fn estimates_are_deterministic() {
        let (a, e) = prog("outputs d1, d2, d3; ((ret d1 +{1/2} ret d2) +{1/2} (ret d3 +{1/2} 1)) *[1]");
        let x = estimate(&a, &e, &AtomPolicy::UniformRandom, 2000, 42, 200).unwrap();
        let y = estimate(&a, &e, &AtomPolicy::UniformRandom, 2000, 42, 200).unwrap();
        assert_eq!(x, y);
        assert_eq!(x.counts.values().sum::<u64>(), 2000);
        let z = estimate(&a, &e, &AtomPolicy::UniformRandom, 2000, 43, 200).unwrap();
        assert_ne!(x, z);
    }

    #[test]
    fn sampling_thresholds_are_exact() {
        let d = Dist::from_entries([(Outcome::Reject, Rat::new(1, 3)), (Outcome::Accept, Rat::new(2, 3))]).unwrap();
        // floor(2^64 / 3) is below the threshold, one more is not.
        let third = u64::MAX / 3;
        assert_eq!(sample(&d, third), &Outcome::Reject);
        assert_eq!(sample(&d, third + 1), &Outcome::Accept);
        assert_eq!(sample(&d, u64::MAX), &Outcome::Accept);
        assert_eq!(sample(&d, 0), &Outcome::Reject);
    }

    #[test]
    fn sub_seeds_differ() {
        let seeds: std::collections::BTreeSet<u64> = (0..1000).map(|i| sub_seed(5, i)).collect();
        assert_eq!(seeds.len(), 1000);
    }
}
