//! Operational semantics: Brzozowski derivatives, termination weights,
//! reachable automata, and the expansion of an expression into sums.

use std::sync::Arc;

use crate::prob::{Dist, DistBuilder, Outcome, Rat};
use crate::syntax::{Atom, Expr, Test};

mod automaton;
mod expand;

pub use automaton::{
    build_automaton, build_automaton_many, merge_automata, Automaton, AutomatonError, AutomatonJson, StateDescr,
    StateId, StateTable,
};
pub use expand::{convex_sum, expand, guarded_sum, guarded_sum_over_atoms};

/// A distribution whose step targets are expressions.
pub type ExprDist = Dist<Arc<Expr>>;

fn one() -> Arc<Expr> {
    Arc::new(Expr::Test(Test::One))
}

/// `∂(e)_α`: the one-step behaviour of `e` under atom `α`.
pub fn derivative(e: &Arc<Expr>, atom: &Atom) -> ExprDist {
    match &**e {
        Expr::Test(b) => Dist::dirac(if atom.entails(b) { Outcome::Accept } else { Outcome::Reject }),
        Expr::Return(v) => Dist::dirac(Outcome::Return(v.clone())),
        Expr::Act(p) => Dist::dirac(Outcome::Step(p.clone(), one())),
        Expr::GuardedChoice(f, b, g) => {
            if atom.entails(b) {
                derivative(f, atom)
            } else {
                derivative(g, atom)
            }
        }
        Expr::ProbChoice(f, r, g) => {
            if r.is_one() {
                derivative(f, atom)
            } else if r.is_zero() {
                derivative(g, atom)
            } else {
                Dist::convex(r, &derivative(f, atom), &derivative(g, atom)).expect("parsed probabilities lie in [0, 1]")
            }
        }
        Expr::Seq(f, g) => seq_adjust(&derivative(f, atom), atom, g),
        Expr::GuardedLoop(body, b) => {
            if !atom.entails(b) {
                return Dist::dirac(Outcome::Accept);
            }
            let nu = derivative(body, atom);
            let t = nu.accept_mass();
            if t.is_one() {
                return Dist::dirac(Outcome::Reject);
            }
            let denom = t.complement();
            let mut acc = DistBuilder::new();
            for (x, w) in nu.iter() {
                let w = w / &denom;
                match x {
                    Outcome::Accept => {}
                    Outcome::Step(p, k) => {
                        acc.add(Outcome::Step(p.clone(), Arc::new(Expr::Seq(k.clone(), e.clone()))), w)
                    }
                    other => acc.add(other.clone(), w),
                }
            }
            acc.finish()
        }
        Expr::ProbLoop(body, r) => {
            let nu = derivative(body, atom);
            let t = nu.accept_mass();
            if r.is_one() && t.is_one() {
                return Dist::dirac(Outcome::Reject);
            }
            let denom = (r * &t).complement();
            let mut acc = DistBuilder::new();
            acc.add(Outcome::Accept, r.complement() / &denom);
            for (x, w) in nu.iter() {
                let w = r * w / &denom;
                match x {
                    Outcome::Accept => {}
                    Outcome::Step(p, k) => {
                        acc.add(Outcome::Step(p.clone(), Arc::new(Expr::Seq(k.clone(), e.clone()))), w)
                    }
                    other => acc.add(other.clone(), w),
                }
            }
            acc.finish()
        }
    }
}

/// `ν ◁_α f`: continues every accepting branch of `ν` with `f`, and
/// appends `f` to every step target.
pub fn seq_adjust(nu: &ExprDist, atom: &Atom, f: &Arc<Expr>) -> ExprDist {
    let mut acc = DistBuilder::new();
    for (x, w) in nu.iter() {
        match x {
            Outcome::Accept => acc.add_scaled(w, &derivative(f, atom)),
            Outcome::Step(p, k) => {
                acc.add(Outcome::Step(p.clone(), Arc::new(Expr::Seq(k.clone(), f.clone()))), w.clone())
            }
            other => acc.add(other.clone(), w.clone()),
        }
    }
    acc.finish()
}

/// `E(e)_α`: the probability that `e` accepts immediately, computed from
/// its own recursive definition rather than from the derivative.
pub fn termination(e: &Expr, atom: &Atom) -> Rat {
    let bit = |b: bool| if b { Rat::one() } else { Rat::zero() };
    match e {
        Expr::Act(_) | Expr::Return(_) => Rat::zero(),
        Expr::Test(b) => bit(atom.entails(b)),
        Expr::GuardedChoice(f, b, g) => {
            if atom.entails(b) {
                termination(f, atom)
            } else {
                termination(g, atom)
            }
        }
        Expr::ProbChoice(f, r, g) => r * termination(f, atom) + r.complement() * termination(g, atom),
        Expr::Seq(f, g) => {
            let ef = termination(f, atom);
            if ef.is_zero() {
                ef
            } else {
                ef * termination(g, atom)
            }
        }
        Expr::GuardedLoop(_, b) => bit(!atom.entails(b)),
        Expr::ProbLoop(f, r) => {
            let ef = termination(f, atom);
            if r.is_one() && ef.is_one() {
                Rat::zero()
            } else {
                r.complement() / (r * &ef).complement()
            }
        }
    }
}

/// Whether `E(e)_α = 0` for every atom.
pub fn never_terminates(e: &Expr, atoms: &[Atom]) -> bool {
    atoms.iter().all(|a| termination(e, a).is_zero())
}

/// The syntactic upper bound `#(e)` on the number of reachable states.
pub fn size_bound(e: &Expr) -> usize {
    match e {
        Expr::Test(_) | Expr::Return(_) => 1,
        Expr::Act(_) => 2,
        Expr::GuardedChoice(f, _, g) | Expr::Seq(f, g) | Expr::ProbChoice(f, _, g) => size_bound(f) + size_bound(g),
        Expr::GuardedLoop(f, _) | Expr::ProbLoop(f, _) => size_bound(f),
    }
}
