//! Probabilistic guarded Kleene algebra with tests: syntax, derivative
//! semantics, bisimulation checking, an equational proof checker, and a
//! Monte Carlo simulator.

pub mod axioms;
pub mod equivalence;
pub mod gen;
pub mod prob;
pub mod semantics;
pub mod sim;
pub mod syntax;
