//! The equational theory: axiom instances with side conditions, systems of
//! equations and their solutions, and a checker for proof scripts.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use thiserror::Error;

use crate::prob::Rat;
use crate::semantics::never_terminates;
use crate::syntax::{enumerate_atoms, print_expr, print_test, Alphabet, Expr, Test, DEFAULT_MAX_TESTS};

mod proof;
mod schema;
mod system;

pub use proof::{
    check_proof, check_proof_text, parse_proof, Justification, LineReport, ProofError, ProofReport, ProofScript, Step,
    StepError,
};
pub use system::{
    check_solution, is_salomaa, parse_solution_map, parse_system, print_solution_map, substitute, system_of_automaton,
    tau_bar, vector_distance, SalomaaSystem, SysTerm, SystemError,
};

macro_rules! axiom_ids {
    ($($id:ident),* $(,)?) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub enum AxiomId { $($id),* }

        impl AxiomId {
            pub const ALL: &'static [AxiomId] = &[$(AxiomId::$id),*];

            pub fn name(self) -> &'static str {
                match self { $(AxiomId::$id => stringify!($id)),* }
            }
        }
    };
}

axiom_ids!(
    G1, G2, G3, G4, D, P1, P2, P3, P4, S1, S2, S3, S4, S5, S6, S7, S8, L1, L2, L3, L4, L5, L6, F1, F2, DF1, DF2, DF3,
    DF4, DF5, DF6, DF7, DF8, DF9, DF10, DF11, DF12, BA, UA,
);

impl AxiomId {
    /// Whether the law is a plain equation (no premise, no side condition
    /// beyond nonzero denominators).
    pub fn is_equational(self) -> bool {
        schema::schema(self).is_some_and(|s| s.premise.is_none() && s.conditions.is_empty())
    }

    /// Whether the law has an equational premise that must be cited.
    pub fn has_premise(self) -> bool {
        schema::schema(self).is_some_and(|s| s.premise.is_some())
    }

    /// The metavariables the law is stated over.
    pub fn metavariables(self) -> Vec<&'static str> {
        schema::schema(self).map(|s| schema::metavariables(&s)).unwrap_or_default()
    }
}

impl fmt::Display for AxiomId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AxiomId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AxiomId::ALL.iter().copied().find(|id| id.name() == s).ok_or_else(|| format!("unknown axiom `{s}`"))
    }
}

/// The sort of a metavariable: `e f g h` range over expressions, `b c` over
/// tests, `r s` over probabilities, `v` over outputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetaSort {
    Expr,
    Test,
    Prob,
    Output,
}

pub fn metavariable_sort(name: &str) -> Option<MetaSort> {
    match name {
        "e" | "f" | "g" | "h" => Some(MetaSort::Expr),
        "b" | "c" => Some(MetaSort::Test),
        "r" | "s" => Some(MetaSort::Prob),
        "v" => Some(MetaSort::Output),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Binding {
    Expr(Arc<Expr>),
    Test(Test),
    Prob(Rat),
    Output(String),
}

impl fmt::Display for Binding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Binding::Expr(e) => f.write_str(&print_expr(e)),
            Binding::Test(b) => f.write_str(&print_test(b)),
            Binding::Prob(r) => write!(f, "{r}"),
            Binding::Output(v) => f.write_str(v),
        }
    }
}

/// An assignment of values to metavariables.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Bindings(BTreeMap<String, Binding>);

impl Bindings {
    pub fn new() -> Self {
        Bindings::default()
    }

    pub fn get(&self, name: &str) -> Option<&Binding> {
        self.0.get(name)
    }

    pub fn insert(&mut self, name: impl Into<String>, value: Binding) {
        self.0.insert(name.into(), value);
    }

    pub fn with_expr(mut self, name: &str, e: impl Into<Arc<Expr>>) -> Self {
        self.insert(name, Binding::Expr(e.into()));
        self
    }

    pub fn with_test(mut self, name: &str, b: Test) -> Self {
        self.insert(name, Binding::Test(b));
        self
    }

    pub fn with_prob(mut self, name: &str, r: Rat) -> Self {
        self.insert(name, Binding::Prob(r));
        self
    }

    pub fn with_output(mut self, name: &str, v: impl Into<String>) -> Self {
        self.insert(name, Binding::Output(v.into()));
        self
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Binding)> {
        self.0.iter()
    }

    fn missing(name: &str) -> AxiomError {
        AxiomError::MissingBinding(name.to_string())
    }

    fn wrong(name: &str, expected: MetaSort) -> AxiomError {
        AxiomError::WrongSort { name: name.to_string(), expected }
    }

    pub fn expr(&self, name: &str) -> Result<Arc<Expr>, AxiomError> {
        match self.get(name) {
            Some(Binding::Expr(e)) => Ok(e.clone()),
            Some(_) => Err(Self::wrong(name, MetaSort::Expr)),
            None => Err(Self::missing(name)),
        }
    }

    pub fn test(&self, name: &str) -> Result<Test, AxiomError> {
        match self.get(name) {
            Some(Binding::Test(b)) => Ok(b.clone()),
            Some(_) => Err(Self::wrong(name, MetaSort::Test)),
            None => Err(Self::missing(name)),
        }
    }

    pub fn prob(&self, name: &str) -> Result<Rat, AxiomError> {
        match self.get(name) {
            Some(Binding::Prob(r)) => Ok(r.clone()),
            Some(_) => Err(Self::wrong(name, MetaSort::Prob)),
            None => Err(Self::missing(name)),
        }
    }

    pub fn output(&self, name: &str) -> Result<String, AxiomError> {
        match self.get(name) {
            Some(Binding::Output(v)) => Ok(v.clone()),
            Some(_) => Err(Self::wrong(name, MetaSort::Output)),
            None => Err(Self::missing(name)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AxiomError {
    #[error("no binding for metavariable `{0}`")]
    MissingBinding(String),
    #[error("metavariable `{name}` must be bound to a {expected:?}")]
    WrongSort { name: String, expected: MetaSort },
    #[error("`{name}` is not a metavariable of {axiom}")]
    UnknownMetavariable { axiom: AxiomId, name: String },
    #[error("side condition of {axiom} fails: {condition}")]
    SideCondition { axiom: AxiomId, condition: String },
    #[error("{0} is a proof rule, not an instantiable law")]
    NotSchematic(AxiomId),
}

/// A fully instantiated law: the premise to be established (if any) and
/// the conclusion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub premise: Option<(Arc<Expr>, Arc<Expr>)>,
    pub lhs: Arc<Expr>,
    pub rhs: Arc<Expr>,
}

fn expr_prims(e: &Expr, out: &mut BTreeSet<String>) {
    let test = |b: &Test, out: &mut BTreeSet<String>| {
        let mut v = Vec::new();
        b.prims(&mut v);
        out.extend(v);
    };
    match e {
        Expr::Act(_) | Expr::Return(_) => {}
        Expr::Test(b) => test(b, out),
        Expr::GuardedChoice(x, b, y) => {
            test(b, out);
            expr_prims(x, out);
            expr_prims(y, out);
        }
        Expr::Seq(x, y) | Expr::ProbChoice(x, _, y) => {
            expr_prims(x, out);
            expr_prims(y, out);
        }
        Expr::GuardedLoop(x, b) => {
            test(b, out);
            expr_prims(x, out);
        }
        Expr::ProbLoop(x, _) => expr_prims(x, out),
    }
}

/// `E(e)_α = 0` for every atom over the tests `e` mentions; other tests
/// cannot affect `E`.
fn never_terminates_anywhere(e: &Arc<Expr>) -> Result<bool, AxiomError> {
    let mut prims = BTreeSet::new();
    expr_prims(e, &mut prims);
    let alphabet = Alphabet::new(prims, Vec::<String>::new(), Vec::<String>::new())
        .map_err(|err| AxiomError::SideCondition { axiom: AxiomId::F1, condition: err.to_string() })?;
    let atoms = enumerate_atoms(&alphabet, DEFAULT_MAX_TESTS)
        .map_err(|err| AxiomError::SideCondition { axiom: AxiomId::F1, condition: err.to_string() })?;
    Ok(never_terminates(e, &atoms))
}

fn check_bindings(id: AxiomId, b: &Bindings) -> Result<(), AxiomError> {
    let known = id.metavariables();
    for (name, value) in b.iter() {
        if !known.contains(&name.as_str()) {
            return Err(AxiomError::UnknownMetavariable { axiom: id, name: name.clone() });
        }
        let ok = matches!(
            (metavariable_sort(name), value),
            (Some(MetaSort::Expr), Binding::Expr(_))
                | (Some(MetaSort::Test), Binding::Test(_))
                | (Some(MetaSort::Prob), Binding::Prob(_))
                | (Some(MetaSort::Output), Binding::Output(_))
        );
        if !ok {
            let expected = metavariable_sort(name).expect("known metavariable");
            return Err(AxiomError::WrongSort { name: name.clone(), expected });
        }
    }
    Ok(())
}

/// Instantiates any law, returning its premise (for the quasi-equational
/// rules) and conclusion. Side conditions are checked.
pub fn instantiate_rule(id: AxiomId, bindings: &Bindings) -> Result<Instance, AxiomError> {
    let s = schema::schema(id).ok_or(AxiomError::NotSchematic(id))?;
    check_bindings(id, bindings)?;
    for cond in &s.conditions {
        match *cond {
            schema::Cond::Positive(n) => {
                if !bindings.prob(n)?.is_positive() {
                    return Err(AxiomError::SideCondition { axiom: id, condition: format!("{n} > 0") });
                }
            }
            schema::Cond::NeverTerminates(n) => {
                if !never_terminates_anywhere(&bindings.expr(n)?)? {
                    return Err(AxiomError::SideCondition { axiom: id, condition: format!("E({n}) = 0") });
                }
            }
        }
    }
    let premise = match &s.premise {
        Some((l, r)) => Some((schema::instantiate(l, bindings)?, schema::instantiate(r, bindings)?)),
        None => None,
    };
    Ok(Instance { premise, lhs: schema::instantiate(&s.lhs, bindings)?, rhs: schema::instantiate(&s.rhs, bindings)? })
}

/// The `(lhs, rhs)` of an axiom instance. For the quasi-equational rules
/// this is the conclusion; the premise must be established separately.
pub fn instantiate_axiom(id: AxiomId, bindings: &Bindings) -> Result<(Expr, Expr), AxiomError> {
    let inst = instantiate_rule(id, bindings)?;
    Ok(((*inst.lhs).clone(), (*inst.rhs).clone()))
}

/// Completes `explicit` by matching the law's premise against `premise`
/// and its conclusion against `(lhs, rhs)`, then instantiates. Returns the
/// instance so the caller can compare it with what was claimed.
pub fn infer_instance(
    id: AxiomId,
    explicit: &Bindings,
    premise: Option<(&Arc<Expr>, &Arc<Expr>)>,
    lhs: &Arc<Expr>,
    rhs: &Arc<Expr>,
) -> Result<Instance, AxiomError> {
    let s = schema::schema(id).ok_or(AxiomError::NotSchematic(id))?;
    check_bindings(id, explicit)?;
    let mut b = explicit.clone();
    if let (Some((pl, pr)), Some((el, er))) = (&s.premise, premise) {
        schema::unify(pl, el, &mut b);
        schema::unify(pr, er, &mut b);
    }
    schema::unify(&s.lhs, lhs, &mut b);
    schema::unify(&s.rhs, rhs, &mut b);
    instantiate_rule(id, &b)
}
