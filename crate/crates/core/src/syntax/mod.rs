//! Two-sorted abstract syntax: Boolean tests and program expressions,
//! plus the alphabet they range over and atom enumeration.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::prob::Rat;

mod lexer;
mod parser;
mod print;

pub(crate) use lexer::Tok;
pub use parser::{parse_expr, parse_program, parse_test, ParseError, ParseErrorKind, Parser, Term, TermMode};
pub(crate) use print::{expr_at, expr_level, LVL_GUARD, LVL_SEQ};
pub use print::{print_expr, print_program, print_test};

/// Default cap on the number of primitive tests (2^16 atoms).
pub const DEFAULT_MAX_TESTS: usize = 16;

/// Words that cannot be used as declared names.
pub const RESERVED: &[&str] =
    &["ret", "tests", "actions", "outputs", "by", "system", "refl", "sym", "trans", "cong", "ba", "ua"];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlphabetError {
    #[error("`{0}` is not a valid identifier")]
    BadName(String),
    #[error("`{0}` is a reserved word")]
    Reserved(String),
    #[error("`{0}` is declared more than once")]
    DeclaredTwice(String),
    #[error("alphabet has {found} tests, limit is {limit}")]
    TooManyTests { found: usize, limit: usize },
    #[error("alphabets declare different tests")]
    TestMismatch,
}

pub(crate) fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic()) && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// The sorted name sets a program is written over.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Alphabet {
    tests: Vec<String>,
    actions: Vec<String>,
    outputs: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sort {
    Test,
    Action,
    Output,
}

impl Alphabet {
    pub fn new<S: Into<String>>(
        tests: impl IntoIterator<Item = S>,
        actions: impl IntoIterator<Item = S>,
        outputs: impl IntoIterator<Item = S>,
    ) -> Result<Self, AlphabetError> {
        let tests: Vec<String> = tests.into_iter().map(Into::into).collect();
        let actions: Vec<String> = actions.into_iter().map(Into::into).collect();
        let outputs: Vec<String> = outputs.into_iter().map(Into::into).collect();
        let mut seen = HashSet::new();
        for name in tests.iter().chain(&actions).chain(&outputs) {
            if !is_identifier(name) {
                return Err(AlphabetError::BadName(name.clone()));
            }
            if RESERVED.contains(&name.as_str()) {
                return Err(AlphabetError::Reserved(name.clone()));
            }
            if !seen.insert(name.clone()) {
                return Err(AlphabetError::DeclaredTwice(name.clone()));
            }
        }
        Ok(Alphabet { tests, actions, outputs })
    }

    pub fn tests(&self) -> &[String] {
        &self.tests
    }

    pub fn actions(&self) -> &[String] {
        &self.actions
    }

    pub fn outputs(&self) -> &[String] {
        &self.outputs
    }

    pub fn sort_of(&self, name: &str) -> Option<Sort> {
        if self.tests.iter().any(|t| t == name) {
            Some(Sort::Test)
        } else if self.actions.iter().any(|t| t == name) {
            Some(Sort::Action)
        } else if self.outputs.iter().any(|t| t == name) {
            Some(Sort::Output)
        } else {
            None
        }
    }

    /// Union of two alphabets with identical test sets; actions and outputs
    /// keep `self`'s order followed by names new in `other`.
    pub fn union(&self, other: &Alphabet) -> Result<Alphabet, AlphabetError> {
        let mine: HashSet<_> = self.tests.iter().collect();
        let theirs: HashSet<_> = other.tests.iter().collect();
        if mine != theirs {
            return Err(AlphabetError::TestMismatch);
        }
        let merge = |a: &[String], b: &[String]| {
            let mut out = a.to_vec();
            for x in b {
                if !out.contains(x) {
                    out.push(x.clone());
                }
            }
            out
        };
        Alphabet::new(self.tests.clone(), merge(&self.actions, &other.actions), merge(&self.outputs, &other.outputs))
    }

    /// All atoms, lexicographic in declaration order with `false < true`.
    pub fn atoms(&self) -> Result<Vec<Atom>, AlphabetError> {
        enumerate_atoms(self, DEFAULT_MAX_TESTS)
    }
}

/// Lists every total assignment over `alphabet`'s tests. The first declared
/// test is the most significant position.
pub fn enumerate_atoms(alphabet: &Alphabet, max_tests: usize) -> Result<Vec<Atom>, AlphabetError> {
    let n = alphabet.tests.len();
    if n > max_tests {
        return Err(AlphabetError::TooManyTests { found: n, limit: max_tests });
    }
    let atoms = (0u64..1u64 << n)
        .map(|i| {
            let assignment =
                alphabet.tests.iter().enumerate().map(|(j, t)| (t.clone(), (i >> (n - 1 - j)) & 1 == 1)).collect();
            Atom { assignment }
        })
        .collect();
    Ok(atoms)
}

/// Boolean test expressions.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Test {
    Zero,
    One,
    Prim(String),
    Or(Box<Test>, Box<Test>),
    And(Box<Test>, Box<Test>),
    Not(Box<Test>),
}

impl Test {
    pub fn prim(name: impl Into<String>) -> Test {
        Test::Prim(name.into())
    }

    pub fn or(b: Test, c: Test) -> Test {
        Test::Or(Box::new(b), Box::new(c))
    }

    pub fn and(b: Test, c: Test) -> Test {
        Test::And(Box::new(b), Box::new(c))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(b: Test) -> Test {
        Test::Not(Box::new(b))
    }

    pub fn prims(&self, out: &mut Vec<String>) {
        match self {
            Test::Zero | Test::One => {}
            Test::Prim(t) => out.push(t.clone()),
            Test::Or(b, c) | Test::And(b, c) => {
                b.prims(out);
                c.prims(out);
            }
            Test::Not(b) => b.prims(out),
        }
    }
}

impl fmt::Display for Test {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_test(self))
    }
}

/// A total truth assignment over the primitive tests.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    assignment: BTreeMap<String, bool>,
}

impl Atom {
    pub fn from_assignment(assignment: BTreeMap<String, bool>) -> Self {
        Atom { assignment }
    }

    pub fn get(&self, test: &str) -> Option<bool> {
        self.assignment.get(test).copied()
    }

    pub fn assignment(&self) -> &BTreeMap<String, bool> {
        &self.assignment
    }

    /// Evaluates `b` under this assignment.
    pub fn entails(&self, b: &Test) -> bool {
        match b {
            Test::Zero => false,
            Test::One => true,
            Test::Prim(t) => self.get(t).unwrap_or(false),
            Test::Or(b, c) => self.entails(b) || self.entails(c),
            Test::And(b, c) => self.entails(b) && self.entails(c),
            Test::Not(b) => !self.entails(b),
        }
    }

    /// The test characterising exactly this atom: a conjunction of literals
    /// in declaration order, or `1` when there are no tests.
    pub fn to_test(&self, alphabet: &Alphabet) -> Test {
        alphabet
            .tests()
            .iter()
            .map(|t| {
                let lit = Test::prim(t.clone());
                if self.get(t).unwrap_or(false) {
                    lit
                } else {
                    Test::not(lit)
                }
            })
            .reduce(Test::and)
            .unwrap_or(Test::One)
    }

    /// Parses a comma-separated set of the tests that hold, e.g. `t,u`.
    /// Braces are optional and the empty string denotes all-false.
    pub fn parse_literal(s: &str, alphabet: &Alphabet) -> Result<Atom, String> {
        let body = s.trim().trim_start_matches('{').trim_end_matches('}');
        let mut assignment: BTreeMap<String, bool> = alphabet.tests().iter().map(|t| (t.clone(), false)).collect();
        for item in body.split(',').map(str::trim).filter(|x| !x.is_empty()) {
            match assignment.get_mut(item) {
                Some(v) => *v = true,
                None => return Err(format!("`{item}` is not a declared test")),
            }
        }
        Ok(Atom { assignment })
    }

    /// The comma-set of tests that hold, in alphabetical order.
    pub fn literal(&self) -> String {
        self.assignment.iter().filter(|(_, v)| **v).map(|(k, _)| k.as_str()).collect::<Vec<_>>().join(",")
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.literal())
    }
}

/// Whether `b` and `c` agree on every atom.
pub fn bool_equiv(atoms: &[Atom], b: &Test, c: &Test) -> bool {
    atoms.iter().all(|a| a.entails(b) == a.entails(c))
}

/// Program expressions. Children are shared so that derivatives can reuse
/// subterms without copying.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Expr {
    Act(String),
    Test(Test),
    Return(String),
    GuardedChoice(Arc<Expr>, Test, Arc<Expr>),
    Seq(Arc<Expr>, Arc<Expr>),
    GuardedLoop(Arc<Expr>, Test),
    ProbChoice(Arc<Expr>, Rat, Arc<Expr>),
    ProbLoop(Arc<Expr>, Rat),
}

impl Expr {
    pub fn act(p: impl Into<String>) -> Expr {
        Expr::Act(p.into())
    }

    pub fn ret(v: impl Into<String>) -> Expr {
        Expr::Return(v.into())
    }

    pub fn one() -> Expr {
        Expr::Test(Test::One)
    }

    pub fn zero() -> Expr {
        Expr::Test(Test::Zero)
    }

    pub fn test(b: Test) -> Expr {
        Expr::Test(b)
    }

    pub fn seq(e: impl Into<Arc<Expr>>, f: impl Into<Arc<Expr>>) -> Expr {
        Expr::Seq(e.into(), f.into())
    }

    pub fn guarded(e: impl Into<Arc<Expr>>, b: Test, f: impl Into<Arc<Expr>>) -> Expr {
        Expr::GuardedChoice(e.into(), b, f.into())
    }

    pub fn prob(e: impl Into<Arc<Expr>>, r: Rat, f: impl Into<Arc<Expr>>) -> Expr {
        Expr::ProbChoice(e.into(), r, f.into())
    }

    pub fn while_loop(e: impl Into<Arc<Expr>>, b: Test) -> Expr {
        Expr::GuardedLoop(e.into(), b)
    }

    pub fn prob_loop(e: impl Into<Arc<Expr>>, r: Rat) -> Expr {
        Expr::ProbLoop(e.into(), r)
    }

    /// Number of AST nodes, counting each test as a single leaf.
    pub fn ast_size(&self) -> usize {
        match self {
            Expr::Act(_) | Expr::Test(_) | Expr::Return(_) => 1,
            Expr::GuardedChoice(e, _, f) | Expr::Seq(e, f) | Expr::ProbChoice(e, _, f) => {
                1 + e.ast_size() + f.ast_size()
            }
            Expr::GuardedLoop(e, _) | Expr::ProbLoop(e, _) => 1 + e.ast_size(),
        }
    }

    /// Checks that every name is declared with the right sort and every
    /// probability lies in `[0, 1]`.
    pub fn check(&self, alphabet: &Alphabet) -> Result<(), String> {
        let want = |name: &str, sort: Sort| match alphabet.sort_of(name) {
            Some(s) if s == sort => Ok(()),
            Some(s) => Err(format!("`{name}` is declared as {s:?}, used as {sort:?}")),
            None => Err(format!("`{name}` is not declared")),
        };
        let test = |b: &Test| {
            let mut names = Vec::new();
            b.prims(&mut names);
            names.iter().try_for_each(|n| want(n, Sort::Test))
        };
        let prob = |r: &Rat| {
            if r.is_probability() {
                Ok(())
            } else {
                Err(format!("probability {r} is outside [0, 1]"))
            }
        };
        match self {
            Expr::Act(p) => want(p, Sort::Action),
            Expr::Return(v) => want(v, Sort::Output),
            Expr::Test(b) => test(b),
            Expr::GuardedChoice(e, b, f) => {
                test(b)?;
                e.check(alphabet)?;
                f.check(alphabet)
            }
            Expr::Seq(e, f) => {
                e.check(alphabet)?;
                f.check(alphabet)
            }
            Expr::GuardedLoop(e, b) => {
                test(b)?;
                e.check(alphabet)
            }
            Expr::ProbChoice(e, r, f) => {
                prob(r)?;
                e.check(alphabet)?;
                f.check(alphabet)
            }
            Expr::ProbLoop(e, r) => {
                prob(r)?;
                e.check(alphabet)
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_expr(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn abc(tests: &[&str]) -> Alphabet {
        Alphabet::new(tests.iter().copied(), ["p", "q"], ["v"]).unwrap()
    }

    #[test]
    fn alphabet_rejects_overlap_and_reserved() {
        assert!(matches!(Alphabet::new(["t"], ["t"], Vec::<&str>::new()), Err(AlphabetError::DeclaredTwice(_))));
        assert!(matches!(
            Alphabet::new(Vec::<&str>::new(), ["ret"], Vec::<&str>::new()),
            Err(AlphabetError::Reserved(_))
        ));
        assert!(matches!(
            Alphabet::new(["1x"], Vec::<&str>::new(), Vec::<&str>::new()),
            Err(AlphabetError::BadName(_))
        ));
    }

    #[test]
    fn atom_enumeration_order() {
        assert_eq!(abc(&[]).atoms().unwrap().len(), 1);
        let one = abc(&["t"]).atoms().unwrap();
        assert_eq!(one.len(), 2);
        assert_eq!(one[0].get("t"), Some(false));
        assert_eq!(one[1].get("t"), Some(true));
        let two = abc(&["t", "u"]).atoms().unwrap();
        let lits: Vec<_> = two.iter().map(Atom::literal).collect();
        assert_eq!(lits, ["", "u", "t", "t,u"]);
    }

    #[test]
    fn atom_limit_is_enforced() {
        let names: Vec<String> = (0..5).map(|i| format!("t{i}")).collect();
        let a = Alphabet::new(names, vec![], vec![]).unwrap();
        assert!(enumerate_atoms(&a, 4).is_err());
        assert_eq!(enumerate_atoms(&a, 5).unwrap().len(), 32);
    }

    #[test]
    fn entailment_examples() {
        let atoms = abc(&["t"]).atoms().unwrap();
        let t_true = &atoms[1];
        assert!(t_true.entails(&Test::prim("t")));
        assert!(!t_true.entails(&Test::Zero));
        assert!(!t_true.entails(&Test::not(Test::prim("t"))));
    }

    #[test]
    fn bool_equiv_examples() {
        let atoms = abc(&["t", "u"]).atoms().unwrap();
        let (t, u) = (Test::prim("t"), Test::prim("u"));
        assert!(bool_equiv(&atoms, &Test::or(t.clone(), u.clone()), &Test::or(u.clone(), t.clone())));
        assert!(bool_equiv(&atoms, &Test::and(t.clone(), Test::not(t.clone())), &Test::Zero));
        assert!(!bool_equiv(&atoms, &t, &Test::One));
    }

    #[test]
    fn atom_tests_characterise_atoms() {
        let a = abc(&["t", "u"]);
        let atoms = a.atoms().unwrap();
        for x in &atoms {
            let b = x.to_test(&a);
            for y in &atoms {
                assert_eq!(y.entails(&b), x == y);
            }
        }
        assert_eq!(abc(&[]).atoms().unwrap()[0].to_test(&abc(&[])), Test::One);
    }

    #[test]
    fn atom_literals_round_trip() {
        let a = abc(&["t", "u"]);
        for x in a.atoms().unwrap() {
            assert_eq!(Atom::parse_literal(&x.literal(), &a).unwrap(), x);
        }
        assert!(Atom::parse_literal("w", &a).is_err());
        assert_eq!(Atom::parse_literal("{t}", &a).unwrap().literal(), "t");
    }

    #[test]
    fn check_catches_sort_errors() {
        let a = abc(&["t"]);
        assert!(Expr::act("p").check(&a).is_ok());
        assert!(Expr::act("v").check(&a).is_err());
        assert!(Expr::prob(Expr::one(), Rat::new(3, 2), Expr::one()).check(&a).is_err());
    }
}
