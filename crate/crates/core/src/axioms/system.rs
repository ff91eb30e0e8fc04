//! Systems of equations over indeterminates, their solutions, and the
//! system associated with an automaton.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::equivalence::{coarsest_bisimulation, pseudometric};
use crate::prob::{Outcome, Rat};
use crate::semantics::{
    build_automaton_many, convex_sum, guarded_sum_over_atoms, termination, Automaton, AutomatonError,
};
use crate::syntax::{
    expr_at, expr_level, is_identifier, print_expr, print_test, Alphabet, Expr, ParseError, ParseErrorKind, Parser,
    Term, TermMode, Test, Tok, LVL_GUARD, LVL_SEQ, RESERVED,
};

#[derive(Debug, Error)]
pub enum SystemError {
    #[error("{0}")]
    Parse(#[from] ParseError),
    #[error("indeterminate `{0}` has no value")]
    Unbound(String),
    #[error("indeterminate `{0}` is not part of the system")]
    UnknownIndeterminate(String),
    #[error("value for `{name}` is ill-formed: {reason}")]
    BadValue { name: String, reason: String },
    #[error(transparent)]
    Automaton(#[from] AutomatonError),
}

/// A right-hand side: guarded choices of probabilistic choices of closed
/// expressions and prefixed indeterminates `g . x`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SysTerm {
    Closed(Arc<Expr>),
    Prefixed(Arc<Expr>, String),
    Guarded(Box<SysTerm>, Test, Box<SysTerm>),
    Prob(Box<SysTerm>, Rat, Box<SysTerm>),
}

impl SysTerm {
    /// Guarded choice, collapsing closed children. Panics if used under a
    /// probabilistic choice, which the grammar forbids.
    pub fn guarded(a: SysTerm, b: Test, c: SysTerm) -> SysTerm {
        match (a, c) {
            (SysTerm::Closed(x), SysTerm::Closed(y)) => SysTerm::Closed(Arc::new(Expr::GuardedChoice(x, b, y))),
            (a, c) => SysTerm::Guarded(Box::new(a), b, Box::new(c)),
        }
    }

    pub fn prob(a: SysTerm, r: Rat, c: SysTerm) -> SysTerm {
        assert!(a.is_probabilistic() && c.is_probabilistic(), "guarded choice under probabilistic choice");
        match (a, c) {
            (SysTerm::Closed(x), SysTerm::Closed(y)) => SysTerm::Closed(Arc::new(Expr::ProbChoice(x, r, y))),
            (a, c) => SysTerm::Prob(Box::new(a), r, Box::new(c)),
        }
    }

    /// Whether this term is in the probabilistic sort (no guarded choice
    /// over indeterminates).
    fn is_probabilistic(&self) -> bool {
        match self {
            SysTerm::Closed(_) | SysTerm::Prefixed(..) => true,
            SysTerm::Guarded(..) => false,
            SysTerm::Prob(a, _, c) => a.is_probabilistic() && c.is_probabilistic(),
        }
    }

    /// Every `(g, x)` occurring as `g . x`.
    pub fn prefixes(&self) -> Vec<(&Arc<Expr>, &str)> {
        let mut out = Vec::new();
        self.collect_prefixes(&mut out);
        out
    }

    fn collect_prefixes<'a>(&'a self, out: &mut Vec<(&'a Arc<Expr>, &'a str)>) {
        match self {
            SysTerm::Closed(_) => {}
            SysTerm::Prefixed(g, x) => out.push((g, x)),
            SysTerm::Guarded(a, _, c) | SysTerm::Prob(a, _, c) => {
                a.collect_prefixes(out);
                c.collect_prefixes(out);
            }
        }
    }

    fn from_term(t: Term, probabilistic: bool) -> Result<SysTerm, String> {
        match t {
            Term::Closed(e) => Ok(SysTerm::Closed(e)),
            Term::Prefix(g, x) => match *g {
                Term::Closed(g) => Ok(SysTerm::Prefixed(g, x)),
                _ => Err(format!("the coefficient of `{x}` must not mention indeterminates")),
            },
            Term::GuardedChoice(a, b, c) if !probabilistic => {
                Ok(SysTerm::guarded(SysTerm::from_term(*a, false)?, b, SysTerm::from_term(*c, false)?))
            }
            Term::GuardedChoice(..) => Err("guarded choice over indeterminates inside a probabilistic choice".into()),
            Term::ProbChoice(a, r, c) => {
                Ok(SysTerm::prob(SysTerm::from_term(*a, true)?, r, SysTerm::from_term(*c, true)?))
            }
            Term::Hole => Err("holes are not allowed here".into()),
            Term::Seq(..) | Term::GuardedLoop(..) | Term::ProbLoop(..) => {
                Err("indeterminates may only occur as `g . x`".into())
            }
        }
    }

    fn print_at(&self, min: u8, out: &mut String) {
        // Levels: 0 probabilistic, 1 guarded, 2 prefixed or tighter.
        let level = match self {
            SysTerm::Closed(e) => expr_level(e).min(LVL_SEQ),
            SysTerm::Prefixed(..) => LVL_SEQ,
            SysTerm::Guarded(..) => LVL_GUARD,
            SysTerm::Prob(..) => 0,
        };
        let paren = level < min;
        if paren {
            out.push('(');
        }
        match self {
            SysTerm::Closed(e) => expr_at(e, 0, out),
            SysTerm::Prefixed(g, x) => {
                expr_at(g, LVL_SEQ, out);
                out.push_str(" . ");
                out.push_str(x);
            }
            SysTerm::Guarded(a, b, c) => {
                a.print_at(LVL_SEQ, out);
                out.push_str(&format!(" +[{}] ", print_test(b)));
                c.print_at(LVL_GUARD, out);
            }
            SysTerm::Prob(a, r, c) => {
                a.print_at(LVL_GUARD, out);
                out.push_str(&format!(" +{{{r}}} "));
                c.print_at(0, out);
            }
        }
        if paren {
            out.push(')');
        }
    }
}

impl fmt::Display for SysTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        self.print_at(0, &mut out);
        f.write_str(&out)
    }
}

/// A finite system `x_i := τ(x_i)` over an alphabet, in declaration order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SalomaaSystem {
    pub alphabet: Alphabet,
    pub equations: Vec<(String, SysTerm)>,
}

impl SalomaaSystem {
    pub fn indeterminates(&self) -> impl Iterator<Item = &str> {
        self.equations.iter().map(|(x, _)| x.as_str())
    }

    pub fn rhs(&self, x: &str) -> Option<&SysTerm> {
        self.equations.iter().find(|(y, _)| y == x).map(|(_, t)| t)
    }

    pub fn len(&self) -> usize {
        self.equations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.equations.is_empty()
    }

    /// Parses `x := rhs, ...` up to (not including) a closing `}` or the end
    /// of input.
    pub(crate) fn parse_entries(p: &mut Parser) -> Result<SalomaaSystem, ParseError> {
        let mut equations: Vec<(String, SysTerm)> = Vec::new();
        while !matches!(p.peek(), Tok::RBrace | Tok::Eof) {
            let x = indeterminate(p)?;
            if equations.iter().any(|(y, _)| *y == x) {
                return Err(p.syntax(format!("indeterminate `{x}` is defined twice")));
            }
            p.expect(Tok::Assign, "`:=`")?;
            let (line, col) = p.position();
            let t = p.term(TermMode { holes: false, prefixes: true })?;
            let t =
                SysTerm::from_term(t, false).map_err(|m| ParseError { line, col, kind: ParseErrorKind::Syntax(m) })?;
            equations.push((x, t));
            if !p.eat(&Tok::Comma) {
                break;
            }
        }
        let defined: BTreeSet<&str> = equations.iter().map(|(x, _)| x.as_str()).collect();
        for (_, t) in &equations {
            for (_, x) in t.prefixes() {
                if !defined.contains(x) {
                    return Err(p.syntax(format!("indeterminate `{x}` has no equation")));
                }
            }
        }
        Ok(SalomaaSystem { alphabet: p.alphabet().clone(), equations })
    }
}

impl fmt::Display for SalomaaSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (x, t)) in self.equations.iter().enumerate() {
            let sep = if i + 1 < self.equations.len() { "," } else { "" };
            writeln!(f, "  {x} := {t}{sep}")?;
        }
        Ok(())
    }
}

pub(crate) fn indeterminate(p: &mut Parser) -> Result<String, ParseError> {
    let x = p.ident()?;
    if RESERVED.contains(&x.as_str()) || !is_identifier(&x) {
        return Err(p.syntax(format!("`{x}` cannot name an indeterminate")));
    }
    Ok(x)
}

/// Parses a declarations header followed by either `system NAME { ... }`
/// or bare equations.
pub fn parse_system(text: &str) -> Result<SalomaaSystem, SystemError> {
    let mut p = Parser::new(text)?;
    p.header()?;
    let sys = if p.eat_keyword("system") {
        p.ident()?;
        p.expect(Tok::LBrace, "`{`")?;
        let sys = SalomaaSystem::parse_entries(&mut p)?;
        p.expect(Tok::RBrace, "`}`")?;
        sys
    } else {
        SalomaaSystem::parse_entries(&mut p)?
    };
    p.expect_eof()?;
    Ok(sys)
}

/// Parses `x := expr, ...` over the system's alphabet.
pub fn parse_solution_map(text: &str, sys: &SalomaaSystem) -> Result<BTreeMap<String, Arc<Expr>>, SystemError> {
    let mut p = Parser::with_alphabet(text, sys.alphabet.clone())?;
    let mut h = BTreeMap::new();
    while !p.at_eof() {
        let x = indeterminate(&mut p)?;
        if sys.rhs(&x).is_none() {
            return Err(SystemError::UnknownIndeterminate(x));
        }
        p.expect(Tok::Assign, "`:=`")?;
        h.insert(x, p.expr()?);
        if !p.eat(&Tok::Comma) {
            break;
        }
    }
    p.expect_eof()?;
    Ok(h)
}

/// Whether every coefficient `g` of a prefixed indeterminate has `E(g) = 0`
/// at every atom.
pub fn is_salomaa(sys: &SalomaaSystem) -> bool {
    let Ok(atoms) = sys.alphabet.atoms() else { return false };
    sys.equations.iter().flat_map(|(_, t)| t.prefixes()).all(|(g, _)| atoms.iter().all(|a| termination(g, a).is_zero()))
}

/// `h#`: replaces each `g . x` by `g ; h(x)`.
pub fn substitute(h: &BTreeMap<String, Arc<Expr>>, rhs: &SysTerm) -> Result<Arc<Expr>, SystemError> {
    Ok(match rhs {
        SysTerm::Closed(f) => f.clone(),
        SysTerm::Prefixed(g, x) => {
            let hx = h.get(x).ok_or_else(|| SystemError::Unbound(x.clone()))?;
            Arc::new(Expr::Seq(g.clone(), hx.clone()))
        }
        SysTerm::Guarded(a, b, c) => Arc::new(Expr::GuardedChoice(substitute(h, a)?, b.clone(), substitute(h, c)?)),
        SysTerm::Prob(a, r, c) => Arc::new(Expr::ProbChoice(substitute(h, a)?, r.clone(), substitute(h, c)?)),
    })
}

fn check_values(sys: &SalomaaSystem, h: &BTreeMap<String, Arc<Expr>>) -> Result<(), SystemError> {
    for x in sys.indeterminates() {
        let e = h.get(x).ok_or_else(|| SystemError::Unbound(x.to_string()))?;
        e.check(&sys.alphabet).map_err(|reason| SystemError::BadValue { name: x.to_string(), reason })?;
    }
    Ok(())
}

/// Whether `h(x)` is bisimilar to `h#(τ(x))` for every indeterminate.
pub fn check_solution(sys: &SalomaaSystem, h: &BTreeMap<String, Arc<Expr>>) -> Result<bool, SystemError> {
    check_values(sys, h)?;
    let mut roots = Vec::new();
    for (x, t) in &sys.equations {
        roots.push((*h[x]).clone());
        roots.push((*substitute(h, t)?).clone());
    }
    let (aut, ids) = build_automaton_many(&sys.alphabet, &roots)?;
    let part = coarsest_bisimulation(&aut);
    Ok(ids.chunks(2).all(|pair| part.same_block(pair[0], pair[1])))
}

/// `τ̄`: substitutes the vector `es` (in declaration order) into every
/// right-hand side.
pub fn tau_bar(sys: &SalomaaSystem, es: &[Arc<Expr>]) -> Result<Vec<Arc<Expr>>, SystemError> {
    assert_eq!(es.len(), sys.len(), "one expression per indeterminate");
    let h: BTreeMap<String, Arc<Expr>> = sys.indeterminates().map(str::to_string).zip(es.iter().cloned()).collect();
    sys.equations.iter().map(|(_, t)| substitute(&h, t)).collect()
}

/// Componentwise maximum of the pseudometric between two vectors of
/// expressions.
pub fn vector_distance(alphabet: &Alphabet, es: &[Arc<Expr>], fs: &[Arc<Expr>]) -> Result<Rat, SystemError> {
    assert_eq!(es.len(), fs.len());
    let roots: Vec<Expr> = es.iter().chain(fs).map(|e| (**e).clone()).collect();
    let (aut, ids) = build_automaton_many(alphabet, &roots)?;
    let n = es.len();
    let mut best = Rat::zero();
    for i in 0..n {
        let d = pseudometric(&aut, ids[i], ids[n + i])?;
        if d > best {
            best = d;
        }
    }
    Ok(best)
}

/// The system associated with `aut`: indeterminate `x{i+1}` for state `i`,
/// with right-hand side the guarded sum over atoms of the convex sum over
/// the support of each transition.
pub fn system_of_automaton(aut: &Automaton) -> SalomaaSystem {
    let name = |s: usize| format!("x{}", s + 1);
    let closed = |e: Expr| SysTerm::Closed(Arc::new(e));
    let equations = (0..aut.len())
        .map(|s| {
            let bodies = aut
                .row(s)
                .iter()
                .map(|d| {
                    let items = d
                        .iter()
                        .map(|(o, w)| {
                            let t = match o {
                                Outcome::Reject => closed(Expr::zero()),
                                Outcome::Accept => closed(Expr::one()),
                                Outcome::Return(v) => closed(Expr::Return(v.clone())),
                                Outcome::Step(p, t) => SysTerm::Prefixed(Arc::new(Expr::act(p.clone())), name(*t)),
                            };
                            (t, w.clone())
                        })
                        .collect();
                    convex_sum(items, SysTerm::prob)
                })
                .collect();
            let rhs =
                guarded_sum_over_atoms(aut.alphabet(), aut.atoms(), bodies, closed(Expr::zero()), SysTerm::guarded);
            (name(s), rhs)
        })
        .collect();
    SalomaaSystem { alphabet: aut.alphabet().clone(), equations }
}

/// Renders a solution map as `x := expr` lines.
pub fn print_solution_map(h: &BTreeMap<String, Arc<Expr>>) -> String {
    h.iter().map(|(x, e)| format!("{x} := {}", print_expr(e))).collect::<Vec<_>>().join(",\n")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::Dist;
    use crate::semantics::{build_automaton, StateDescr};
    use crate::syntax::parse_expr;

    const EX51: &str = "tests t; actions p, q; outputs v;
        system S {
          x1 := (q . x2 +{1/2} ret v) +[~t] ((p . x1 +{1/2} q . x2) +[t] 0),
          x2 := 1 +[~t] (1 +[t] 0)
        }";

    fn map(sys: &SalomaaSystem, entries: &[(&str, &str)]) -> BTreeMap<String, Arc<Expr>> {
        entries.iter().map(|(x, e)| (x.to_string(), Arc::new(parse_expr(e, &sys.alphabet).unwrap()))).collect()
    }

    #[test]
    fn two_state_system_and_solution() {
        let sys = parse_system(EX51).unwrap();
        assert_eq!(sys.len(), 2);
        assert!(is_salomaa(&sys));
        let h = map(&sys, &[("x1", "(p +[t] ret v) *{1/2} ; q"), ("x2", "1")]);
        assert!(check_solution(&sys, &h).unwrap());
        let wrong = map(&sys, &[("x1", "q"), ("x2", "1")]);
        assert!(!check_solution(&sys, &wrong).unwrap());
    }

    #[test]
    fn salomaa_condition() {
        let sys = parse_system("actions p; x := 1 . x").unwrap();
        assert!(!is_salomaa(&sys));
        let sys = parse_system("actions p; x := p . x").unwrap();
        assert!(is_salomaa(&sys));
    }

    #[test]
    fn substitution() {
        let sys = parse_system("actions p; x := p . x +{1/2} 1").unwrap();
        let h = map(&sys, &[("x", "1")]);
        let out = substitute(&h, sys.rhs("x").unwrap()).unwrap();
        assert_eq!(*out, parse_expr("p ; 1 +{1/2} 1", &sys.alphabet).unwrap());
        assert!(matches!(substitute(&BTreeMap::new(), sys.rhs("x").unwrap()), Err(SystemError::Unbound(_))));
        let closed = SysTerm::Closed(Arc::new(Expr::act("p")));
        assert_eq!(*substitute(&BTreeMap::new(), &closed).unwrap(), Expr::act("p"));
    }

    #[test]
    fn empty_system_is_solved_by_anything() {
        let sys = parse_system("actions p;").unwrap();
        assert!(sys.is_empty());
        assert!(check_solution(&sys, &BTreeMap::new()).unwrap());
    }

    #[test]
    fn print_round_trip() {
        let sys = parse_system(EX51).unwrap();
        let text = format!("tests t; actions p, q; outputs v; {sys}");
        assert_eq!(parse_system(&text).unwrap(), sys);
    }

    #[test]
    fn grammar_restrictions() {
        assert!(parse_system("actions p; x := p ; (p . x)").is_err());
        assert!(parse_system("tests t; actions p; x := (p . x +[t] 1) +{1/2} 1").is_err());
        assert!(parse_system("actions p; x := p . y").is_err());
    }

    #[test]
    fn system_of_two_state_automaton() {
        // Two states; under ~t state 1 moves to 2 by q or returns v, under t
        // it loops on p or moves to 2 by q. State 2 accepts under ~t and t.
        let a = Alphabet::new(["t"], ["p", "q"], ["v"]).unwrap();
        let half = Rat::half();
        let step = |p: &str, s| Outcome::Step(p.to_string(), s);
        let trans = vec![
            vec![
                Dist::from_entries([(step("q", 1), half.clone()), (Outcome::Return("v".into()), half.clone())])
                    .unwrap(),
                Dist::from_entries([(step("p", 0), half.clone()), (step("q", 1), half.clone())]).unwrap(),
            ],
            vec![Dist::dirac(Outcome::Accept), Dist::dirac(Outcome::Accept)],
        ];
        let states = vec![StateDescr::Name("x1".into()), StateDescr::Name("x2".into())];
        let aut = Automaton::new(a, states, trans).unwrap();
        let sys = system_of_automaton(&aut);
        assert!(is_salomaa(&sys));
        // Same as the hand-written system up to the order of convex summands.
        let expected = parse_system(
            "tests t; actions p, q; outputs v;
             x1 := (ret v +{1/2} q . x2) +[~t] ((p . x1 +{1/2} q . x2) +[t] 0),
             x2 := 1 +[~t] (1 +[t] 0)",
        )
        .unwrap();
        assert_eq!(sys, expected);
    }

    #[test]
    fn automaton_systems_are_salomaa_and_solved_by_states() {
        let (a, e) = crate::syntax::parse_program("tests t; actions p; outputs v; (p +[t] ret v) *{1/3} ; p").unwrap();
        let (aut, _) = build_automaton(&a, &e).unwrap();
        let sys = system_of_automaton(&aut);
        assert!(is_salomaa(&sys));
        let h: BTreeMap<String, Arc<Expr>> =
            (0..aut.len()).map(|s| (format!("x{}", s + 1), Arc::new(aut_expr(&aut, s)))).collect();
        assert!(check_solution(&sys, &h).unwrap());
    }

    fn aut_expr(aut: &Automaton, s: usize) -> Expr {
        match aut.descr(s) {
            StateDescr::Expr(e) => (**e).clone(),
            StateDescr::Name(_) => unreachable!(),
        }
    }

    #[test]
    fn lipschitz_on_a_small_system() {
        let sys = parse_system("actions p, q; x := p . x +{1/2} q . x").unwrap();
        let es = vec![Arc::new(parse_expr("p", &sys.alphabet).unwrap())];
        let fs = vec![Arc::new(parse_expr("q", &sys.alphabet).unwrap())];
        let d0 = vector_distance(&sys.alphabet, &es, &fs).unwrap();
        let d1 = vector_distance(&sys.alphabet, &tau_bar(&sys, &es).unwrap(), &tau_bar(&sys, &fs).unwrap()).unwrap();
        assert_eq!(d0, Rat::one());
        assert!(d1 <= d0 * Rat::half());
    }
}
