//! Proof scripts: parsing and line-by-line verification.
//!
//! ```text
//! outputs v;
//! def E := ret v ; 1
//! system S { x := ... }
//! 1: 1 ; ret v == ret v by S1
//! 2: ret v == 1 ; ret v by sym 1
//! 3: E == ret v by S2 {e := ret v}
//! ```

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use super::system::{is_salomaa, substitute, SalomaaSystem};
use super::{infer_instance, metavariable_sort, AxiomError, AxiomId, Binding, Bindings, MetaSort};
use crate::equivalence::coarsest_bisimulation;
use crate::semantics::build_automaton_many;
use crate::syntax::{bool_equiv, print_expr, Alphabet, Atom, Expr, ParseError, Parser, Sort, Term, TermMode, Tok};

#[derive(Debug, Error)]
pub enum ProofError {
    #[error("{0}")]
    Parse(#[from] ParseError),
}

/// How a line is justified.
#[derive(Debug, Clone)]
pub enum Justification {
    Axiom {
        id: AxiomId,
        premises: Vec<usize>,
        bindings: Bindings,
    },
    Refl,
    Sym(usize),
    Trans(usize, usize),
    /// A context with exactly one hole, and the line it is applied to.
    Cong(Term, usize),
    Ba,
    /// A system name and, per indeterminate in order, the lines showing the
    /// left and right maps are solutions.
    Ua {
        system: String,
        refs: Vec<usize>,
    },
}

#[derive(Debug, Clone)]
pub struct Step {
    pub number: usize,
    /// Source line of the step, for diagnostics.
    pub source_line: usize,
    pub lhs: Arc<Expr>,
    pub rhs: Arc<Expr>,
    pub just: Justification,
}

#[derive(Debug, Clone)]
pub struct ProofScript {
    pub alphabet: Alphabet,
    pub systems: BTreeMap<String, SalomaaSystem>,
    pub steps: Vec<Step>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StepError {
    #[error("line {0} is not an earlier line")]
    BadReference(usize),
    #[error("expected `{expected}`, found `{found}`")]
    Mismatch { expected: String, found: String },
    #[error(transparent)]
    Axiom(#[from] AxiomError),
    #[error("{axiom} takes {expected} premise line(s), {found} given")]
    PremiseCount { axiom: AxiomId, expected: usize, found: usize },
    #[error("premise line {line} does not state `{expected}`")]
    PremiseMismatch { line: usize, expected: String },
    #[error("sides differ other than in Boolean-equivalent tests")]
    NotBooleanEquivalent,
    #[error("`ua` is a rule of its own; write `ua SYSTEM [lines]`")]
    UaAsAxiom,
    #[error("no system named `{0}`")]
    UnknownSystem(String),
    #[error("system `{0}` is not Salomaa")]
    NotSalomaa(String),
    #[error("system has {indeterminates} indeterminates, so `ua` needs {expected} line references, found {found}")]
    SolutionCount { indeterminates: usize, expected: usize, found: usize },
    #[error("conclusion is not `f(x) == g(x)` for any indeterminate `x`")]
    UaConclusion,
    #[error("sides are not bisimilar")]
    NotBisimilar,
    #[error("{0}")]
    Automaton(String),
}

#[derive(Debug, Clone, Serialize)]
pub struct LineReport {
    pub number: usize,
    pub source_line: usize,
    pub verified: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Outcome of checking a script. Checking stops at the first failure.
#[derive(Debug, Clone, Serialize)]
pub struct ProofReport {
    pub lines: Vec<LineReport>,
    pub verified: bool,
    /// The first failing step number and the reason.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<(usize, String)>,
}

pub fn parse_proof(text: &str) -> Result<ProofScript, ProofError> {
    let mut p = Parser::new(text)?;
    let alphabet = p.header()?;
    let mut systems = BTreeMap::new();
    let mut steps: Vec<Step> = Vec::new();
    while !p.at_eof() {
        if p.eat_keyword("def") {
            let name = p.ident()?;
            p.expect(Tok::Assign, "`:=`")?;
            let e = p.expr()?;
            p.define(name, e)?;
        } else if p.eat_keyword("system") {
            let name = p.ident()?;
            if systems.contains_key(&name) {
                return Err(p.syntax(format!("system `{name}` is declared twice")).into());
            }
            p.expect(Tok::LBrace, "`{`")?;
            let sys = SalomaaSystem::parse_entries(&mut p)?;
            p.expect(Tok::RBrace, "`}`")?;
            systems.insert(name, sys);
        } else {
            let source_line = p.position().0;
            let number = p.nat()?;
            if steps.last().is_some_and(|s| s.number >= number) {
                return Err(p.syntax("step numbers must increase").into());
            }
            p.expect(Tok::Colon, "`:` after the step number")?;
            let lhs = p.expr()?;
            p.expect(Tok::EqEq, "`==`")?;
            let rhs = p.expr()?;
            if !p.eat_keyword("by") {
                return Err(p.syntax("expected `by` and a justification").into());
            }
            let just = justification(&mut p)?;
            steps.push(Step { number, source_line, lhs, rhs, just });
        }
    }
    Ok(ProofScript { alphabet, systems, steps })
}

fn justification(p: &mut Parser) -> Result<Justification, ParseError> {
    let word = p.ident()?;
    Ok(match word.as_str() {
        "refl" => Justification::Refl,
        "sym" => Justification::Sym(p.nat()?),
        "trans" => {
            let n = p.nat()?;
            Justification::Trans(n, p.nat()?)
        }
        "cong" => {
            let ctx = p.term(TermMode { holes: true, prefixes: false })?;
            if ctx.hole_count() != 1 {
                return Err(p.syntax("a congruence context needs exactly one `_`"));
            }
            Justification::Cong(ctx, p.nat()?)
        }
        "ba" => Justification::Ba,
        "ua" => {
            let system = p.ident()?;
            Justification::Ua { system, refs: line_list(p)? }
        }
        _ => {
            let id: AxiomId = word.parse().map_err(|m: String| p.syntax(m))?;
            let premises = if matches!(p.peek(), Tok::LBracket) { line_list(p)? } else { Vec::new() };
            let bindings = if p.eat(&Tok::LBrace) { binding_block(p)? } else { Bindings::new() };
            Justification::Axiom { id, premises, bindings }
        }
    })
}

/// `[n m ...]`, commas optional.
fn line_list(p: &mut Parser) -> Result<Vec<usize>, ParseError> {
    p.expect(Tok::LBracket, "`[`")?;
    let mut out = Vec::new();
    while !p.eat(&Tok::RBracket) {
        out.push(p.nat()?);
        p.eat(&Tok::Comma);
    }
    Ok(out)
}

/// `name := value, ...}` after the opening brace.
fn binding_block(p: &mut Parser) -> Result<Bindings, ParseError> {
    let mut b = Bindings::new();
    while !p.eat(&Tok::RBrace) {
        let name = p.ident()?;
        let sort = metavariable_sort(&name).ok_or_else(|| p.syntax(format!("`{name}` is not a metavariable")))?;
        p.expect(Tok::Assign, "`:=`")?;
        let value = match sort {
            MetaSort::Expr => Binding::Expr(p.expr()?),
            MetaSort::Test => Binding::Test(p.test()?),
            MetaSort::Prob => Binding::Prob(p.rat()?),
            MetaSort::Output => {
                let v = p.ident()?;
                if p.alphabet().sort_of(&v) != Some(Sort::Output) {
                    return Err(p.syntax(format!("`{v}` is not a declared output")));
                }
                Binding::Output(v)
            }
        };
        b.insert(name, value);
        if !p.eat(&Tok::Comma) {
            p.expect(Tok::RBrace, "`,` or `}`")?;
            break;
        }
    }
    Ok(b)
}

fn mismatch(expected: &Expr, found: &Expr) -> StepError {
    StepError::Mismatch { expected: print_expr(expected), found: print_expr(found) }
}

fn same(expected: &(Arc<Expr>, Arc<Expr>), found: (&Arc<Expr>, &Arc<Expr>)) -> Result<(), StepError> {
    if expected.0 != *found.0 {
        return Err(mismatch(&expected.0, found.0));
    }
    if expected.1 != *found.1 {
        return Err(mismatch(&expected.1, found.1));
    }
    Ok(())
}

/// Structural equality in which tests are compared up to Boolean
/// equivalence.
fn ba_equal(atoms: &[Atom], e: &Expr, f: &Expr) -> bool {
    match (e, f) {
        (Expr::Test(b), Expr::Test(c)) => bool_equiv(atoms, b, c),
        (Expr::Act(p), Expr::Act(q)) => p == q,
        (Expr::Return(v), Expr::Return(w)) => v == w,
        (Expr::GuardedChoice(e1, b, e2), Expr::GuardedChoice(f1, c, f2)) => {
            bool_equiv(atoms, b, c) && ba_equal(atoms, e1, f1) && ba_equal(atoms, e2, f2)
        }
        (Expr::Seq(e1, e2), Expr::Seq(f1, f2)) => ba_equal(atoms, e1, f1) && ba_equal(atoms, e2, f2),
        (Expr::ProbChoice(e1, r, e2), Expr::ProbChoice(f1, s, f2)) => {
            r == s && ba_equal(atoms, e1, f1) && ba_equal(atoms, e2, f2)
        }
        (Expr::GuardedLoop(e1, b), Expr::GuardedLoop(f1, c)) => bool_equiv(atoms, b, c) && ba_equal(atoms, e1, f1),
        (Expr::ProbLoop(e1, r), Expr::ProbLoop(f1, s)) => r == s && ba_equal(atoms, e1, f1),
        _ => false,
    }
}

struct Checker<'a> {
    script: &'a ProofScript,
    atoms: Vec<Atom>,
    proved: BTreeMap<usize, (Arc<Expr>, Arc<Expr>)>,
}

impl Checker<'_> {
    fn line(&self, n: usize) -> Result<&(Arc<Expr>, Arc<Expr>), StepError> {
        self.proved.get(&n).ok_or(StepError::BadReference(n))
    }

    fn check(&self, step: &Step) -> Result<(), StepError> {
        let found = (&step.lhs, &step.rhs);
        match &step.just {
            Justification::Refl => same(&(step.lhs.clone(), step.lhs.clone()), found),
            Justification::Sym(n) => {
                let (a, b) = self.line(*n)?;
                same(&(b.clone(), a.clone()), found)
            }
            Justification::Trans(n, m) => {
                let (a, b) = self.line(*n)?;
                let (b2, c) = self.line(*m)?;
                if b != b2 {
                    return Err(mismatch(b, b2));
                }
                same(&(a.clone(), c.clone()), found)
            }
            Justification::Cong(ctx, n) => {
                let (a, b) = self.line(*n)?;
                same(&(ctx.fill(a), ctx.fill(b)), found)
            }
            Justification::Ba => {
                if ba_equal(&self.atoms, &step.lhs, &step.rhs) {
                    Ok(())
                } else {
                    Err(StepError::NotBooleanEquivalent)
                }
            }
            Justification::Axiom { id: AxiomId::BA, premises, .. } if premises.is_empty() => {
                self.check(&Step { just: Justification::Ba, ..step.clone() })
            }
            Justification::Axiom { id: AxiomId::UA, .. } => Err(StepError::UaAsAxiom),
            Justification::Axiom { id, premises, bindings } => {
                let expected = usize::from(id.has_premise());
                if premises.len() != expected {
                    return Err(StepError::PremiseCount { axiom: *id, expected, found: premises.len() });
                }
                let premise = premises.first().map(|n| self.line(*n).map(|(l, r)| (l, r))).transpose()?;
                let inst = infer_instance(*id, bindings, premise, &step.lhs, &step.rhs)?;
                if let (Some((want_l, want_r)), Some((l, r))) = (&inst.premise, premise) {
                    if want_l != l || want_r != r {
                        return Err(StepError::PremiseMismatch {
                            line: premises[0],
                            expected: format!("{} == {}", print_expr(want_l), print_expr(want_r)),
                        });
                    }
                }
                same(&(inst.lhs, inst.rhs), found)
            }
            Justification::Ua { system, refs } => self.check_ua(system, refs, found),
        }
    }

    fn check_ua(&self, name: &str, refs: &[usize], found: (&Arc<Expr>, &Arc<Expr>)) -> Result<(), StepError> {
        let sys = self.script.systems.get(name).ok_or_else(|| StepError::UnknownSystem(name.to_string()))?;
        if !is_salomaa(sys) {
            return Err(StepError::NotSalomaa(name.to_string()));
        }
        let n = sys.len();
        if refs.len() != 2 * n {
            return Err(StepError::SolutionCount { indeterminates: n, expected: 2 * n, found: refs.len() });
        }
        let mut left = BTreeMap::new();
        let mut right = BTreeMap::new();
        for (i, x) in sys.indeterminates().enumerate() {
            left.insert(x.to_string(), self.line(refs[2 * i])?.0.clone());
            right.insert(x.to_string(), self.line(refs[2 * i + 1])?.0.clone());
        }
        for (i, (_, tau)) in sys.equations.iter().enumerate() {
            for (k, h) in [&left, &right].into_iter().enumerate() {
                let claimed = &self.line(refs[2 * i + k])?.1;
                let want = substitute(h, tau).map_err(|e| StepError::Automaton(e.to_string()))?;
                if *claimed != want {
                    return Err(mismatch(&want, claimed));
                }
            }
        }
        let hit = sys.indeterminates().any(|x| left[x] == *found.0 && right[x] == *found.1);
        if hit {
            Ok(())
        } else {
            Err(StepError::UaConclusion)
        }
    }

    fn bisimilar(&self, l: &Expr, r: &Expr) -> Result<bool, StepError> {
        let (aut, ids) = build_automaton_many(&self.script.alphabet, &[l.clone(), r.clone()])
            .map_err(|e| StepError::Automaton(e.to_string()))?;
        Ok(coarsest_bisimulation(&aut).same_block(ids[0], ids[1]))
    }
}

/// Verifies every step in order, stopping at the first failure. With
/// `cross_check`, each verified equation must also relate bisimilar sides.
pub fn check_proof(script: &ProofScript, cross_check: bool) -> ProofReport {
    let mut lines = Vec::new();
    let atoms = match script.alphabet.atoms() {
        Ok(a) => a,
        Err(e) => {
            return ProofReport { lines, verified: false, failure: Some((0, e.to_string())) };
        }
    };
    let mut checker = Checker { script, atoms, proved: BTreeMap::new() };
    for step in &script.steps {
        let mut result = checker.check(step);
        if result.is_ok() && cross_check {
            result = match checker.bisimilar(&step.lhs, &step.rhs) {
                Ok(true) => Ok(()),
                Ok(false) => Err(StepError::NotBisimilar),
                Err(e) => Err(e),
            };
        }
        let error = result.err().map(|e| e.to_string());
        lines.push(LineReport {
            number: step.number,
            source_line: step.source_line,
            verified: error.is_none(),
            error: error.clone(),
        });
        if let Some(msg) = error {
            return ProofReport { lines, verified: false, failure: Some((step.number, msg)) };
        }
        checker.proved.insert(step.number, (step.lhs.clone(), step.rhs.clone()));
    }
    ProofReport { lines, verified: true, failure: None }
}

/// Parses and checks a script.
pub fn check_proof_text(text: &str, cross_check: bool) -> Result<ProofReport, ProofError> {
    Ok(check_proof(&parse_proof(text)?, cross_check))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn verify(text: &str) -> ProofReport {
        check_proof_text(text, true).unwrap()
    }

    #[test]
    fn reflexivity() {
        assert!(verify("actions p; 1: p ; p == p ; p by refl").verified);
    }

    #[test]
    fn non_instance_is_rejected() {
        let r = verify("actions p, q; 1: p == q by S1");
        assert!(!r.verified);
        assert_eq!(r.failure.unwrap().0, 1);
    }

    #[test]
    fn chain_with_context() {
        let r = verify(
            "actions p, q;
             1: 1 ; p == p by S1
             2: p == 1 ; p by sym 1
             3: p ; 1 == p by S2
             4: p ; 1 == 1 ; p by trans 3 2
             5: (1 ; p) +{1/2} q == p +{1/2} q by cong _ +{1/2} q 1",
        );
        assert!(r.verified, "{r:?}");
    }

    #[test]
    fn bad_reference() {
        let r = verify("actions p; 1: p == p by sym 2");
        assert!(r.failure.unwrap().1.contains("not an earlier line"));
    }

    #[test]
    fn boolean_step() {
        let r = verify("tests t; actions p; 1: p +[t & t] 1 == p +[~~t] 1 by ba");
        assert!(r.verified);
        let r = verify("tests t; actions p; 1: p +[t] 1 == p +[~t] 1 by ba");
        assert!(!r.verified);
    }

    #[test]
    fn fixpoint_rule_with_premise() {
        // g := p ; g' where g' unrolls once: premise line is an L2 instance.
        let r = verify(
            "actions p;
             def G := p *{1/2}
             1: G == p ; G +{1/2} 1 by L2
             2: G == p *{1/2} ; 1 by F2 [1]",
        );
        assert!(r.verified, "{r:?}");
        let r = verify(
            "actions p;
             1: 1 *{1/2} == 1 ; 1 *{1/2} +{1/2} 1 by L2
             2: 1 *{1/2} == 1 *{1/2} ; 1 by F2 [1]",
        );
        assert!(r.failure.unwrap().1.contains("E(e) = 0"));
    }

    #[test]
    fn explicit_bindings() {
        let r = verify("actions p; outputs v; 1: ret v ; p == ret v by S7 {v := v, e := p}");
        assert!(r.verified, "{r:?}");
        let r = verify("actions p; outputs v; 1: ret v ; p == ret v by S7 {e := 1}");
        assert!(!r.verified);
    }

    #[test]
    fn uniqueness_step() {
        // `x := p . x +{1/2} 1` is solved by the loop and by the loop
        // followed by `1`.
        let r = verify(
            "actions p;
             def L := p *{1/2}
             system S { x := p . x +{1/2} 1 }
             1: L == p ; L +{1/2} 1 by L2
             2: L ; 1 == L by S2
             3: L ; 1 == p ; L +{1/2} 1 by trans 2 1
             4: L == L ; 1 by sym 2
             5: p ; L +{1/2} 1 == p ; (L ; 1) +{1/2} 1 by cong p ; _ +{1/2} 1 4
             6: L ; 1 == p ; (L ; 1) +{1/2} 1 by trans 3 5
             7: L == L ; 1 by ua S [1 6]",
        );
        assert!(r.verified, "{r:?}");
        let r = verify(
            "actions p;
             def L := p *{1/2}
             system S { x := p . x +{1/2} 1 }
             1: L == p ; L +{1/2} 1 by L2
             2: L ; 1 == L by S2
             3: L ; 1 == L by ua S [1 2]",
        );
        assert_eq!(r.failure.unwrap().0, 3);
    }

    #[test]
    fn uniqueness_with_two_solutions() {
        let r = verify(
            "actions p;
             def L := p *{1/2}
             system S { x := p . x +{1/2} 1 }
             1: L == p ; L +{1/2} 1 by L2
             2: L == L by refl
             3: L == L by ua S [1 1]",
        );
        assert!(r.verified, "{r:?}");
        let r = verify(
            "actions p;
             system S { x := 1 . x }
             1: p == p by refl
             2: p == p by ua S [1 1]",
        );
        assert!(r.failure.unwrap().1.contains("not Salomaa"));
    }
}
