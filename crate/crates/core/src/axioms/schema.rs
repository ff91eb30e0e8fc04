//! Axiom shapes as patterns over metavariables, with matching and
//! instantiation.

use std::sync::Arc;

use super::{AxiomError, AxiomId, Binding, Bindings};
use crate::prob::Rat;
use crate::syntax::{Expr, Test};

type Derive = fn(&Bindings) -> Result<Rat, AxiomError>;

#[derive(Clone)]
pub(crate) enum TPat {
    Var(&'static str),
    One,
    Zero,
    Not(Box<TPat>),
    And(Box<TPat>, Box<TPat>),
    Or(Box<TPat>, Box<TPat>),
}

#[derive(Clone)]
pub(crate) enum PPat {
    Var(&'static str),
    One,
    /// Computed from other bindings; skipped when matching.
    Derived(Derive),
}

#[derive(Clone)]
pub(crate) enum Pat {
    Var(&'static str),
    Out(&'static str),
    Test(TPat),
    Seq(Box<Pat>, Box<Pat>),
    Guarded(Box<Pat>, TPat, Box<Pat>),
    Prob(Box<Pat>, PPat, Box<Pat>),
    While(Box<Pat>, TPat),
    Loop(Box<Pat>, PPat),
}

#[derive(Clone, Copy)]
pub(crate) enum Cond {
    /// The named probability is strictly positive.
    Positive(&'static str),
    /// The named expression has `E = 0` at every atom.
    NeverTerminates(&'static str),
}

pub(crate) struct Schema {
    pub premise: Option<(Pat, Pat)>,
    pub lhs: Pat,
    pub rhs: Pat,
    pub conditions: Vec<Cond>,
}

fn v(n: &'static str) -> Pat {
    Pat::Var(n)
}
fn tv(n: &'static str) -> TPat {
    TPat::Var(n)
}
fn t(b: TPat) -> Pat {
    Pat::Test(b)
}
fn one() -> Pat {
    Pat::Test(TPat::One)
}
fn zero() -> Pat {
    Pat::Test(TPat::Zero)
}
fn seq(a: Pat, b: Pat) -> Pat {
    Pat::Seq(Box::new(a), Box::new(b))
}
fn gd(a: Pat, b: TPat, c: Pat) -> Pat {
    Pat::Guarded(Box::new(a), b, Box::new(c))
}
fn pr(a: Pat, r: PPat, c: Pat) -> Pat {
    Pat::Prob(Box::new(a), r, Box::new(c))
}
fn pv(n: &'static str) -> PPat {
    PPat::Var(n)
}
fn star(a: Pat, b: TPat) -> Pat {
    Pat::While(Box::new(a), b)
}
fn ploop(a: Pat, r: PPat) -> Pat {
    Pat::Loop(Box::new(a), r)
}
fn and(a: TPat, b: TPat) -> TPat {
    TPat::And(Box::new(a), Box::new(b))
}

fn divide(num: Rat, den: Rat, condition: &str, id: AxiomId) -> Result<Rat, AxiomError> {
    num.checked_div(&den)
        .ok_or_else(|| AxiomError::SideCondition { axiom: id, condition: format!("{condition} ≠ 0") })
}

fn complement_r(b: &Bindings) -> Result<Rat, AxiomError> {
    Ok(b.prob("r")?.complement())
}

fn p4_outer(b: &Bindings) -> Result<Rat, AxiomError> {
    Ok(b.prob("r")? * b.prob("s")?)
}

fn p4_inner(b: &Bindings) -> Result<Rat, AxiomError> {
    let (r, s) = (b.prob("r")?, b.prob("s")?);
    divide(r.complement() * &s, (&r * &s).complement(), "1 - rs", AxiomId::P4)
}

fn l6_prob(b: &Bindings) -> Result<Rat, AxiomError> {
    let (r, s) = (b.prob("r")?, b.prob("s")?);
    divide(&r * &s, (&r * s.complement()).complement(), "1 - r(1 - s)", AxiomId::L6)
}

/// `1 - (1 - r)(1 - s)`
fn df11_l(b: &Bindings) -> Result<Rat, AxiomError> {
    Ok((b.prob("r")?.complement() * b.prob("s")?.complement()).complement())
}

fn df11_k(b: &Bindings) -> Result<Rat, AxiomError> {
    divide(b.prob("r")?, df11_l(b)?, "1 - (1 - r)(1 - s)", AxiomId::DF11)
}

fn eq(lhs: Pat, rhs: Pat) -> Schema {
    Schema { premise: None, lhs, rhs, conditions: Vec::new() }
}

/// The shape of `id`. `BA` and `UA` have none.
pub(crate) fn schema(id: AxiomId) -> Option<Schema> {
    use AxiomId::*;
    let (e, f, g, h) = (|| v("e"), || v("f"), || v("g"), || v("h"));
    let (b, c) = (|| tv("b"), || tv("c"));
    let (r, s) = (|| pv("r"), || pv("s"));
    let bt = || t(tv("b"));
    let ct = || t(tv("c"));
    let l5_premise = || (e(), gd(pr(f(), s(), one()), c(), g()));
    let s = match id {
        G1 => eq(gd(e(), b(), e()), e()),
        G2 => eq(gd(e(), b(), f()), gd(seq(bt(), e()), b(), f())),
        G3 => eq(gd(e(), b(), f()), gd(f(), TPat::Not(Box::new(b())), e())),
        G4 => eq(gd(gd(e(), b(), f()), c(), g()), gd(e(), and(b(), c()), gd(f(), c(), g()))),
        D => eq(pr(e(), r(), gd(f(), b(), g())), gd(pr(e(), r(), f()), b(), pr(e(), r(), g()))),
        P1 => eq(pr(e(), r(), e()), e()),
        P2 => eq(pr(e(), PPat::One, f()), e()),
        P3 => eq(pr(e(), r(), f()), pr(f(), PPat::Derived(complement_r), e())),
        P4 => {
            eq(pr(pr(e(), r(), f()), s(), g()), pr(e(), PPat::Derived(p4_outer), pr(f(), PPat::Derived(p4_inner), g())))
        }
        S1 => eq(seq(one(), e()), e()),
        S2 => eq(seq(e(), one()), e()),
        S3 => eq(seq(seq(e(), f()), g()), seq(e(), seq(f(), g()))),
        S4 => eq(seq(zero(), e()), zero()),
        S5 => eq(seq(gd(e(), b(), f()), g()), gd(seq(e(), g()), b(), seq(f(), g()))),
        S6 => eq(seq(pr(e(), r(), f()), g()), pr(seq(e(), g()), r(), seq(f(), g()))),
        S7 => eq(seq(Pat::Out("v"), e()), Pat::Out("v")),
        S8 => eq(seq(bt(), ct()), t(and(b(), c()))),
        L1 => eq(star(e(), b()), gd(seq(e(), star(e(), b())), b(), one())),
        L2 => eq(ploop(e(), r()), pr(seq(e(), ploop(e(), r())), r(), one())),
        L3 => eq(star(gd(e(), c(), one()), b()), star(seq(ct(), e()), b())),
        L4 => eq(star(e(), TPat::One), ploop(e(), PPat::One)),
        L5 => Schema {
            premise: Some(l5_premise()),
            lhs: seq(ct(), star(e(), b())),
            rhs: seq(ct(), gd(seq(f(), star(e(), b())), b(), one())),
            conditions: vec![Cond::Positive("s")],
        },
        L6 => Schema {
            premise: Some(l5_premise()),
            lhs: seq(ct(), ploop(e(), r())),
            rhs: seq(ct(), pr(seq(f(), ploop(e(), r())), PPat::Derived(l6_prob), one())),
            conditions: Vec::new(),
        },
        F1 => Schema {
            premise: Some((g(), gd(seq(e(), g()), b(), f()))),
            lhs: g(),
            rhs: seq(star(e(), b()), f()),
            conditions: vec![Cond::NeverTerminates("e")],
        },
        F2 => Schema {
            premise: Some((g(), pr(seq(e(), g()), r(), f()))),
            lhs: g(),
            rhs: seq(ploop(e(), r()), f()),
            conditions: vec![Cond::NeverTerminates("e")],
        },
        DF1 => eq(gd(e(), b(), gd(f(), c(), g())), gd(gd(e(), b(), f()), TPat::Or(Box::new(b()), Box::new(c())), g())),
        DF2 => eq(gd(e(), b(), zero()), seq(bt(), e())),
        DF3 => eq(seq(bt(), gd(e(), b(), f())), seq(bt(), e())),
        DF4 => eq(gd(gd(e(), b(), f()), c(), g()), gd(gd(e(), and(b(), c()), f()), c(), g())),
        DF5 => eq(gd(gd(e(), b(), f()), c(), gd(g(), b(), h())), gd(gd(e(), c(), g()), b(), gd(f(), c(), h()))),
        DF6 => eq(seq(bt(), gd(e(), c(), f())), gd(seq(bt(), e()), c(), seq(bt(), f()))),
        DF7 => eq(seq(bt(), gd(e(), c(), f())), seq(bt(), gd(seq(bt(), e()), c(), f()))),
        DF8 => eq(pr(gd(e(), b(), f()), r(), g()), gd(pr(e(), r(), g()), b(), pr(f(), r(), g()))),
        DF9 => eq(pr(gd(e(), b(), f()), r(), gd(g(), b(), h())), gd(pr(e(), r(), g()), b(), pr(f(), r(), h()))),
        DF10 => eq(seq(bt(), pr(e(), r(), f())), pr(seq(bt(), e()), r(), seq(bt(), f()))),
        DF11 => {
            eq(pr(e(), r(), pr(f(), s(), g())), pr(pr(e(), PPat::Derived(df11_k), f()), PPat::Derived(df11_l), g()))
        }
        DF12 => eq(gd(e(), TPat::One, f()), e()),
        BA | UA => return None,
    };
    Some(s)
}

/// Extends `b` so that `pat` instantiates to `e`. On failure `b` is left
/// unchanged.
pub(crate) fn unify(pat: &Pat, e: &Arc<Expr>, b: &mut Bindings) -> bool {
    let mut trial = b.clone();
    if unify_expr(pat, e, &mut trial) {
        *b = trial;
        true
    } else {
        false
    }
}

fn bind(b: &mut Bindings, name: &str, value: Binding) -> bool {
    match b.get(name) {
        Some(old) => *old == value,
        None => {
            b.insert(name, value);
            true
        }
    }
}

fn unify_expr(pat: &Pat, e: &Arc<Expr>, b: &mut Bindings) -> bool {
    match (pat, &**e) {
        (Pat::Var(n), _) => bind(b, n, Binding::Expr(e.clone())),
        (Pat::Out(n), Expr::Return(o)) => bind(b, n, Binding::Output(o.clone())),
        (Pat::Test(tp), Expr::Test(x)) => unify_test(tp, x, b),
        (Pat::Seq(p, q), Expr::Seq(x, y)) => unify_expr(p, x, b) && unify_expr(q, y, b),
        (Pat::Guarded(p, tp, q), Expr::GuardedChoice(x, c, y)) => {
            unify_expr(p, x, b) && unify_test(tp, c, b) && unify_expr(q, y, b)
        }
        (Pat::Prob(p, pp, q), Expr::ProbChoice(x, r, y)) => {
            unify_expr(p, x, b) && unify_prob(pp, r, b) && unify_expr(q, y, b)
        }
        (Pat::While(p, tp), Expr::GuardedLoop(x, c)) => unify_expr(p, x, b) && unify_test(tp, c, b),
        (Pat::Loop(p, pp), Expr::ProbLoop(x, r)) => unify_expr(p, x, b) && unify_prob(pp, r, b),
        _ => false,
    }
}

fn unify_test(pat: &TPat, x: &Test, b: &mut Bindings) -> bool {
    match (pat, x) {
        (TPat::Var(n), _) => bind(b, n, Binding::Test(x.clone())),
        (TPat::One, Test::One) | (TPat::Zero, Test::Zero) => true,
        (TPat::Not(p), Test::Not(y)) => unify_test(p, y, b),
        (TPat::And(p, q), Test::And(y, z)) | (TPat::Or(p, q), Test::Or(y, z)) => {
            unify_test(p, y, b) && unify_test(q, z, b)
        }
        _ => false,
    }
}

fn unify_prob(pat: &PPat, r: &Rat, b: &mut Bindings) -> bool {
    match pat {
        PPat::Var(n) => bind(b, n, Binding::Prob(r.clone())),
        PPat::One => r.is_one(),
        PPat::Derived(_) => true,
    }
}

pub(crate) fn instantiate(pat: &Pat, b: &Bindings) -> Result<Arc<Expr>, AxiomError> {
    let arc = |e: Expr| Ok(Arc::new(e));
    match pat {
        Pat::Var(n) => b.expr(n),
        Pat::Out(n) => arc(Expr::Return(b.output(n)?)),
        Pat::Test(tp) => arc(Expr::Test(instantiate_test(tp, b)?)),
        Pat::Seq(p, q) => arc(Expr::Seq(instantiate(p, b)?, instantiate(q, b)?)),
        Pat::Guarded(p, tp, q) => {
            arc(Expr::GuardedChoice(instantiate(p, b)?, instantiate_test(tp, b)?, instantiate(q, b)?))
        }
        Pat::Prob(p, pp, q) => arc(Expr::ProbChoice(instantiate(p, b)?, instantiate_prob(pp, b)?, instantiate(q, b)?)),
        Pat::While(p, tp) => arc(Expr::GuardedLoop(instantiate(p, b)?, instantiate_test(tp, b)?)),
        Pat::Loop(p, pp) => arc(Expr::ProbLoop(instantiate(p, b)?, instantiate_prob(pp, b)?)),
    }
}

fn instantiate_test(pat: &TPat, b: &Bindings) -> Result<Test, AxiomError> {
    Ok(match pat {
        TPat::Var(n) => b.test(n)?,
        TPat::One => Test::One,
        TPat::Zero => Test::Zero,
        TPat::Not(p) => Test::not(instantiate_test(p, b)?),
        TPat::And(p, q) => Test::and(instantiate_test(p, b)?, instantiate_test(q, b)?),
        TPat::Or(p, q) => Test::or(instantiate_test(p, b)?, instantiate_test(q, b)?),
    })
}

fn instantiate_prob(pat: &PPat, b: &Bindings) -> Result<Rat, AxiomError> {
    match pat {
        PPat::Var(n) => b.prob(n),
        PPat::One => Ok(Rat::one()),
        PPat::Derived(f) => f(b),
    }
}

/// Metavariables mentioned anywhere in the schema.
pub(crate) fn metavariables(s: &Schema) -> Vec<&'static str> {
    fn walk(p: &Pat, out: &mut Vec<&'static str>) {
        match p {
            Pat::Var(n) | Pat::Out(n) => out.push(n),
            Pat::Test(tp) => walk_test(tp, out),
            Pat::Seq(a, c) => {
                walk(a, out);
                walk(c, out);
            }
            Pat::Guarded(a, tp, c) => {
                walk(a, out);
                walk_test(tp, out);
                walk(c, out);
            }
            Pat::Prob(a, pp, c) => {
                walk(a, out);
                walk_prob(pp, out);
                walk(c, out);
            }
            Pat::While(a, tp) => {
                walk(a, out);
                walk_test(tp, out);
            }
            Pat::Loop(a, pp) => {
                walk(a, out);
                walk_prob(pp, out);
            }
        }
    }
    fn walk_test(p: &TPat, out: &mut Vec<&'static str>) {
        match p {
            TPat::Var(n) => out.push(n),
            TPat::One | TPat::Zero => {}
            TPat::Not(a) => walk_test(a, out),
            TPat::And(a, c) | TPat::Or(a, c) => {
                walk_test(a, out);
                walk_test(c, out);
            }
        }
    }
    fn walk_prob(p: &PPat, out: &mut Vec<&'static str>) {
        if let PPat::Var(n) = p {
            out.push(n);
        }
    }
    let mut out = Vec::new();
    if let Some((l, r)) = &s.premise {
        walk(l, &mut out);
        walk(r, &mut out);
    }
    walk(&s.lhs, &mut out);
    walk(&s.rhs, &mut out);
    out.sort_unstable();
    out.dedup();
    out
}
