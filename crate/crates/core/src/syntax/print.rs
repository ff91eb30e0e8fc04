//! Minimal-parenthesis printer whose output re-parses to the same AST.

use super::{Alphabet, Expr, Test};

pub(crate) const LVL_PROB: u8 = 0;
pub(crate) const LVL_GUARD: u8 = 1;
pub(crate) const LVL_SEQ: u8 = 2;
pub(crate) const LVL_POSTFIX: u8 = 3;
const LVL_PRIMARY: u8 = 4;

pub fn print_test(b: &Test) -> String {
    let mut out = String::new();
    test_at(b, 0, &mut out);
    out
}

fn test_level(b: &Test) -> u8 {
    match b {
        Test::Or(..) => 0,
        Test::And(..) => 1,
        _ => 2,
    }
}

fn test_at(b: &Test, min: u8, out: &mut String) {
    let paren = test_level(b) < min;
    if paren {
        out.push('(');
    }
    match b {
        Test::Zero => out.push('0'),
        Test::One => out.push('1'),
        Test::Prim(t) => out.push_str(t),
        Test::Or(b, c) => {
            test_at(b, 0, out);
            out.push_str(" | ");
            test_at(c, 1, out);
        }
        Test::And(b, c) => {
            test_at(b, 1, out);
            out.push_str(" & ");
            test_at(c, 2, out);
        }
        Test::Not(b) => {
            out.push('~');
            test_at(b, 2, out);
        }
    }
    if paren {
        out.push(')');
    }
}

pub fn print_expr(e: &Expr) -> String {
    let mut out = String::new();
    expr_at(e, LVL_PROB, &mut out);
    out
}

pub(crate) fn expr_level(e: &Expr) -> u8 {
    match e {
        Expr::ProbChoice(..) => LVL_PROB,
        Expr::GuardedChoice(..) => LVL_GUARD,
        Expr::Seq(..) => LVL_SEQ,
        Expr::GuardedLoop(..) | Expr::ProbLoop(..) => LVL_POSTFIX,
        _ => LVL_PRIMARY,
    }
}

pub(crate) fn expr_at(e: &Expr, min: u8, out: &mut String) {
    let paren = expr_level(e) < min;
    if paren {
        out.push('(');
    }
    match e {
        Expr::Act(p) => out.push_str(p),
        Expr::Return(v) => {
            out.push_str("ret ");
            out.push_str(v);
        }
        Expr::Test(b) => match b {
            Test::Zero | Test::One | Test::Prim(_) => test_at(b, 0, out),
            _ => {
                out.push('[');
                test_at(b, 0, out);
                out.push(']');
            }
        },
        Expr::ProbChoice(e, r, f) => {
            expr_at(e, LVL_GUARD, out);
            out.push_str(&format!(" +{{{r}}} "));
            expr_at(f, LVL_PROB, out);
        }
        Expr::GuardedChoice(e, b, f) => {
            expr_at(e, LVL_SEQ, out);
            out.push_str(" +[");
            test_at(b, 0, out);
            out.push_str("] ");
            expr_at(f, LVL_GUARD, out);
        }
        Expr::Seq(e, f) => {
            expr_at(e, LVL_POSTFIX, out);
            out.push_str(" ; ");
            expr_at(f, LVL_SEQ, out);
        }
        Expr::GuardedLoop(e, b) => {
            expr_at(e, LVL_POSTFIX, out);
            out.push_str(" *[");
            test_at(b, 0, out);
            out.push(']');
        }
        Expr::ProbLoop(e, r) => {
            expr_at(e, LVL_POSTFIX, out);
            out.push_str(&format!(" *{{{r}}}"));
        }
    }
    if paren {
        out.push(')');
    }
}

/// The declarations header, one line, omitting empty sections.
pub(crate) fn print_header(alphabet: &Alphabet) -> String {
    let mut parts = Vec::new();
    for (kw, names) in [("tests", alphabet.tests()), ("actions", alphabet.actions()), ("outputs", alphabet.outputs())] {
        if !names.is_empty() {
            parts.push(format!("{kw} {};", names.join(", ")));
        }
    }
    parts.join(" ")
}

/// A complete program: declarations header followed by the expression.
pub fn print_program(alphabet: &Alphabet, e: &Expr) -> String {
    let header = print_header(alphabet);
    if header.is_empty() {
        print_expr(e)
    } else {
        format!("{header}\n{}", print_expr(e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::Rat;
    use crate::syntax::parse_program;

    #[test]
    fn prints_examples() {
        assert_eq!(print_expr(&Expr::ret("v")), "ret v");
        assert_eq!(print_expr(&Expr::seq(Expr::act("p"), Expr::one())), "p ; 1");
        assert_eq!(print_expr(&Expr::prob_loop(Expr::act("p"), Rat::half())), "p *{1/2}");
    }

    #[test]
    fn parenthesises_only_when_needed() {
        let e = Expr::seq(Expr::prob(Expr::act("p"), Rat::half(), Expr::act("q")), Expr::act("p"));
        assert_eq!(print_expr(&e), "(p +{1/2} q) ; p");
        let e = Expr::prob(Expr::prob(Expr::act("p"), Rat::half(), Expr::act("q")), Rat::half(), Expr::act("p"));
        assert_eq!(print_expr(&e), "(p +{1/2} q) +{1/2} p");
        let b = Test::and(Test::prim("t"), Test::or(Test::prim("u"), Test::Zero));
        assert_eq!(print_test(&b), "t & (u | 0)");
        assert_eq!(print_expr(&Expr::test(Test::not(Test::prim("t")))), "[~t]");
    }

    #[test]
    fn program_round_trip() {
        let src = "tests t, u; actions p, q; outputs v;\n(p +[t & ~u] ret v) *{1/3} ; [t | u] +{1/2} q *[u]";
        let (a, e) = parse_program(src).unwrap();
        let printed = print_program(&a, &e);
        let (a2, e2) = parse_program(&printed).unwrap();
        assert_eq!((a, e), (a2, e2));
    }
}
