//! Generalised guarded and convex sums, and the expansion of an expression
//! into the sum reconstructed from its derivatives.

use std::sync::Arc;

use super::derivative;
use crate::prob::{Outcome, Rat};
use crate::syntax::{Alphabet, AlphabetError, Atom, Expr, Test};

/// Right-nested guarded sum `e1 +[b1] (e2 +[b2] (... +[bn] zero))`.
pub fn guarded_sum<T>(items: Vec<(Test, T)>, zero: T, choice: impl Fn(T, Test, T) -> T) -> T {
    items.into_iter().rev().fold(zero, |acc, (b, e)| choice(e, b, acc))
}

/// Guarded sum over all atoms in enumeration order. Over a single atom the
/// sum is just its body.
pub fn guarded_sum_over_atoms<T>(
    alphabet: &Alphabet,
    atoms: &[Atom],
    mut bodies: Vec<T>,
    zero: T,
    choice: impl Fn(T, Test, T) -> T,
) -> T {
    assert_eq!(atoms.len(), bodies.len());
    if bodies.len() == 1 {
        return bodies.pop().expect("one body");
    }
    let items = atoms.iter().map(|a| a.to_test(alphabet)).zip(bodies).collect();
    guarded_sum(items, zero, choice)
}

/// Right-nested convex sum `e1 +{r1} (e2 +{r2/(1-r1)} (...))` over entries
/// with positive weights summing to one.
pub fn convex_sum<T>(items: Vec<(T, Rat)>, choice: impl Fn(T, Rat, T) -> T + Copy) -> T {
    let mut it = items.into_iter();
    let (first, r) = it.next().expect("convex sums are nonempty");
    let rest: Vec<(T, Rat)> = it.collect();
    if rest.is_empty() {
        return first;
    }
    let denom = r.complement();
    let rest = rest.into_iter().map(|(e, w)| (e, w / &denom)).collect();
    choice(first, r, convex_sum(rest, choice))
}

fn outcome_expr(x: &Outcome<Arc<Expr>>) -> Expr {
    match x {
        Outcome::Reject => Expr::zero(),
        Outcome::Accept => Expr::one(),
        Outcome::Return(v) => Expr::Return(v.clone()),
        Outcome::Step(p, f) => Expr::Seq(Arc::new(Expr::Act(p.clone())), f.clone()),
    }
}

/// Rebuilds `e` as a guarded sum over atoms of convex sums over the
/// support of each derivative, in canonical outcome order.
pub fn expand(alphabet: &Alphabet, e: &Expr) -> Result<Expr, AlphabetError> {
    let atoms = alphabet.atoms()?;
    let e = Arc::new(e.clone());
    let bodies = atoms
        .iter()
        .map(|a| {
            let items = derivative(&e, a).iter().map(|(x, w)| (outcome_expr(x), w.clone())).collect();
            convex_sum(items, Expr::prob)
        })
        .collect();
    Ok(guarded_sum_over_atoms(alphabet, &atoms, bodies, Expr::zero(), Expr::guarded))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_expr, parse_program};

    #[test]
    fn singleton_sums_collapse() {
        let (a, e) = parse_program("outputs v; ret v").unwrap();
        assert_eq!(expand(&a, &e).unwrap(), e);
        let (a, e) = parse_program("actions p; p").unwrap();
        assert_eq!(expand(&a, &e).unwrap(), Expr::seq(Expr::act("p"), Expr::one()));
    }

    #[test]
    fn two_atoms_nest_with_trailing_zero() {
        let (a, e) = parse_program("tests t; actions p; outputs v; p +[t] ret v").unwrap();
        let expected = parse_expr("ret v +[~t] (p ; 1 +[t] 0)", &a).unwrap();
        assert_eq!(expand(&a, &e).unwrap(), expected);
    }

    #[test]
    fn convex_sum_renormalises() {
        let items: Vec<(String, Rat)> = ["a", "b", "c"].iter().map(|x| (x.to_string(), Rat::new(1, 3))).collect();
        let s = convex_sum(items, |f, r, g| format!("({f} {r} {g})"));
        assert_eq!(s, "(a 1/3 (b 1/2 c))");
    }
}
