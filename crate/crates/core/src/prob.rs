//! Exact rational probabilities and finitely supported distributions.
//!
//! Every distribution stores only strictly positive entries and sums to
//! exactly one. Outcomes are ordered `Reject < Accept < Return < Step`, so
//! equality and hashing of distributions are structural.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProbError {
    #[error("probability {0} is outside [0, 1]")]
    OutOfRange(Rat),
    #[error("distribution entries sum to {0}, expected 1")]
    NotNormalized(Rat),
    #[error("invalid rational literal `{0}`")]
    InvalidLiteral(String),
}

/// An arbitrary-precision rational, always kept in lowest terms.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rat(BigRational);

impl Rat {
    pub fn zero() -> Self {
        Rat(BigRational::zero())
    }

    pub fn one() -> Self {
        Rat(BigRational::one())
    }

    /// Panics if `den` is zero.
    pub fn new(num: i64, den: i64) -> Self {
        Rat(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn from_integer(n: i64) -> Self {
        Rat(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn from_big(num: BigInt, den: BigInt) -> Self {
        Rat(BigRational::new(num, den))
    }

    /// `2^-n`.
    pub fn pow2_neg(n: u32) -> Self {
        Rat(BigRational::new(BigInt::one(), BigInt::one() << n as usize))
    }

    pub fn half() -> Self {
        Rat::new(1, 2)
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.0.is_one()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    pub fn is_probability(&self) -> bool {
        !self.0.is_negative() && self.0 <= BigRational::one()
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    /// `1 - self`.
    pub fn complement(&self) -> Rat {
        Rat(BigRational::one() - &self.0)
    }

    pub fn checked_div(&self, other: &Rat) -> Option<Rat> {
        if other.is_zero() {
            None
        } else {
            Some(Rat(&self.0 / &other.0))
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    pub fn as_big_rational(&self) -> &BigRational {
        &self.0
    }

    /// Ensures the value lies in `[0, 1]`.
    pub fn into_probability(self) -> Result<Rat, ProbError> {
        if self.is_probability() {
            Ok(self)
        } else {
            Err(ProbError::OutOfRange(self))
        }
    }
}

impl From<BigRational> for Rat {
    fn from(r: BigRational) -> Self {
        Rat(r)
    }
}

impl fmt::Display for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.denom().is_one() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl fmt::Debug for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Accepts `a/b`, integers, and finite decimals such as `0.125`.
impl FromStr for Rat {
    type Err = ProbError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ProbError::InvalidLiteral(s.to_string());
        let t = s.trim();
        if let Some((n, d)) = t.split_once('/') {
            let n: BigInt = n.trim().parse().map_err(|_| bad())?;
            let d: BigInt = d.trim().parse().map_err(|_| bad())?;
            if d.is_zero() {
                return Err(bad());
            }
            return Ok(Rat(BigRational::new(n, d)));
        }
        if let Some((int, frac)) = t.split_once('.') {
            let negative = int.starts_with('-');
            let int_digits = int.trim_start_matches('-');
            if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
                return Err(bad());
            }
            if !int_digits.bytes().all(|b| b.is_ascii_digit()) {
                return Err(bad());
            }
            let digits = format!("{int_digits}{frac}");
            let mut num: BigInt = digits.parse().map_err(|_| bad())?;
            if negative {
                num = -num;
            }
            let den = num_traits::pow(BigInt::from(10), frac.len());
            return Ok(Rat(BigRational::new(num, den)));
        }
        let n: BigInt = t.parse().map_err(|_| bad())?;
        Ok(Rat(BigRational::from_integer(n)))
    }
}

impl Serialize for Rat {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Rat {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident) => {
        impl $trait<&Rat> for &Rat {
            type Output = Rat;
            fn $method(self, rhs: &Rat) -> Rat {
                Rat((&self.0).$method(&rhs.0))
            }
        }
        impl $trait<Rat> for Rat {
            type Output = Rat;
            fn $method(self, rhs: Rat) -> Rat {
                Rat(self.0.$method(rhs.0))
            }
        }
        impl $trait<&Rat> for Rat {
            type Output = Rat;
            fn $method(self, rhs: &Rat) -> Rat {
                Rat(self.0.$method(&rhs.0))
            }
        }
        impl $trait<Rat> for &Rat {
            type Output = Rat;
            fn $method(self, rhs: Rat) -> Rat {
                Rat((&self.0).$method(rhs.0))
            }
        }
    };
}

forward_binop!(Add, add);
forward_binop!(Sub, sub);
forward_binop!(Mul, mul);
forward_binop!(Div, div);

impl Neg for Rat {
    type Output = Rat;
    fn neg(self) -> Rat {
        Rat(-self.0)
    }
}

impl std::iter::Sum for Rat {
    fn sum<I: Iterator<Item = Rat>>(iter: I) -> Rat {
        iter.fold(Rat::zero(), |a, b| a + b)
    }
}

impl<'a> std::iter::Sum<&'a Rat> for Rat {
    fn sum<I: Iterator<Item = &'a Rat>>(iter: I) -> Rat {
        iter.fold(Rat::zero(), |a, b| a + b)
    }
}

/// A possible result of one transition: termination (`✗`, `✓`, a return
/// value) or an action step into a successor state.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Outcome<S> {
    Reject,
    Accept,
    Return(String),
    Step(String, S),
}

impl<S> Outcome<S> {
    pub fn is_step(&self) -> bool {
        matches!(self, Outcome::Step(..))
    }

    /// Replaces the successor of a step; termination outcomes are unchanged.
    pub fn map_state<T>(self, f: impl FnOnce(S) -> T) -> Outcome<T> {
        match self {
            Outcome::Reject => Outcome::Reject,
            Outcome::Accept => Outcome::Accept,
            Outcome::Return(v) => Outcome::Return(v),
            Outcome::Step(a, s) => Outcome::Step(a, f(s)),
        }
    }

    /// The termination part of an outcome, with steps mapped to `None`.
    pub fn observable(&self) -> Option<Outcome<()>> {
        match self {
            Outcome::Reject => Some(Outcome::Reject),
            Outcome::Accept => Some(Outcome::Accept),
            Outcome::Return(v) => Some(Outcome::Return(v.clone())),
            Outcome::Step(..) => None,
        }
    }
}

impl<S: fmt::Display> fmt::Display for Outcome<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Reject => write!(f, "✗"),
            Outcome::Accept => write!(f, "✓"),
            Outcome::Return(v) => write!(f, "{v}"),
            Outcome::Step(a, s) => write!(f, "({a}, {s})"),
        }
    }
}

/// A finitely supported probability distribution.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Dist<S: Ord> {
    support: BTreeMap<Outcome<S>, Rat>,
}

impl<S: Ord + Clone> Dist<S> {
    pub fn dirac(x: Outcome<S>) -> Self {
        let mut support = BTreeMap::new();
        support.insert(x, Rat::one());
        Dist { support }
    }

    /// Builds a distribution from weighted entries; duplicate outcomes are
    /// summed and zero entries dropped.
    pub fn from_entries(entries: impl IntoIterator<Item = (Outcome<S>, Rat)>) -> Result<Self, ProbError> {
        let mut acc = DistBuilder::new();
        for (x, w) in entries {
            if !w.is_probability() {
                return Err(ProbError::OutOfRange(w));
            }
            acc.add(x, w);
        }
        acc.try_finish()
    }

    /// `r·ν + (1−r)·μ`.
    pub fn convex(r: &Rat, nu: &Dist<S>, mu: &Dist<S>) -> Result<Self, ProbError> {
        if !r.is_probability() {
            return Err(ProbError::OutOfRange(r.clone()));
        }
        let mut acc = DistBuilder::new();
        acc.add_scaled(r, nu);
        acc.add_scaled(&r.complement(), mu);
        Ok(acc.finish())
    }

    /// `ν[A]`: total mass of outcomes satisfying `pred`.
    pub fn mass(&self, mut pred: impl FnMut(&Outcome<S>) -> bool) -> Rat {
        self.support.iter().filter(|(x, _)| pred(x)).map(|(_, w)| w).sum()
    }

    /// The convex extension `f̄(ν)(y) = Σ ν(x)·f(x)(y)`.
    pub fn convex_extend<T: Ord + Clone>(&self, mut f: impl FnMut(&Outcome<S>) -> Dist<T>) -> Dist<T> {
        let mut acc = DistBuilder::new();
        for (x, w) in &self.support {
            acc.add_scaled(w, &f(x));
        }
        acc.finish()
    }

    /// Pushforward along a map on successor states.
    pub fn map_states<T: Ord + Clone>(&self, mut f: impl FnMut(&S) -> T) -> Dist<T> {
        let mut acc = DistBuilder::new();
        for (x, w) in &self.support {
            acc.add(x.clone().map_state(|s| f(&s)), w.clone());
        }
        acc.finish()
    }

    pub fn get(&self, x: &Outcome<S>) -> Rat {
        self.support.get(x).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn accept_mass(&self) -> Rat {
        self.get(&Outcome::Accept)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Outcome<S>, &Rat)> {
        self.support.iter()
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    /// Termination entries only (`✗`, `✓`, returns), in canonical order.
    pub fn observables(&self) -> Vec<(Outcome<()>, Rat)> {
        self.support.iter().filter_map(|(x, w)| x.observable().map(|o| (o, w.clone()))).collect()
    }

    /// Mass on `Step(action, s)` summed per `(action, key(s))`.
    pub fn step_masses<K: Ord>(&self, mut key: impl FnMut(&S) -> K) -> BTreeMap<(String, K), Rat> {
        let mut out: BTreeMap<(String, K), Rat> = BTreeMap::new();
        for (x, w) in &self.support {
            if let Outcome::Step(a, s) = x {
                let e = out.entry((a.clone(), key(s))).or_insert_with(Rat::zero);
                *e = &*e + w;
            }
        }
        out
    }
}

/// Accumulates weighted outcomes into a distribution.
#[derive(Debug)]
pub(crate) struct DistBuilder<S: Ord> {
    acc: BTreeMap<Outcome<S>, Rat>,
}

impl<S: Ord + Clone> DistBuilder<S> {
    pub(crate) fn new() -> Self {
        DistBuilder { acc: BTreeMap::new() }
    }

    pub(crate) fn add(&mut self, x: Outcome<S>, w: Rat) {
        if w.is_zero() {
            return;
        }
        match self.acc.get_mut(&x) {
            Some(v) => *v = &*v + &w,
            None => {
                self.acc.insert(x, w);
            }
        }
    }

    pub(crate) fn add_scaled(&mut self, r: &Rat, d: &Dist<S>) {
        if r.is_zero() {
            return;
        }
        for (x, w) in &d.support {
            self.add(x.clone(), r * w);
        }
    }

    pub(crate) fn try_finish(self) -> Result<Dist<S>, ProbError> {
        let support: BTreeMap<_, _> = self.acc.into_iter().filter(|(_, w)| !w.is_zero()).collect();
        let total: Rat = support.values().sum();
        if !total.is_one() {
            return Err(ProbError::NotNormalized(total));
        }
        Ok(Dist { support })
    }

    /// Panics if the accumulated mass is not exactly one.
    pub(crate) fn finish(self) -> Dist<S> {
        match self.try_finish() {
            Ok(d) => d,
            Err(e) => panic!("distribution invariant violated: {e}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type D = Dist<u32>;

    fn coin() -> D {
        D::from_entries([(Outcome::Accept, Rat::half()), (Outcome::Reject, Rat::half())]).unwrap()
    }

    #[test]
    fn parses_rational_literals() {
        assert_eq!("1/3".parse::<Rat>().unwrap(), Rat::new(1, 3));
        assert_eq!("2/4".parse::<Rat>().unwrap(), Rat::new(1, 2));
        assert_eq!("0.125".parse::<Rat>().unwrap(), Rat::new(1, 8));
        assert_eq!("1".parse::<Rat>().unwrap(), Rat::one());
        assert!("1/0".parse::<Rat>().is_err());
        assert!("x".parse::<Rat>().is_err());
        assert!("0.".parse::<Rat>().is_err());
    }

    #[test]
    fn displays_reduced() {
        assert_eq!(Rat::new(2, 4).to_string(), "1/2");
        assert_eq!(Rat::new(4, 2).to_string(), "2");
        assert_eq!(serde_json::to_string(&Rat::new(1, 3)).unwrap(), "\"1/3\"");
    }

    #[test]
    fn dirac_has_unit_mass() {
        let d = D::dirac(Outcome::Accept);
        assert_eq!(d.get(&Outcome::Accept), Rat::one());
        assert_eq!(d.len(), 1);
        let s = D::dirac(Outcome::Step("p".into(), 3));
        assert_eq!(s.get(&Outcome::Step("p".into(), 3)), Rat::one());
        assert_eq!(D::dirac(Outcome::Reject).get(&Outcome::Reject), Rat::one());
    }

    #[test]
    fn convex_examples() {
        let a = D::dirac(Outcome::Accept);
        let r = D::dirac(Outcome::Reject);
        assert_eq!(D::convex(&Rat::one(), &a, &r).unwrap(), a);
        assert_eq!(D::convex(&Rat::half(), &a, &r).unwrap(), coin());
        assert_eq!(D::convex(&Rat::half(), &coin(), &coin()).unwrap(), coin());
        assert!(D::convex(&Rat::new(3, 2), &a, &r).is_err());
    }

    #[test]
    fn mass_examples() {
        let c = coin();
        assert_eq!(c.mass(|x| *x == Outcome::Accept), Rat::half());
        assert_eq!(c.mass(|_| true), Rat::one());
        assert_eq!(c.mass(|_| false), Rat::zero());
    }

    #[test]
    fn convex_extend_examples() {
        let c = coin();
        assert_eq!(c.convex_extend(|x| D::dirac(x.clone())), c);
        let f = |x: &Outcome<u32>| match x {
            Outcome::Step(_, 0) => D::dirac(Outcome::Accept),
            _ => D::dirac(Outcome::Reject),
        };
        let x = Outcome::Step("a".to_string(), 0);
        assert_eq!(D::dirac(x.clone()).convex_extend(f), f(&x));
        // {a↦1/2, b↦1/2} with f(a)=δ✓, f(b)=δ✗ expands to 1/2·δ✓ + 1/2·δ✗.
        let nu =
            D::from_entries([(Outcome::Step("a".into(), 0), Rat::half()), (Outcome::Step("b".into(), 1), Rat::half())])
                .unwrap();
        assert_eq!(nu.convex_extend(f), coin());
    }

    #[test]
    fn rejects_unnormalized() {
        assert!(D::from_entries([(Outcome::Accept, Rat::half())]).is_err());
        let d = D::from_entries([
            (Outcome::Accept, Rat::half()),
            (Outcome::Reject, Rat::zero()),
            (Outcome::Accept, Rat::half()),
        ])
        .unwrap();
        assert_eq!(d, D::dirac(Outcome::Accept));
    }

    #[test]
    fn canonical_outcome_order() {
        let xs: Vec<Outcome<u32>> =
            vec![Outcome::Step("a".into(), 0), Outcome::Return("v".into()), Outcome::Accept, Outcome::Reject];
        let mut sorted = xs.clone();
        sorted.sort();
        assert_eq!(sorted, xs.into_iter().rev().collect::<Vec<_>>());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_outcome() -> impl Strategy<Value = Outcome<u32>> {
            prop_oneof![
                Just(Outcome::Accept),
                Just(Outcome::Reject),
                "[uvw]".prop_map(Outcome::Return),
                ("[pq]", 0u32..4).prop_map(|(a, s)| Outcome::Step(a, s)),
            ]
        }

        fn arb_dist() -> impl Strategy<Value = D> {
            prop::collection::vec((arb_outcome(), 1u32..10), 1..6).prop_map(|entries| {
                let total: u32 = entries.iter().map(|(_, w)| w).sum();
                D::from_entries(entries.into_iter().map(|(x, w)| (x, Rat::new(w as i64, total as i64)))).unwrap()
            })
        }

        fn arb_prob() -> impl Strategy<Value = Rat> {
            (0i64..=12, 1i64..=12).prop_map(|(a, b)| Rat::new(a.min(b), b))
        }

        proptest! {
            #[test]
            fn convex_is_symmetric(r in arb_prob(), nu in arb_dist(), mu in arb_dist()) {
                let lhs = D::convex(&r, &nu, &mu).unwrap();
                let rhs = D::convex(&r.complement(), &mu, &nu).unwrap();
                prop_assert_eq!(lhs, rhs);
            }

            #[test]
            fn convex_extend_dirac_is_identity(nu in arb_dist()) {
                prop_assert_eq!(nu.convex_extend(|x| D::dirac(x.clone())), nu);
            }

            #[test]
            fn mass_is_additive(nu in arb_dist()) {
                let steps = nu.mass(|x| x.is_step());
                let rest = nu.mass(|x| !x.is_step());
                prop_assert_eq!(steps + rest, Rat::one());
                prop_assert!(nu.iter().all(|(_, w)| w.is_positive()));
            }
        }
    }
}
