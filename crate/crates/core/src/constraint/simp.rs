//! Canonicalization of terms and formulas.
//!
//! Sums and products are flattened and their operands sorted, with all
//! constants folded into one leading constant. Negation is pushed down to
//! relational atoms (and left only on boolean variables). Conjunctions and
//! disjunctions are flattened, sorted, deduplicated and stripped of identity
//! elements. The result is idempotent: `simp(simp(f)) == simp(f)`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::{Formula, NumTerm, Rel};

#[derive(Clone)]
enum Const {
    Int(BigInt),
    Rat(BigRational),
}

impl Const {
    fn of<V>(t: &NumTerm<V>) -> Option<Const> {
        match t {
            NumTerm::Int(n) => Some(Const::Int(n.clone())),
            NumTerm::Rat(q) => Some(Const::Rat(q.clone())),
            _ => None,
        }
    }

    fn as_rational(&self) -> BigRational {
        match self {
            Const::Int(n) => BigRational::from_integer(n.clone()),
            Const::Rat(q) => q.clone(),
        }
    }

    fn add(self, other: Const) -> Const {
        match (self, other) {
            (Const::Int(a), Const::Int(b)) => Const::Int(a + b),
            (a, b) => Const::Rat(a.as_rational() + b.as_rational()),
        }
    }

    fn mul(self, other: Const) -> Const {
        match (self, other) {
            (Const::Int(a), Const::Int(b)) => Const::Int(a * b),
            (a, b) => Const::Rat(a.as_rational() * b.as_rational()),
        }
    }

    fn is_zero(&self) -> bool {
        match self {
            Const::Int(n) => n.is_zero(),
            Const::Rat(q) => q.is_zero(),
        }
    }

    fn is_one(&self) -> bool {
        match self {
            Const::Int(n) => n.is_one(),
            Const::Rat(q) => q.is_one(),
        }
    }

    fn into_term<V>(self) -> NumTerm<V> {
        match self {
            Const::Int(n) => NumTerm::Int(n),
            Const::Rat(q) => NumTerm::Rat(q),
        }
    }
}

fn negate<V: Ord + Clone>(t: NumTerm<V>) -> NumTerm<V> {
    match t {
        NumTerm::Int(n) => NumTerm::Int(-n),
        NumTerm::Rat(q) => NumTerm::Rat(-q),
        other => build_mul(vec![NumTerm::int(-1), other]),
    }
}

/// Assembles a canonical sum from canonical operands.
fn build_add<V: Ord + Clone>(operands: Vec<NumTerm<V>>) -> NumTerm<V> {
    let mut constant = Const::Int(BigInt::zero());
    let mut rest = Vec::new();
    let mut stack = operands;
    stack.reverse();
    while let Some(t) = stack.pop() {
        match t {
            NumTerm::Add(inner) => stack.extend(inner.into_iter().rev()),
            t => match Const::of(&t) {
                Some(c) => constant = constant.add(c),
                None => rest.push(t),
            },
        }
    }
    rest.sort();
    if rest.is_empty() {
        return constant.into_term();
    }
    if constant.is_zero() {
        if rest.len() == 1 {
            return rest.pop().unwrap();
        }
        return NumTerm::Add(rest);
    }
    let mut ops = Vec::with_capacity(rest.len() + 1);
    ops.push(constant.into_term());
    ops.extend(rest);
    NumTerm::Add(ops)
}

/// Assembles a canonical product from canonical operands.
fn build_mul<V: Ord + Clone>(operands: Vec<NumTerm<V>>) -> NumTerm<V> {
    let mut constant = Const::Int(BigInt::one());
    let mut rest = Vec::new();
    let mut stack = operands;
    stack.reverse();
    while let Some(t) = stack.pop() {
        match t {
            NumTerm::Mul(inner) => stack.extend(inner.into_iter().rev()),
            t => match Const::of(&t) {
                Some(c) => constant = constant.mul(c),
                None => rest.push(t),
            },
        }
    }
    if constant.is_zero() || rest.is_empty() {
        return constant.into_term();
    }
    rest.sort();
    if constant.is_one() {
        if rest.len() == 1 {
            return rest.pop().unwrap();
        }
        return NumTerm::Mul(rest);
    }
    let mut ops = Vec::with_capacity(rest.len() + 1);
    ops.push(constant.into_term());
    ops.extend(rest);
    NumTerm::Mul(ops)
}

pub fn simp_term<V: Ord + Clone>(t: &NumTerm<V>) -> NumTerm<V> {
    match t {
        NumTerm::Int(_) | NumTerm::Rat(_) | NumTerm::Var(_) => t.clone(),
        NumTerm::Neg(inner) => negate(simp_term(inner)),
        NumTerm::Add(ts) => build_add(ts.iter().map(simp_term).collect()),
        NumTerm::Mul(ts) => build_mul(ts.iter().map(simp_term).collect()),
    }
}

fn const_value<V>(t: &NumTerm<V>) -> Option<BigRational> {
    Const::of(t).map(|c| c.as_rational())
}

fn simp_atom<V: Ord + Clone>(rel: Rel, lhs: &NumTerm<V>, rhs: &NumTerm<V>) -> Formula<V> {
    let lhs = simp_term(lhs);
    let rhs = simp_term(rhs);
    if let (Some(a), Some(b)) = (const_value(&lhs), const_value(&rhs)) {
        return if rel.holds(&a, &b) {
            Formula::True
        } else {
            Formula::False
        };
    }
    Formula::Atom(rel, lhs, rhs)
}

/// Canonical form of `¬f`.
fn simp_neg<V: Ord + Clone>(f: &Formula<V>) -> Formula<V> {
    match f {
        Formula::True => Formula::False,
        Formula::False => Formula::True,
        Formula::BoolVar(v) => Formula::Not(Box::new(Formula::BoolVar(v.clone()))),
        Formula::Not(g) => simp(g),
        Formula::Atom(r, a, b) => simp_atom(r.negate(), a, b),
        Formula::And(gs) => junction(gs.iter().map(simp_neg).collect(), false),
        Formula::Or(gs) => junction(gs.iter().map(simp_neg).collect(), true),
    }
}

/// Flattens, sorts and deduplicates canonical operands of a conjunction
/// (`conj = true`) or disjunction.
fn junction<V: Ord + Clone>(operands: Vec<Formula<V>>, conj: bool) -> Formula<V> {
    let mut out = Vec::with_capacity(operands.len());
    let mut stack = operands;
    while let Some(f) = stack.pop() {
        match f {
            Formula::True if conj => {}
            Formula::False if !conj => {}
            Formula::False if conj => return Formula::False,
            Formula::True if !conj => return Formula::True,
            Formula::And(inner) if conj => stack.extend(inner),
            Formula::Or(inner) if !conj => stack.extend(inner),
            other => out.push(other),
        }
    }
    out.sort();
    out.dedup();
    match out.len() {
        0 if conj => Formula::True,
        0 => Formula::False,
        1 => out.pop().unwrap(),
        _ if conj => Formula::And(out),
        _ => Formula::Or(out),
    }
}

/// Canonicalizes a formula; semantics-preserving and idempotent.
pub fn simp<V: Ord + Clone>(f: &Formula<V>) -> Formula<V> {
    match f {
        Formula::True | Formula::False | Formula::BoolVar(_) => f.clone(),
        Formula::Not(g) => simp_neg(g),
        Formula::Atom(r, a, b) => simp_atom(*r, a, b),
        Formula::And(gs) => junction(gs.iter().map(simp).collect(), true),
        Formula::Or(gs) => junction(gs.iter().map(simp).collect(), false),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraint::SymVar;
    use crate::model::{ClassId, Oid};

    fn level(i: u32) -> NumTerm {
        NumTerm::Var(SymVar::int(Oid::new(ClassId::new("Employee"), 0, i, "e"), "level"))
    }

    #[test]
    fn true_is_conjunction_identity() {
        let phi = Formula::atom(Rel::Lt, level(1), NumTerm::int(3));
        assert_eq!(simp(&Formula::and([phi.clone(), Formula::True])), simp(&phi));
        assert_eq!(simp(&Formula::or([phi.clone(), Formula::False])), simp(&phi));
        assert_eq!(simp(&Formula::and([phi.clone(), Formula::False])), Formula::False);
        assert_eq!(simp(&Formula::<SymVar>::and([])), Formula::True);
    }

    #[test]
    fn negation_enters_atoms() {
        let f = Formula::not(Formula::atom(Rel::Lt, level(1), NumTerm::int(3)));
        assert_eq!(simp(&f), Formula::atom(Rel::Ge, level(1), NumTerm::int(3)));
        let g = Formula::not(Formula::and([
            Formula::atom(Rel::Ge, level(1), NumTerm::int(0)),
            Formula::atom(Rel::Lt, level(1), NumTerm::int(3)),
        ]));
        assert_eq!(
            simp(&g).to_string(),
            "(or (< i(e1,level) 0) (>= i(e1,level) 3))"
        );
    }

    #[test]
    fn constants_fold_into_leading_position() {
        let f = Formula::atom(
            Rel::Lt,
            NumTerm::Add(vec![NumTerm::int(2), NumTerm::int(3)]),
            level(1),
        );
        assert_eq!(simp(&f), Formula::atom(Rel::Lt, NumTerm::int(5), level(1)));

        let t = NumTerm::Add(vec![level(2), NumTerm::int(1), level(1), NumTerm::int(-1)]);
        assert_eq!(simp_term(&t), NumTerm::Add(vec![level(1), level(2)]));

        let m = NumTerm::Mul(vec![NumTerm::int(2), level(1), NumTerm::int(0)]);
        assert_eq!(simp_term(&m), NumTerm::int(0));

        let n = NumTerm::Neg(Box::new(NumTerm::Neg(Box::new(level(1)))));
        assert_eq!(simp_term(&n), level(1));
    }

    #[test]
    fn ground_atoms_evaluate() {
        let f = Formula::<SymVar>::atom(Rel::Ne, NumTerm::int(1), NumTerm::int(1));
        assert_eq!(simp(&f), Formula::False);
        let q = BigRational::new(1.into(), 2.into());
        let g = Formula::<SymVar>::atom(Rel::Lt, NumTerm::Rat(q), NumTerm::int(1));
        assert_eq!(simp(&g), Formula::True);
    }

    #[test]
    fn rational_sums_stay_rational() {
        let half = BigRational::new(1.into(), 2.into());
        let t = NumTerm::Add(vec![NumTerm::<SymVar>::Rat(half.clone()), NumTerm::Rat(half)]);
        assert_eq!(simp_term(&t), NumTerm::Rat(BigRational::one()));
    }

    #[test]
    fn duplicates_collapse() {
        let a = Formula::atom(Rel::Lt, level(1), NumTerm::int(3));
        let f = Formula::and([a.clone(), Formula::and([a.clone(), Formula::True])]);
        assert_eq!(simp(&f), a);
    }
}
