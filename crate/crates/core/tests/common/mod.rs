//! Random generators shared by the property and acceptance tests.
#![allow(dead_code)]

use mmf_core::calculus::{Calculus, RuntimeState};
use mmf_core::constraint::{Formula, NumTerm, Rel, SymVar, Valuation, Value};
use mmf_core::model::{ClassId, Oid};
use num_bigint::BigInt;
use num_rational::BigRational;
use rand::seq::SliceRandom;
use rand::Rng;

pub const RELS: [Rel; 6] = [Rel::Lt, Rel::Le, Rel::Gt, Rel::Ge, Rel::Eq, Rel::Ne];

pub fn oid(i: u32) -> Oid {
    Oid::new(ClassId::new("Employee"), 0, i, "e")
}

/// Two Int, two Real and one Bool variable.
pub fn var_pool() -> (Vec<SymVar>, Vec<SymVar>) {
    let nums = vec![
        SymVar::int(oid(1), "level"),
        SymVar::int(oid(2), "level"),
        SymVar::real(oid(1), "pay"),
        SymVar::real(oid(2), "pay"),
    ];
    let bools = vec![SymVar::boolean(oid(1), "lead")];
    (nums, bools)
}

fn rat<R: Rng>(rng: &mut R) -> BigRational {
    BigRational::new(BigInt::from(rng.gen_range(-6..=6)), BigInt::from(rng.gen_range(1..=3)))
}

/// Arbitrary arithmetic terms, products of variables included.
pub fn term<R: Rng>(rng: &mut R, nums: &[SymVar], depth: u32) -> NumTerm {
    let leaf = depth == 0 || rng.gen_bool(0.4);
    if leaf {
        return match rng.gen_range(0..3) {
            0 => NumTerm::int(rng.gen_range(-3..=3)),
            1 => NumTerm::Rat(rat(rng)),
            _ => NumTerm::Var(nums.choose(rng).unwrap().clone()),
        };
    }
    let n = rng.gen_range(1..=3);
    match rng.gen_range(0..3) {
        0 => NumTerm::Neg(Box::new(term(rng, nums, depth - 1))),
        1 => NumTerm::Add((0..n).map(|_| term(rng, nums, depth - 1)).collect()),
        _ => NumTerm::Mul((0..n).map(|_| term(rng, nums, depth - 1)).collect()),
    }
}

/// Arbitrary formulas over `term` atoms.
pub fn formula<R: Rng>(rng: &mut R, nums: &[SymVar], bools: &[SymVar], depth: u32) -> Formula {
    let leaf = depth == 0 || rng.gen_bool(0.3);
    if leaf {
        return match rng.gen_range(0..8) {
            0 => Formula::True,
            1 => Formula::False,
            2 => Formula::BoolVar(bools.choose(rng).unwrap().clone()),
            _ => Formula::atom(*RELS.choose(rng).unwrap(), term(rng, nums, 2), term(rng, nums, 2)),
        };
    }
    let n = rng.gen_range(0..=3);
    match rng.gen_range(0..3) {
        0 => Formula::not(formula(rng, nums, bools, depth - 1)),
        1 => Formula::and((0..n).map(|_| formula(rng, nums, bools, depth - 1))),
        _ => Formula::or((0..n).map(|_| formula(rng, nums, bools, depth - 1))),
    }
}

pub fn valuation<R: Rng>(rng: &mut R, nums: &[SymVar], bools: &[SymVar]) -> Valuation {
    let mut v = Valuation::new();
    for x in nums {
        let value = match x.kind {
            mmf_core::model::Sort::Int => Value::Int(BigInt::from(rng.gen_range(-3..=3))),
            _ => Value::Real(rat(rng)),
        };
        v.insert(x.clone(), value);
    }
    for b in bools {
        v.insert(b.clone(), Value::Bool(rng.gen_bool(0.5)));
    }
    v
}

/// `sum c_i x_i + c0` over up to four variables, coefficients in [-4, 4].
pub fn linear_term<R: Rng>(rng: &mut R, nums: &[SymVar]) -> NumTerm {
    let k = rng.gen_range(1..=nums.len().min(4));
    let mut parts: Vec<NumTerm> = nums
        .choose_multiple(rng, k)
        .map(|x| NumTerm::Mul(vec![NumTerm::int(rng.gen_range(-4..=4)), NumTerm::Var(x.clone())]))
        .collect();
    parts.push(NumTerm::int(rng.gen_range(-4..=4)));
    NumTerm::Add(parts)
}

/// Boolean combinations of linear atoms.
pub fn linear_formula<R: Rng>(rng: &mut R, nums: &[SymVar], depth: u32) -> Formula {
    if depth == 0 || rng.gen_bool(0.3) {
        return Formula::atom(*RELS.choose(rng).unwrap(), linear_term(rng, nums), NumTerm::int(rng.gen_range(-4..=4)));
    }
    let n = rng.gen_range(1..=3);
    match rng.gen_range(0..4) {
        0 => Formula::not(linear_formula(rng, nums, depth - 1)),
        1 => Formula::or((0..n).map(|_| linear_formula(rng, nums, depth - 1))),
        _ => Formula::and((0..n).map(|_| linear_formula(rng, nums, depth - 1))),
    }
}

/// What one random walk observed.
#[derive(Debug, Default)]
pub struct WalkReport {
    pub steps: usize,
    pub wf_checks: usize,
    /// Description of the first broken obligation, if any.
    pub failure: Option<String>,
}

/// Drives one derivation from `init` by picking random successors, mostly
/// structurally valid ones. Every successor must lower the measure, `wf` must
/// hold on every structurally valid state, and the walk must end in a normal
/// form within `max_steps`.
pub fn random_walk<R: Rng>(calc: &Calculus<'_>, rng: &mut R, max_steps: usize) -> WalkReport {
    let mut r = WalkReport::default();
    let mut s: RuntimeState = calc.init();
    if !calc.wf(&s) {
        r.failure = Some("wf fails at init".into());
        return r;
    }
    r.wf_checks += 1;
    loop {
        let succ = calc.successors(&s);
        if succ.is_empty() {
            if !calc.is_nf(&s) {
                r.failure = Some(format!("stuck outside NF after {} steps", r.steps));
            }
            return r;
        }
        if r.steps >= max_steps {
            r.failure = Some(format!("no NF within {max_steps} steps"));
            return r;
        }
        let m = s.measure();
        for n in &succ {
            if n.measure() >= m {
                r.failure = Some(format!("measure {:?} -> {:?} not decreasing", m, n.measure()));
                return r;
            }
            if calc.structurally_ok(n) {
                r.wf_checks += 1;
                if !calc.wf(n) {
                    r.failure = Some(format!("wf fails after step {}", r.steps + 1));
                    return r;
                }
            }
        }
        let ok: Vec<&RuntimeState> = succ.iter().filter(|n| calc.structurally_ok(n)).collect();
        let next = if !ok.is_empty() && rng.gen_bool(0.9) {
            (*ok.choose(rng).unwrap()).clone()
        } else {
            succ.choose(rng).unwrap().clone()
        };
        s = next;
        r.steps += 1;
    }
}
