//! Quantifier-free constraints over symbolic attribute variables.
//!
//! Terms and formulas are generic over the variable type so that hook
//! templates (whose owners are placeholders) share the representation and
//! the canonicalizer with ground constraints over [`SymVar`].

mod simp;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::model::{AttrName, Oid, Sort};

pub use simp::{simp, simp_term};

/// Symbolic attribute variable `i(o,a)`, `b(o,a)` or `r(o,a)`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SymVar {
    pub kind: Sort,
    pub owner: Oid,
    pub attr: AttrName,
}

impl SymVar {
    pub fn new(kind: Sort, owner: Oid, attr: impl Into<AttrName>) -> Self {
        SymVar {
            kind,
            owner,
            attr: attr.into(),
        }
    }

    pub fn int(owner: Oid, attr: &str) -> Self {
        Self::new(Sort::Int, owner, AttrName::new(attr))
    }

    pub fn real(owner: Oid, attr: &str) -> Self {
        Self::new(Sort::Real, owner, AttrName::new(attr))
    }

    pub fn boolean(owner: Oid, attr: &str) -> Self {
        Self::new(Sort::Bool, owner, AttrName::new(attr))
    }
}

pub(crate) fn sort_letter(kind: Sort) -> char {
    match kind {
        Sort::Int => 'i',
        Sort::Bool => 'b',
        Sort::Real => 'r',
    }
}

impl fmt::Display for SymVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({},{})", sort_letter(self.kind), self.owner, self.attr)
    }
}

impl fmt::Debug for SymVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Anything that can stand in a variable position.
pub trait Variable: Clone + Ord + fmt::Display {
    fn sort(&self) -> Sort;
}

impl Variable for SymVar {
    fn sort(&self) -> Sort {
        self.kind
    }
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum NumTerm<V = SymVar> {
    Int(BigInt),
    Rat(BigRational),
    Var(V),
    Neg(Box<NumTerm<V>>),
    Add(Vec<NumTerm<V>>),
    Mul(Vec<NumTerm<V>>),
}

impl<V> NumTerm<V> {
    pub fn int(n: i64) -> Self {
        NumTerm::Int(BigInt::from(n))
    }

    pub fn is_const(&self) -> bool {
        matches!(self, NumTerm::Int(_) | NumTerm::Rat(_))
    }

    pub fn map_vars<W>(&self, f: &mut impl FnMut(&V) -> W) -> NumTerm<W> {
        match self {
            NumTerm::Int(n) => NumTerm::Int(n.clone()),
            NumTerm::Rat(q) => NumTerm::Rat(q.clone()),
            NumTerm::Var(v) => NumTerm::Var(f(v)),
            NumTerm::Neg(t) => NumTerm::Neg(Box::new(t.map_vars(f))),
            NumTerm::Add(ts) => NumTerm::Add(ts.iter().map(|t| t.map_vars(f)).collect()),
            NumTerm::Mul(ts) => NumTerm::Mul(ts.iter().map(|t| t.map_vars(f)).collect()),
        }
    }

    fn visit_vars<'a>(&'a self, f: &mut impl FnMut(&'a V)) {
        match self {
            NumTerm::Int(_) | NumTerm::Rat(_) => {}
            NumTerm::Var(v) => f(v),
            NumTerm::Neg(t) => t.visit_vars(f),
            NumTerm::Add(ts) | NumTerm::Mul(ts) => ts.iter().for_each(|t| t.visit_vars(f)),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Rel {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl Rel {
    pub fn negate(self) -> Rel {
        match self {
            Rel::Lt => Rel::Ge,
            Rel::Le => Rel::Gt,
            Rel::Gt => Rel::Le,
            Rel::Ge => Rel::Lt,
            Rel::Eq => Rel::Ne,
            Rel::Ne => Rel::Eq,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Rel::Lt => "<",
            Rel::Le => "<=",
            Rel::Gt => ">",
            Rel::Ge => ">=",
            Rel::Eq => "=",
            Rel::Ne => "!=",
        }
    }

    pub fn holds<T: Ord>(self, lhs: &T, rhs: &T) -> bool {
        match self {
            Rel::Lt => lhs < rhs,
            Rel::Le => lhs <= rhs,
            Rel::Gt => lhs > rhs,
            Rel::Ge => lhs >= rhs,
            Rel::Eq => lhs == rhs,
            Rel::Ne => lhs != rhs,
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Formula<V = SymVar> {
    True,
    False,
    BoolVar(V),
    Not(Box<Formula<V>>),
    Atom(Rel, NumTerm<V>, NumTerm<V>),
    And(Vec<Formula<V>>),
    Or(Vec<Formula<V>>),
}

impl<V> Formula<V> {
    fn tag(&self) -> u8 {
        match self {
            Formula::True => 0,
            Formula::False => 1,
            Formula::BoolVar(_) => 2,
            Formula::Not(_) => 3,
            Formula::Atom(..) => 4,
            Formula::And(_) => 5,
            Formula::Or(_) => 6,
        }
    }

    pub fn atom(rel: Rel, lhs: NumTerm<V>, rhs: NumTerm<V>) -> Self {
        Formula::Atom(rel, lhs, rhs)
    }

    pub fn not(f: Formula<V>) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn and(fs: impl IntoIterator<Item = Formula<V>>) -> Self {
        Formula::And(fs.into_iter().collect())
    }

    pub fn or(fs: impl IntoIterator<Item = Formula<V>>) -> Self {
        Formula::Or(fs.into_iter().collect())
    }

    pub fn map_vars<W>(&self, f: &mut impl FnMut(&V) -> W) -> Formula<W> {
        match self {
            Formula::True => Formula::True,
            Formula::False => Formula::False,
            Formula::BoolVar(v) => Formula::BoolVar(f(v)),
            Formula::Not(g) => Formula::Not(Box::new(g.map_vars(f))),
            Formula::Atom(r, a, b) => Formula::Atom(*r, a.map_vars(f), b.map_vars(f)),
            Formula::And(gs) => Formula::And(gs.iter().map(|g| g.map_vars(f)).collect()),
            Formula::Or(gs) => Formula::Or(gs.iter().map(|g| g.map_vars(f)).collect()),
        }
    }

    pub fn visit_vars<'a>(&'a self, f: &mut impl FnMut(&'a V)) {
        match self {
            Formula::True | Formula::False => {}
            Formula::BoolVar(v) => f(v),
            Formula::Not(g) => g.visit_vars(f),
            Formula::Atom(_, a, b) => {
                a.visit_vars(f);
                b.visit_vars(f);
            }
            Formula::And(gs) | Formula::Or(gs) => gs.iter().for_each(|g| g.visit_vars(f)),
        }
    }
}

/// Literal order used for sorting operands: constructor tag first, atoms by
/// (lhs, rhs, relation), everything else lexicographically on children.
impl<V: Ord> Ord for Formula<V> {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        match (self, other) {
            (Formula::BoolVar(a), Formula::BoolVar(b)) => a.cmp(b),
            (Formula::Not(a), Formula::Not(b)) => a.cmp(b),
            (Formula::Atom(r1, a1, b1), Formula::Atom(r2, a2, b2)) => {
                a1.cmp(a2).then_with(|| b1.cmp(b2)).then_with(|| r1.cmp(r2))
            }
            (Formula::And(a), Formula::And(b)) | (Formula::Or(a), Formula::Or(b)) => a.cmp(b),
            _ => self.tag().cmp(&other.tag()),
        }
    }
}

impl<V: Ord> PartialOrd for Formula<V> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl<V: Ord + Clone> Formula<V> {
    pub fn free_vars(&self) -> BTreeSet<V> {
        let mut out = BTreeSet::new();
        self.visit_vars(&mut |v| {
            out.insert(v.clone());
        });
        out
    }
}

impl Formula<SymVar> {
    /// Replaces every variable owner per `sigma` and re-canonicalizes.
    /// Owners missing from `sigma` are kept.
    pub fn rename_oids(&self, sigma: &BTreeMap<Oid, Oid>) -> Formula {
        let renamed = self.map_vars(&mut |v: &SymVar| SymVar {
            kind: v.kind,
            owner: sigma.get(&v.owner).cloned().unwrap_or_else(|| v.owner.clone()),
            attr: v.attr.clone(),
        });
        simp(&renamed)
    }
}

pub(crate) fn fmt_rational(q: &BigRational, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if q.denom().is_one() {
        write!(f, "{}", q.numer())
    } else {
        write!(f, "{}/{}", q.numer(), q.denom())
    }
}

impl<V: fmt::Display> fmt::Display for NumTerm<V> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NumTerm::Int(n) => write!(f, "{n}"),
            NumTerm::Rat(q) => {
                // Rationals always carry a denominator so they never read back as integers.
                write!(f, "{}/{}", q.numer(), q.denom())
            }
            NumTerm::Var(v) => write!(f, "{v}"),
            NumTerm::Neg(t) => write!(f, "(- {t})"),
            NumTerm::Add(ts) => write_nary(f, "+", ts),
            NumTerm::Mul(ts) => write_nary(f, "*", ts),
        }
    }
}

fn write_nary<T: fmt::Display>(f: &mut fmt::Formatter<'_>, op: &str, items: &[T]) -> fmt::Result {
    write!(f, "({op}")?;
    for item in items {
        write!(f, " {item}")?;
    }
    write!(f, ")")
}

/// Prefix rendering, e.g. `(and (>= i(e1,level) 0) (< i(e1,level) 3))`.
/// On canonical formulas this text serves as an exact identity key.
impl<V: fmt::Display> fmt::Display for Formula<V> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => write!(f, "true"),
            Formula::False => write!(f, "false"),
            Formula::BoolVar(v) => write!(f, "{v}"),
            Formula::Not(g) => write!(f, "(not {g})"),
            Formula::Atom(r, a, b) => write!(f, "({} {a} {b})", r.symbol()),
            Formula::And(gs) => write_nary(f, "and", gs),
            Formula::Or(gs) => write_nary(f, "or", gs),
        }
    }
}

/// Ground value of an attribute variable.
#[derive(Clone, PartialEq, Eq, Debug, Hash)]
pub enum Value {
    Int(BigInt),
    Real(BigRational),
    Bool(bool),
}

impl Value {
    pub fn sort(&self) -> Sort {
        match self {
            Value::Int(_) => Sort::Int,
            Value::Real(_) => Sort::Real,
            Value::Bool(_) => Sort::Bool,
        }
    }

    /// Default value used for variables left unconstrained by a query.
    pub fn default_for(sort: Sort) -> Value {
        match sort {
            Sort::Int => Value::Int(BigInt::zero()),
            Sort::Real => Value::Real(BigRational::zero()),
            Sort::Bool => Value::Bool(false),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(n) => write!(f, "{n}"),
            Value::Real(q) => fmt_rational(q, f),
            Value::Bool(b) => write!(f, "{b}"),
        }
    }
}

/// Assignment of ground values to symbolic variables.
pub type Valuation = BTreeMap<SymVar, Value>;

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("no value assigned to {0}")]
    Unassigned(SymVar),
    #[error("value {value} assigned to {var} has the wrong sort")]
    SortMismatch { var: SymVar, value: Value },
}

fn eval_term(t: &NumTerm, rho: &Valuation) -> Result<BigRational, EvalError> {
    Ok(match t {
        NumTerm::Int(n) => BigRational::from_integer(n.clone()),
        NumTerm::Rat(q) => q.clone(),
        NumTerm::Var(v) => match rho.get(v) {
            None => return Err(EvalError::Unassigned(v.clone())),
            Some(Value::Int(n)) if v.kind == Sort::Int => BigRational::from_integer(n.clone()),
            Some(Value::Real(q)) if v.kind == Sort::Real => q.clone(),
            Some(other) => {
                return Err(EvalError::SortMismatch {
                    var: v.clone(),
                    value: other.clone(),
                })
            }
        },
        NumTerm::Neg(t) => -eval_term(t, rho)?,
        NumTerm::Add(ts) => {
            let mut acc = BigRational::zero();
            for t in ts {
                acc += eval_term(t, rho)?;
            }
            acc
        }
        NumTerm::Mul(ts) => {
            let mut acc = BigRational::one();
            for t in ts {
                acc *= eval_term(t, rho)?;
            }
            acc
        }
    })
}

/// Evaluates `f` under `rho` with exact rational arithmetic.
pub fn eval(f: &Formula, rho: &Valuation) -> Result<bool, EvalError> {
    Ok(match f {
        Formula::True => true,
        Formula::False => false,
        Formula::BoolVar(v) => match rho.get(v) {
            Some(Value::Bool(b)) => *b,
            Some(other) => {
                return Err(EvalError::SortMismatch {
                    var: v.clone(),
                    value: other.clone(),
                })
            }
            None => return Err(EvalError::Unassigned(v.clone())),
        },
        Formula::Not(g) => !eval(g, rho)?,
        Formula::Atom(r, a, b) => r.holds(&eval_term(a, rho)?, &eval_term(b, rho)?),
        Formula::And(gs) => {
            for g in gs {
                if !eval(g, rho)? {
                    return Ok(false);
                }
            }
            true
        }
        Formula::Or(gs) => {
            for g in gs {
                if eval(g, rho)? {
                    return Ok(true);
                }
            }
            false
        }
    })
}
