//! Built-in backend: case splitting over disjunctions, boolean variables
//! and disequalities, with each leaf conjunction decided exactly by
//! [`linear::solve`].

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::{One, Zero};

use super::linear::{self, Constraint, Kind, Lin};
use super::{Backend, SatResult, SolverError};
use crate::constraint::{eval, simp, Formula, NumTerm, Rel, SymVar, Valuation, Value};
use crate::model::Sort;

#[derive(Default)]
struct Vars {
    index: BTreeMap<SymVar, usize>,
    order: Vec<SymVar>,
}

impl Vars {
    fn id(&mut self, v: &SymVar) -> usize {
        if let Some(i) = self.index.get(v) {
            return *i;
        }
        let i = self.order.len();
        self.index.insert(v.clone(), i);
        self.order.push(v.clone());
        i
    }
}

fn linearize(t: &NumTerm, vars: &mut Vars) -> Result<Lin, SolverError> {
    Ok(match t {
        NumTerm::Int(n) => Lin::constant(BigRational::from_integer(n.clone())),
        NumTerm::Rat(q) => Lin::constant(q.clone()),
        NumTerm::Var(v) => Lin::var(vars.id(v)),
        NumTerm::Neg(t) => linearize(t, vars)?.scale(&-BigRational::one()),
        NumTerm::Add(ts) => {
            let mut acc = Lin::constant(BigRational::zero());
            for t in ts {
                acc = acc.add(&linearize(t, vars)?);
            }
            acc
        }
        NumTerm::Mul(ts) => {
            let mut acc = Lin::constant(BigRational::one());
            for t in ts {
                let l = linearize(t, vars)?;
                acc = match (acc.as_constant(), l.as_constant()) {
                    (Some(k), _) => l.scale(&k.clone()),
                    (_, Some(k)) => acc.scale(&k.clone()),
                    _ => return Err(SolverError::Nonlinear(t.to_string())),
                };
            }
            acc
        }
    })
}

/// `lhs rel rhs` as `expr ⋈ 0`. Disequalities are split by the caller.
fn constraint(rel: Rel, a: &NumTerm, b: &NumTerm, vars: &mut Vars) -> Result<Constraint, SolverError> {
    let la = linearize(a, vars)?;
    let lb = linearize(b, vars)?;
    let minus = |x: Lin, y: Lin| x.add(&y.scale(&-BigRational::one()));
    let (lin, kind) = match rel {
        Rel::Lt => (minus(lb, la), Kind::Gt),
        Rel::Le => (minus(lb, la), Kind::Ge),
        Rel::Gt => (minus(la, lb), Kind::Gt),
        Rel::Ge => (minus(la, lb), Kind::Ge),
        Rel::Eq => (minus(la, lb), Kind::Eq),
        Rel::Ne => unreachable!("disequalities are split before linearization"),
    };
    Ok(Constraint { lin, kind })
}

struct Search {
    vars: Vars,
    is_int: Vec<bool>,
}

type Partial = (Vec<Constraint>, BTreeMap<SymVar, bool>);

impl Search {
    fn feasible(&self, lits: &[Constraint]) -> Option<BTreeMap<usize, BigRational>> {
        linear::solve(lits, &self.is_int)
    }

    fn sync_sorts(&mut self) {
        while self.is_int.len() < self.vars.order.len() {
            let v = &self.vars.order[self.is_int.len()];
            self.is_int.push(v.kind == Sort::Int);
        }
    }

    fn run(
        &mut self,
        mut pending: Vec<Formula>,
        (mut lits, mut bools): Partial,
    ) -> Result<Option<(BTreeMap<usize, BigRational>, BTreeMap<SymVar, bool>)>, SolverError> {
        while let Some(f) = pending.pop() {
            match f {
                Formula::True => {}
                Formula::False => return Ok(None),
                Formula::BoolVar(v) => {
                    if bools.insert(v, true) == Some(false) {
                        return Ok(None);
                    }
                }
                Formula::Not(g) => match *g {
                    Formula::BoolVar(v) => {
                        if bools.insert(v, false) == Some(true) {
                            return Ok(None);
                        }
                    }
                    // Negations are pushed inward by the canonicalizer.
                    other => pending.push(simp(&Formula::Not(Box::new(other)))),
                },
                Formula::Atom(Rel::Ne, a, b) => {
                    pending.push(Formula::Or(vec![
                        Formula::Atom(Rel::Lt, a.clone(), b.clone()),
                        Formula::Atom(Rel::Gt, a, b),
                    ]));
                }
                Formula::Atom(rel, a, b) => {
                    lits.push(constraint(rel, &a, &b, &mut self.vars)?);
                    self.sync_sorts();
                }
                Formula::And(gs) => pending.extend(gs),
                Formula::Or(gs) => {
                    if self.feasible(&lits).is_none() {
                        return Ok(None);
                    }
                    for g in gs {
                        let mut branch = pending.clone();
                        branch.push(g);
                        if let Some(found) = self.run(branch, (lits.clone(), bools.clone()))? {
                            return Ok(Some(found));
                        }
                    }
                    return Ok(None);
                }
            }
        }
        Ok(self.feasible(&lits).map(|m| (m, bools)))
    }
}

/// Decides `f` exactly; products of two non-constant terms are rejected.
pub fn decide(f: &Formula) -> Result<SatResult, SolverError> {
    let f = simp(f);
    let mut search = Search {
        vars: Vars::default(),
        is_int: Vec::new(),
    };
    let Some((nums, bools)) = search.run(vec![f.clone()], (Vec::new(), BTreeMap::new()))? else {
        return Ok(SatResult::Unsat);
    };
    let mut model = Valuation::new();
    for (i, v) in search.vars.order.iter().enumerate() {
        let q = nums.get(&i).cloned().unwrap_or_else(BigRational::zero);
        let value = match v.kind {
            Sort::Int => Value::Int(q.to_integer()),
            _ => Value::Real(q),
        };
        model.insert(v.clone(), value);
    }
    for (v, b) in bools {
        model.insert(v, Value::Bool(b));
    }
    for v in f.free_vars() {
        model.entry(v.clone()).or_insert_with(|| Value::default_for(v.kind));
    }
    match eval(&f, &model) {
        Ok(true) => Ok(SatResult::Sat(model)),
        _ => Err(SolverError::Internal(format!("model check failed for {f}"))),
    }
}

/// Stateless backend wrapping [`decide`].
#[derive(Clone, Copy, Debug, Default)]
pub struct InternalBackend;

impl Backend for InternalBackend {
    fn check(&mut self, f: &Formula) -> Result<SatResult, SolverError> {
        decide(f)
    }
}
