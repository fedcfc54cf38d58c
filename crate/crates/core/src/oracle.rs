//! Brute-force reference semantics for differential testing.
//!
//! Object sets and reference values are enumerated directly as bitmasks,
//! sharing no code with the rank-based enumeration used by the calculus.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::calculus::Mode;
use crate::constraint::{eval, simp, Formula, Valuation};
use crate::engine::Solution;
use crate::model::{Graph, ObjectRecord, Oid, RoleId};
use crate::solver::{SatResult, Solver, SolverError};
use crate::spec::{HookKind, Spec};
use crate::structural::{check_partial_builtin, check_rules, Stage};

/// Candidate graphs the oracle is willing to enumerate.
pub const CANDIDATE_LIMIT: u128 = 10_000_000;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("scope too large for exhaustive enumeration: {0} candidate graphs (limit {CANDIDATE_LIMIT})")]
    ScopeTooLarge(u128),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleModel {
    pub graph: Graph,
    /// Conjunction of invariant hooks, replayed in identifier order.
    pub constraint: Formula,
    /// Disjunction of negated property hooks (check mode).
    pub violation_formula: Option<Formula>,
    pub witness: Option<Valuation>,
}

#[derive(Clone, Debug, Default)]
pub struct OracleResult {
    /// Sorted by canonical graph text.
    pub models: Vec<OracleModel>,
    pub candidates: u128,
}

fn subsets(items: &[Oid], lo: usize, hi: usize) -> Vec<BTreeSet<Oid>> {
    let n = items.len();
    let mut out = Vec::new();
    for mask in 0u64..(1u64 << n) {
        let k = mask.count_ones() as usize;
        if k >= lo && k <= hi {
            out.push((0..n).filter(|i| mask >> i & 1 == 1).map(|i| items[i].clone()).collect());
        }
    }
    out
}

fn count_subsets(n: usize, lo: usize, hi: usize) -> u128 {
    let mut total = 0u128;
    let mut c = 1u128;
    for k in 0..=n {
        if k >= lo && k <= hi {
            total += c;
        }
        c = c * (n - k) as u128 / (k + 1) as u128;
    }
    total
}

struct Slot {
    owner: Oid,
    role: RoleId,
    values: Vec<BTreeSet<Oid>>,
}

fn slots(spec: &Spec, objects: &BTreeSet<Oid>) -> Vec<Slot> {
    let mut out = Vec::new();
    for o in objects {
        let decl = spec.schema.class(o.class()).expect("declared class");
        for r in &decl.roles {
            let b = spec.role_bound(o.class(), &r.name);
            let pool: Vec<Oid> = objects.iter().filter(|x| x.class() == &r.target).cloned().collect();
            out.push(Slot {
                owner: o.clone(),
                role: r.name.clone(),
                values: subsets(&pool, b.lb as usize, b.ub as usize),
            });
        }
    }
    out
}

fn object_sets(spec: &Spec) -> Vec<BTreeSet<Oid>> {
    let mut acc: Vec<BTreeSet<Oid>> = vec![BTreeSet::new()];
    for (class, ids) in &spec.universe().per_class {
        let iv = spec.scope.class_bound(class);
        let choices = subsets(ids, iv.lo as usize, iv.hi as usize);
        let mut next = Vec::new();
        for base in &acc {
            for c in &choices {
                let mut s = base.clone();
                s.extend(c.iter().cloned());
                next.push(s);
            }
        }
        acc = next;
    }
    acc
}

fn candidate_count(spec: &Spec) -> u128 {
    object_sets(spec)
        .iter()
        .map(|objs| {
            objs.iter()
                .flat_map(|o| {
                    let decl = spec.schema.class(o.class()).expect("declared class");
                    decl.roles.iter().map(move |r| {
                        let b = spec.role_bound(o.class(), &r.name);
                        let n = objs.iter().filter(|x| x.class() == &r.target).count();
                        count_subsets(n, b.lb as usize, b.ub as usize)
                    })
                })
                .fold(1u128, |a, b| a.saturating_mul(b))
        })
        .fold(0u128, |a, b| a.saturating_add(b))
}

/// Invariant conjunction and property-violation disjunction of a graph.
pub fn graph_constraints(spec: &Spec, g: &Graph) -> (Formula, Formula) {
    let hooks = &spec.hooks;
    let mut inv = Vec::new();
    let mut viol = Vec::new();
    for rec in g.records() {
        inv.push(hooks.on_create(HookKind::Invariant, &rec.id));
        viol.push(Formula::not(hooks.on_create(HookKind::Property, &rec.id)));
    }
    for rec in g.records() {
        for (role, slot) in &rec.refs {
            let value = slot.committed().cloned().unwrap_or_default();
            inv.push(hooks.on_set_ref(HookKind::Invariant, &rec.id, role, &value));
            viol.push(Formula::not(hooks.on_set_ref(HookKind::Property, &rec.id, role, &value)));
        }
    }
    (simp(&Formula::and(inv)), simp(&Formula::or(viol)))
}

/// Every graph of the bounded semantics (find) or every counterexample
/// (check), with its constraint and a witness valuation.
pub fn enumerate_models(spec: &Spec, mode: Mode, solver: &mut Solver) -> Result<OracleResult, OracleError> {
    let candidates = candidate_count(spec);
    if candidates > CANDIDATE_LIMIT {
        return Err(OracleError::ScopeTooLarge(candidates));
    }
    let mut models = Vec::new();
    for objs in object_sets(spec) {
        let slots = slots(spec, &objs);
        if slots.iter().any(|s| s.values.is_empty()) {
            continue;
        }
        let mut base = Graph::new();
        for o in &objs {
            base.insert(ObjectRecord::skeleton(o.clone(), spec.schema.class(o.class()).unwrap()));
        }
        // Mixed-radix counter over the slot choices.
        let mut digits = vec![0usize; slots.len()];
        loop {
            let mut g = base.clone();
            for (s, d) in slots.iter().zip(&digits) {
                g.set_ref(&s.owner, &s.role, s.values[*d].clone());
            }
            if let Some(m) = judge(spec, mode, g, solver)? {
                models.push(m);
            }
            let mut i = 0;
            loop {
                if i == digits.len() {
                    break;
                }
                digits[i] += 1;
                if digits[i] < slots[i].values.len() {
                    break;
                }
                digits[i] = 0;
                i += 1;
            }
            if i == digits.len() {
                break;
            }
        }
    }
    models.sort_by_cached_key(|m| m.graph.canonical_text());
    Ok(OracleResult { models, candidates })
}

fn judge(spec: &Spec, mode: Mode, g: Graph, solver: &mut Solver) -> Result<Option<OracleModel>, OracleError> {
    if check_partial_builtin(spec, &g).is_some()
        || check_rules(spec, &g, Stage::Partial).is_some()
        || check_rules(spec, &g, Stage::Full).is_some()
    {
        return Ok(None);
    }
    let (inv, viol) = graph_constraints(spec, &g);
    let SatResult::Sat(w) = solver.is_sat(&inv)? else {
        return Ok(None);
    };
    match mode {
        Mode::Find => Ok(Some(OracleModel {
            graph: g,
            constraint: inv,
            violation_formula: None,
            witness: Some(w),
        })),
        Mode::Check => {
            if check_rules(spec, &g, Stage::Property).is_some() {
                return Ok(Some(OracleModel {
                    graph: g,
                    constraint: inv,
                    violation_formula: Some(viol),
                    witness: Some(w),
                }));
            }
            match solver.is_sat(&Formula::and([inv.clone(), viol.clone()]))? {
                SatResult::Sat(w) => Ok(Some(OracleModel {
                    graph: g,
                    constraint: inv,
                    violation_formula: Some(viol),
                    witness: Some(w),
                })),
                _ => Ok(None),
            }
        }
    }
}

/// Differences between an engine run and the oracle.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CompareReport {
    pub oracle_count: usize,
    pub engine_count: usize,
    /// In the oracle but not reported by the engine (completeness).
    pub missing: Vec<String>,
    /// Reported by the engine but not in the oracle (soundness).
    pub spurious: Vec<String>,
    /// Reported more than once by the engine.
    pub duplicated: Vec<String>,
    pub constraint_mismatch: Vec<String>,
    pub bad_witness: Vec<String>,
}

impl CompareReport {
    pub fn is_ok(&self) -> bool {
        self.missing.is_empty()
            && self.spurious.is_empty()
            && self.duplicated.is_empty()
            && self.constraint_mismatch.is_empty()
            && self.bad_witness.is_empty()
    }

    pub fn summary(&self) -> String {
        format!(
            "oracle={} engine={} missing={} spurious={} duplicated={} constraintMismatch={} badWitness={}",
            self.oracle_count,
            self.engine_count,
            self.missing.len(),
            self.spurious.len(),
            self.duplicated.len(),
            self.constraint_mismatch.len(),
            self.bad_witness.len()
        )
    }
}

pub fn compare(
    oracle: &OracleResult,
    solutions: &[Solution],
    solver: &mut Solver,
) -> Result<CompareReport, SolverError> {
    let mut report = CompareReport {
        oracle_count: oracle.models.len(),
        engine_count: solutions.len(),
        ..CompareReport::default()
    };
    let by_text: BTreeMap<String, &OracleModel> =
        oracle.models.iter().map(|m| (m.graph.canonical_text(), m)).collect();
    let mut seen = BTreeSet::new();
    for sol in solutions {
        let text = sol.graph.canonical_text();
        if !seen.insert(text.clone()) {
            report.duplicated.push(text.clone());
        }
        let Some(m) = by_text.get(&text) else {
            report.spurious.push(text);
            continue;
        };
        if !(solver.entails(&sol.phi, &m.constraint)? && solver.entails(&m.constraint, &sol.phi)?) {
            report.constraint_mismatch.push(text.clone());
        }
        if let Some(w) = &sol.witness {
            let target = match (&sol.violation, &sol.psi) {
                (None, Some(psi)) => Formula::and([sol.phi.clone(), psi.clone()]),
                _ => sol.phi.clone(),
            };
            if eval(&target, w) != Ok(true) {
                report.bad_witness.push(text);
            }
        }
    }
    for text in by_text.keys() {
        if !seen.contains(text) {
            report.missing.push(text.clone());
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{ceo_spec, parse};

    #[test]
    fn subset_counts_match_listing() {
        assert_eq!(count_subsets(5, 0, 5), 32);
        assert_eq!(count_subsets(4, 1, 2), 10);
        assert_eq!(subsets(&[], 0, 2).len(), 1);
    }

    #[test]
    fn zero_scope_gives_the_empty_graph_only() {
        let spec = parse("schema { class A { attr x : Int; } }\nbounds { class A [0..0]; }\n");
        let r = enumerate_models(&spec, Mode::Find, &mut Solver::internal()).unwrap();
        assert_eq!(r.models.len(), 1);
        assert!(r.models[0].graph.is_empty());
        let spec = parse("schema { class A { attr x : Int; } }\nbounds { class A [1..1]; }\nconstraints { onCreate A(X): i(X, x) < 0 and i(X, x) >= 0; }\n");
        let r = enumerate_models(&spec, Mode::Find, &mut Solver::internal()).unwrap();
        assert!(r.models.is_empty());
    }

    #[test]
    fn witnesses_satisfy_constraints() {
        let r = enumerate_models(&ceo_spec(), Mode::Find, &mut Solver::internal()).unwrap();
        assert!(!r.models.is_empty());
        for m in &r.models {
            assert_eq!(eval(&m.constraint, m.witness.as_ref().unwrap()), Ok(true));
        }
    }
}
