//! Runtime states and the construction rules.
//!
//! A derivation first decides, identifier by identifier, which objects exist
//! (generate or skip), then fills every reference role of every created
//! object by walking a rank cursor over that role's assignment domain
//! (choose or skip). Hooks fired by each creation and commitment are
//! conjoined into `phi`; in check mode the negated property hooks are
//! disjoined into `psi`.
//!
//! The switch between the two phases is applied as part of the step that
//! consumes the last fresh identifier (and by [`Calculus::init`] when the
//! universe is empty), so that every rule application strictly decreases
//! [`Measure`].

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::sync::Arc;

use num_bigint::BigUint;
use num_traits::Zero;
use thiserror::Error;

use crate::constraint::{simp, Formula, Valuation};
use crate::enumeration::{ranked_from_to, RankError, RankedDomain};
use crate::model::{ClassId, Graph, ObjectRecord, Oid, RefSlot, RoleId};
use crate::solver::{SatResult, Solver, SolverError};
use crate::spec::{HookKind, Spec};
use crate::structural::{check_partial_builtin, check_rules, Stage, Violation};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Phase {
    ObjectBuild,
    RefBuild,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    Find,
    Check,
}

/// A pending reference role with its rank cursor.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RefTask {
    pub owner: Oid,
    pub role: RoleId,
    pub target: ClassId,
    pub curr: BigUint,
    pub rem: BigUint,
}

impl RefTask {
    pub fn width(&self) -> BigUint {
        &self.rem + 1u32
    }
}

/// Construction event, kept only so that [`Calculus::wf`] can replay hooks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Event {
    Create(Oid),
    Commit(Oid, RoleId, BTreeSet<Oid>),
}

#[derive(Debug)]
struct Trace {
    event: Event,
    prev: Option<Arc<Trace>>,
}

/// Lexicographic termination measure `(|freshIds|, Σ width)`.
pub type Measure = (usize, BigUint);

#[derive(Clone, Debug)]
pub struct RuntimeState {
    pub phase: Phase,
    pub mode: Mode,
    pub graph: Graph,
    /// Per-class identifier lists in schema order; filtered to the taken
    /// identifiers once the reference phase starts.
    pub all_ids: Arc<Vec<(ClassId, Vec<Oid>)>>,
    fresh: Arc<[Oid]>,
    fresh_pos: usize,
    pub taken: BTreeSet<Oid>,
    pub missing: BTreeMap<ClassId, u32>,
    pub need: BTreeMap<ClassId, u32>,
    pub ref_pool: Vec<RefTask>,
    pub phi: Formula,
    /// Witness accumulator, present in check mode only.
    pub psi: Option<Formula>,
    trace: Option<Arc<Trace>>,
}

impl RuntimeState {
    pub fn fresh_ids(&self) -> &[Oid] {
        &self.fresh[self.fresh_pos..]
    }

    pub fn ids_of(&self, class: &ClassId) -> &[Oid] {
        self.all_ids
            .iter()
            .find(|(c, _)| c == class)
            .map(|(_, ids)| ids.as_slice())
            .unwrap_or(&[])
    }

    pub fn measure(&self) -> Measure {
        let width = self.ref_pool.iter().map(RefTask::width).sum();
        (self.fresh_ids().len(), width)
    }

    /// Events in the order they happened.
    pub fn events(&self) -> Vec<Event> {
        let mut out = Vec::new();
        let mut cur = self.trace.as_deref();
        while let Some(t) = cur {
            out.push(t.event.clone());
            cur = t.prev.as_deref();
        }
        out.reverse();
        out
    }

    fn record(&mut self, event: Event) {
        self.trace = Some(Arc::new(Trace {
            event,
            prev: self.trace.take(),
        }));
    }

    /// Exact dedup key: everything but the event trace.
    pub fn exact_key(&self) -> String {
        let mut k = format!("{:?}|{}|", self.phase, self.graph.canonical_text());
        for o in self.fresh_ids() {
            let _ = write!(k, "{o},");
        }
        k.push('|');
        for t in &self.ref_pool {
            let _ = write!(k, "{}.{}@{}+{};", t.owner, t.role, t.curr, t.rem);
        }
        let _ = write!(k, "|{}", self.phi);
        if let Some(psi) = &self.psi {
            let _ = write!(k, "|{psi}");
        }
        k
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum CalcError {
    #[error("rule {rule} does not apply in phase {phase:?}")]
    WrongPhase { rule: &'static str, phase: Phase },
    #[error("no fresh identifier left")]
    NoFreshId,
    #[error("cannot skip {oid}: missing={missing}, need={need}")]
    SkipGuard { oid: Oid, missing: u32, need: u32 },
    #[error("the reference pool is empty")]
    EmptyPool,
    #[error("no remaining rank for {owner}.{role}")]
    NoRemainingRank { owner: Oid, role: RoleId },
    #[error("empty assignment domain for {owner}.{role}")]
    EmptyDomain { owner: Oid, role: RoleId },
    #[error(transparent)]
    Rank(#[from] RankError),
}

/// Assignment selection, replaceable for fault-injection tests.
pub type ChoiceFn = fn(&RankedDomain, &BigUint) -> Result<BTreeSet<Oid>, RankError>;

/// Outcome of the acceptance test on a normal form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verdict {
    pub accepted: bool,
    /// Model of `phi` (find) or `phi ∧ psi` (check), when one was computed.
    pub witness: Option<Valuation>,
    /// Property pattern matched by the graph (check mode).
    pub violation: Option<Violation>,
}

impl Verdict {
    fn reject() -> Verdict {
        Verdict {
            accepted: false,
            witness: None,
            violation: None,
        }
    }
}

/// The rule set for one problem and mode.
#[derive(Clone, Copy)]
pub struct Calculus<'a> {
    pub spec: &'a Spec,
    pub mode: Mode,
    choice: ChoiceFn,
}

impl<'a> Calculus<'a> {
    pub fn new(spec: &'a Spec, mode: Mode) -> Self {
        Calculus {
            spec,
            mode,
            choice: ranked_from_to,
        }
    }

    pub fn with_choice(mut self, choice: ChoiceFn) -> Self {
        self.choice = choice;
        self
    }

    pub fn init(&self) -> RuntimeState {
        let u = self.spec.universe();
        let mut missing = BTreeMap::new();
        let mut need = BTreeMap::new();
        for c in &self.spec.schema.classes {
            missing.insert(c.name.clone(), self.spec.scope.class_bound(&c.name).lo);
            need.insert(c.name.clone(), self.spec.in_need(&c.name));
        }
        let mut s = RuntimeState {
            phase: Phase::ObjectBuild,
            mode: self.mode,
            graph: Graph::new(),
            all_ids: Arc::new(u.per_class.clone()),
            fresh: u.ordered.clone().into(),
            fresh_pos: 0,
            taken: BTreeSet::new(),
            missing,
            need,
            ref_pool: Vec::new(),
            phi: Formula::True,
            psi: (self.mode == Mode::Check).then_some(Formula::False),
            trace: None,
        };
        self.normalize(&mut s);
        s
    }

    /// Domain of a task over the state's current universe.
    pub fn domain(&self, s: &RuntimeState, task: &RefTask) -> RankedDomain {
        let b = self.spec.role_bound(task.owner.class(), &task.role);
        RankedDomain::new(s.ids_of(&task.target).to_vec(), b.lb as usize, b.ub as usize)
    }

    /// `U_max`, or `None` for an empty domain.
    fn max_rank(&self, s: &RuntimeState, task: &RefTask) -> Option<BigUint> {
        let size = self.domain(s, task).size();
        (!size.is_zero()).then(|| size - 1u32)
    }

    pub fn choice_ref(&self, s: &RuntimeState, task: &RefTask) -> Result<BTreeSet<Oid>, CalcError> {
        let d = self.domain(s, task);
        if d.size().is_zero() {
            return Err(CalcError::EmptyDomain {
                owner: task.owner.clone(),
                role: task.role.clone(),
            });
        }
        Ok((self.choice)(&d, &task.curr)?)
    }

    fn normalize(&self, s: &mut RuntimeState) {
        if s.phase == Phase::ObjectBuild && s.fresh_ids().is_empty() {
            self.phase_switch(s);
        }
    }

    /// Restricts the universe to the created objects and re-derives every
    /// task's budget against it. Tasks left with an empty domain get a zero
    /// budget and make the state dead (see [`Calculus::dead_task`]).
    pub fn phase_switch(&self, s: &mut RuntimeState) {
        debug_assert!(s.fresh_ids().is_empty());
        s.phase = Phase::RefBuild;
        let filtered: Vec<(ClassId, Vec<Oid>)> = s
            .all_ids
            .iter()
            .map(|(c, ids)| (c.clone(), ids.iter().filter(|o| s.taken.contains(o)).cloned().collect()))
            .collect();
        s.all_ids = Arc::new(filtered);
        let pool = std::mem::take(&mut s.ref_pool);
        s.ref_pool = pool
            .into_iter()
            .map(|mut t| {
                t.curr = BigUint::zero();
                t.rem = self.max_rank(s, &t).unwrap_or_default();
                t
            })
            .collect();
    }

    fn need_phase(&self, s: &RuntimeState, rule: &'static str, phase: Phase) -> Result<(), CalcError> {
        if s.phase != phase {
            return Err(CalcError::WrongPhase { rule, phase: s.phase });
        }
        Ok(())
    }

    pub fn obj_gen(&self, s: &RuntimeState) -> Result<RuntimeState, CalcError> {
        self.need_phase(s, "Obj-Gen", Phase::ObjectBuild)?;
        let oid = s.fresh_ids().first().cloned().ok_or(CalcError::NoFreshId)?;
        let class = oid.class().clone();
        let decl = self.spec.schema.class(&class).expect("identifier of a declared class");
        let mut n = s.clone();
        n.fresh_pos += 1;
        n.taken.insert(oid.clone());
        n.graph.insert(ObjectRecord::skeleton(oid.clone(), decl));
        for m in [&mut n.missing, &mut n.need] {
            if let Some(v) = m.get_mut(&class) {
                *v = v.saturating_sub(1);
            }
        }
        for r in &decl.roles {
            let mut t = RefTask {
                owner: oid.clone(),
                role: r.name.clone(),
                target: r.target.clone(),
                curr: BigUint::zero(),
                rem: BigUint::zero(),
            };
            t.rem = self.max_rank(s, &t).unwrap_or_default();
            n.ref_pool.push(t);
        }
        let hooks = &self.spec.hooks;
        n.phi = simp(&Formula::and([n.phi, hooks.on_create(HookKind::Invariant, &oid)]));
        if let Some(psi) = n.psi.take() {
            let viol = Formula::not(hooks.on_create(HookKind::Property, &oid));
            n.psi = Some(simp(&Formula::or([psi, viol])));
        }
        n.record(Event::Create(oid));
        self.normalize(&mut n);
        Ok(n)
    }

    pub fn can_skip_obj(&self, s: &RuntimeState) -> bool {
        match (s.phase, s.fresh_ids().first()) {
            (Phase::ObjectBuild, Some(o)) => {
                s.missing.get(o.class()).copied().unwrap_or(0) == 0 && s.need.get(o.class()).copied().unwrap_or(0) == 0
            }
            _ => false,
        }
    }

    pub fn obj_skip(&self, s: &RuntimeState) -> Result<RuntimeState, CalcError> {
        self.need_phase(s, "Obj-Skip", Phase::ObjectBuild)?;
        let oid = s.fresh_ids().first().cloned().ok_or(CalcError::NoFreshId)?;
        if !self.can_skip_obj(s) {
            return Err(CalcError::SkipGuard {
                missing: s.missing.get(oid.class()).copied().unwrap_or(0),
                need: s.need.get(oid.class()).copied().unwrap_or(0),
                oid,
            });
        }
        let mut n = s.clone();
        n.fresh_pos += 1;
        self.normalize(&mut n);
        Ok(n)
    }

    pub fn ref_choose(&self, s: &RuntimeState) -> Result<RuntimeState, CalcError> {
        self.need_phase(s, "Ref-Choose", Phase::RefBuild)?;
        let task = s.ref_pool.first().ok_or(CalcError::EmptyPool)?;
        let value = self.choice_ref(s, task)?;
        let mut n = s.clone();
        let task = n.ref_pool.remove(0);
        n.graph.set_ref(&task.owner, &task.role, value.clone());
        let hooks = &self.spec.hooks;
        let inv = hooks.on_set_ref(HookKind::Invariant, &task.owner, &task.role, &value);
        n.phi = simp(&Formula::and([n.phi, inv]));
        if let Some(psi) = n.psi.take() {
            let viol = Formula::not(hooks.on_set_ref(HookKind::Property, &task.owner, &task.role, &value));
            n.psi = Some(simp(&Formula::or([psi, viol])));
        }
        n.record(Event::Commit(task.owner, task.role, value));
        Ok(n)
    }

    pub fn ref_skip(&self, s: &RuntimeState) -> Result<RuntimeState, CalcError> {
        self.need_phase(s, "Ref-Skip", Phase::RefBuild)?;
        let task = s.ref_pool.first().ok_or(CalcError::EmptyPool)?;
        if task.rem.is_zero() {
            return Err(CalcError::NoRemainingRank {
                owner: task.owner.clone(),
                role: task.role.clone(),
            });
        }
        let mut n = s.clone();
        let t = &mut n.ref_pool[0];
        t.curr += 1u32;
        t.rem -= 1u32;
        Ok(n)
    }

    /// All one-step successors in rule order: generate before skip, choose
    /// before skip.
    pub fn successors(&self, s: &RuntimeState) -> Vec<RuntimeState> {
        let mut out = Vec::with_capacity(2);
        match s.phase {
            Phase::ObjectBuild => {
                if let Ok(n) = self.obj_gen(s) {
                    out.push(n);
                }
                if let Ok(n) = self.obj_skip(s) {
                    out.push(n);
                }
            }
            Phase::RefBuild => {
                if let Ok(n) = self.ref_choose(s) {
                    out.push(n);
                }
                if let Ok(n) = self.ref_skip(s) {
                    out.push(n);
                }
            }
        }
        out
    }

    pub fn is_nf(&self, s: &RuntimeState) -> bool {
        match s.phase {
            Phase::ObjectBuild => false,
            Phase::RefBuild => match s.ref_pool.first() {
                None => true,
                Some(t) => t.rem.is_zero() && self.domain(s, t).size().is_zero(),
            },
        }
    }

    /// First task of the reference phase whose domain is empty.
    pub fn dead_task<'s>(&self, s: &'s RuntimeState) -> Option<&'s RefTask> {
        if s.phase != Phase::RefBuild {
            return None;
        }
        s.ref_pool.iter().find(|t| self.domain(s, t).size().is_zero())
    }

    /// Structural half of admissibility.
    pub fn structurally_ok(&self, s: &RuntimeState) -> bool {
        self.dead_task(s).is_none()
            && check_partial_builtin(self.spec, &s.graph).is_none()
            && check_rules(self.spec, &s.graph, Stage::Partial).is_none()
    }

    /// Admissibility. With `solver = None` the satisfiability conjunct is
    /// dropped; an unknown answer never rejects.
    pub fn admissible(&self, s: &RuntimeState, solver: Option<&mut Solver>) -> Result<bool, SolverError> {
        if !self.structurally_ok(s) {
            return Ok(false);
        }
        match solver {
            None => Ok(true),
            Some(sv) => Ok(!sv.is_sat(&s.phi)?.is_unsat()),
        }
    }

    /// Acceptance of a state as a solution (find) or counterexample (check).
    pub fn accept(&self, s: &RuntimeState, mut solver: Option<&mut Solver>) -> Result<Verdict, SolverError> {
        if !self.is_nf(s) || !self.structurally_ok(s) {
            return Ok(Verdict::reject());
        }
        let mut witness = None;
        if let Some(sv) = solver.as_deref_mut() {
            match sv.is_sat(&s.phi)? {
                SatResult::Unsat => return Ok(Verdict::reject()),
                SatResult::Sat(m) => witness = Some(m),
                SatResult::Unknown(_) => {}
            }
        }
        if check_rules(self.spec, &s.graph, Stage::Full).is_some() {
            return Ok(Verdict::reject());
        }
        if self.mode == Mode::Find {
            return Ok(Verdict {
                accepted: true,
                witness,
                violation: None,
            });
        }
        if let Some(v) = check_rules(self.spec, &s.graph, Stage::Property) {
            return Ok(Verdict {
                accepted: true,
                witness,
                violation: Some(v),
            });
        }
        let Some(sv) = solver else {
            return Ok(Verdict::reject());
        };
        let psi = s.psi.clone().unwrap_or(Formula::False);
        match sv.is_sat(&Formula::and([s.phi.clone(), psi]))? {
            SatResult::Sat(m) => Ok(Verdict {
                accepted: true,
                witness: Some(m),
                violation: None,
            }),
            _ => Ok(Verdict::reject()),
        }
    }

    /// Configuration invariants plus hook replay of the event trace.
    pub fn wf(&self, s: &RuntimeState) -> bool {
        self.ok_conf(s) && self.ok_constraint(s)
    }

    fn ok_conf(&self, s: &RuntimeState) -> bool {
        if check_partial_builtin(self.spec, &s.graph).is_some()
            || check_rules(self.spec, &s.graph, Stage::Partial).is_some()
        {
            return false;
        }
        let graph_ids: BTreeSet<&Oid> = s.graph.ids().collect();
        if graph_ids != s.taken.iter().collect() || s.fresh_ids().iter().any(|o| s.taken.contains(o)) {
            return false;
        }
        let pending: BTreeSet<(&Oid, &RoleId)> = s.ref_pool.iter().map(|t| (&t.owner, &t.role)).collect();
        if pending.len() != s.ref_pool.len() {
            return false;
        }
        for rec in s.graph.records() {
            for (role, slot) in &rec.refs {
                if pending.contains(&(&rec.id, role)) == slot.is_committed() {
                    return false;
                }
            }
        }
        match s.phase {
            Phase::ObjectBuild => s.graph.records().all(|r| r.refs.iter().all(|(_, sl)| *sl == RefSlot::Uncommitted)),
            Phase::RefBuild => {
                s.fresh_ids().is_empty()
                    && s.all_ids.iter().all(|(_, ids)| ids.iter().all(|o| s.taken.contains(o)))
                    && s.ref_pool.iter().all(|t| match self.max_rank(s, t) {
                        Some(u) => &t.curr + &t.rem == u,
                        None => t.curr.is_zero() && t.rem.is_zero(),
                    })
            }
        }
    }

    fn ok_constraint(&self, s: &RuntimeState) -> bool {
        let hooks = &self.spec.hooks;
        let mut phi = Vec::new();
        let mut viol = Vec::new();
        for e in s.events() {
            match e {
                Event::Create(o) => {
                    phi.push(hooks.on_create(HookKind::Invariant, &o));
                    viol.push(Formula::not(hooks.on_create(HookKind::Property, &o)));
                }
                Event::Commit(o, r, v) => {
                    phi.push(hooks.on_set_ref(HookKind::Invariant, &o, &r, &v));
                    viol.push(Formula::not(hooks.on_set_ref(HookKind::Property, &o, &r, &v)));
                }
            }
        }
        let phi_ok = simp(&Formula::and(phi)) == s.phi;
        let psi_ok = match (&s.psi, self.mode) {
            (Some(psi), Mode::Check) => simp(&Formula::or(viol)) == *psi,
            (None, Mode::Find) => true,
            _ => false,
        };
        phi_ok && psi_ok
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;
    use crate::fixtures::{ceo_check_spec, ceo_spec, oid};

    fn names(ids: &[Oid]) -> Vec<&str> {
        ids.iter().map(Oid::name).collect()
    }

    #[test]
    fn init_counts() {
        let spec = ceo_spec();
        let s = Calculus::new(&spec, Mode::Find).init();
        assert_eq!(names(s.fresh_ids()), ["c1", "p1", "p2", "e1", "e2"]);
        let get = |m: &BTreeMap<ClassId, u32>, c: &str| m[&ClassId::new(c)];
        assert_eq!((get(&s.missing, "Company"), get(&s.missing, "Employee"), get(&s.missing, "Project")), (1, 2, 0));
        assert_eq!((get(&s.need, "Company"), get(&s.need, "Employee"), get(&s.need, "Project")), (0, 1, 0));
        assert_eq!(s.measure(), (5, BigUint::zero()));
        assert!(s.psi.is_none());
        assert!(Calculus::new(&spec, Mode::Find).wf(&s));
        let c = ceo_check_spec();
        assert_eq!(Calculus::new(&c, Mode::Check).init().psi, Some(Formula::False));
    }

    #[test]
    fn first_step_creates_company() {
        let spec = ceo_spec();
        let k = Calculus::new(&spec, Mode::Find);
        let s = k.init();
        let succ = k.successors(&s);
        assert_eq!(succ.len(), 1);
        let n = &succ[0];
        assert_eq!(n.graph.canonical_text(), "c1:Company{ceo=?,projects=?}");
        assert_eq!(n.ref_pool.len(), 2);
        assert_eq!(n.missing[&ClassId::new("Company")], 0);
        assert!(k.obj_skip(&s).is_err());
    }

    #[test]
    fn employee_creation_adds_level_range() {
        let spec = ceo_spec();
        let k = Calculus::new(&spec, Mode::Find);
        let mut s = k.init();
        // c1 gen, p1 skip, p2 skip, e1 gen.
        s = k.obj_gen(&s).unwrap();
        s = k.obj_skip(&s).unwrap();
        s = k.obj_skip(&s).unwrap();
        s = k.obj_gen(&s).unwrap();
        assert_eq!(s.phi.to_string(), simp(&spec.hooks.on_create(HookKind::Invariant, &oid("e1"))).to_string());
        assert!(s.phi.to_string().contains("i(e1,level)"));
        // Employee lower bound is 2 so e2 cannot be skipped.
        assert!(k.obj_skip(&s).is_err());
        s = k.obj_gen(&s).unwrap();
        assert_eq!(s.phase, Phase::RefBuild);
        // Projects domain over no created projects is exactly {∅}.
        let t = &s.ref_pool[1];
        assert_eq!((t.role.as_str(), t.rem.clone()), ("projects", BigUint::zero()));
        assert!(k.wf(&s));
    }

    #[test]
    fn skipping_projects_is_allowed_after_company() {
        let spec = ceo_spec();
        let k = Calculus::new(&spec, Mode::Find);
        let s = k.obj_gen(&k.init()).unwrap();
        assert_eq!(k.successors(&s).len(), 2);
    }

    #[test]
    fn commits_fire_reference_hooks() {
        let spec = ceo_spec();
        let k = Calculus::new(&spec, Mode::Find);
        let mut s = k.init();
        for step in ["gen", "skip", "skip", "gen", "gen"] {
            s = if step == "gen" { k.obj_gen(&s) } else { k.obj_skip(&s) }.unwrap();
        }
        // ceo: [1..1] over [e1,e2]; rank 0 is {e1}.
        let before = s.measure();
        s = k.ref_choose(&s).unwrap();
        assert!(s.measure() < before);
        assert!(s.phi.to_string().contains("(= i(e1,level) 0)") || s.phi.to_string().contains("i(e1,level)"));
        // projects = {}
        s = k.ref_choose(&s).unwrap();
        // manager(e1): rank 0 is ∅, rank 1 is {e1}, rank 2 is {e2}.
        let head = &s.ref_pool[0];
        assert_eq!((head.curr.clone(), head.rem.clone()), (BigUint::zero(), BigUint::from(2u32)));
        let skipped = k.ref_skip(&s).unwrap();
        assert_eq!(skipped.ref_pool[0].curr, BigUint::one());
        let skipped = k.ref_skip(&skipped).unwrap();
        let with_mgr = k.ref_choose(&skipped).unwrap();
        assert!(with_mgr.phi.to_string().contains("i(e2,level)"));
        let phi_before = s.phi.clone();
        let empty = k.ref_choose(&s).unwrap();
        assert_eq!(empty.phi, phi_before);
        assert!(k.wf(&empty) && k.wf(&with_mgr));
    }

    #[test]
    fn ref_skip_requires_budget() {
        let spec = ceo_spec();
        let k = Calculus::new(&spec, Mode::Find);
        let mut s = k.init();
        for step in ["gen", "skip", "skip", "gen", "gen"] {
            s = if step == "gen" { k.obj_gen(&s) } else { k.obj_skip(&s) }.unwrap();
        }
        s = k.ref_skip(&s).unwrap();
        assert_eq!(
            k.ref_skip(&s).unwrap_err(),
            CalcError::NoRemainingRank {
                owner: oid("c1"),
                role: RoleId::new("ceo")
            }
        );
        assert_eq!(k.successors(&s).len(), 1);
    }

    #[test]
    fn empty_schema_is_immediately_normal() {
        let spec = crate::fixtures::parse("schema { }\nbounds { }\n");
        let k = Calculus::new(&spec, Mode::Find);
        let s = k.init();
        assert!(k.is_nf(&s));
        assert!(k.successors(&s).is_empty());
    }

    #[test]
    fn faulty_choice_breaks_wf() {
        fn always_empty(_: &RankedDomain, _: &BigUint) -> Result<BTreeSet<Oid>, RankError> {
            Ok(BTreeSet::new())
        }
        let spec = ceo_spec();
        let k = Calculus::new(&spec, Mode::Find).with_choice(always_empty);
        let mut s = k.init();
        for step in ["gen", "skip", "skip", "gen", "gen"] {
            s = if step == "gen" { k.obj_gen(&s) } else { k.obj_skip(&s) }.unwrap();
        }
        // ceo = ∅ violates the [1..1] bound.
        let bad = k.ref_choose(&s).unwrap();
        assert!(!k.wf(&bad));
    }
}
