//! Structural error predicates over partial and complete graphs.
//!
//! A predicate reports a [`Violation`] when its graph is erroneous. Built-in
//! well-formedness is checked first, then user pattern rules and acyclicity
//! declarations for the requested stage.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::model::{ClassId, Graph, Oid, RefSlot, RoleId};
use crate::spec::Spec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stage {
    /// Checked on every partial graph; must be monotonic.
    Partial,
    /// Checked on complete candidates only.
    Full,
    /// Check-mode graph property; a match is a counterexample.
    Property,
}

impl Stage {
    pub fn keyword(self) -> &'static str {
        match self {
            Stage::Partial => "partial",
            Stage::Full => "full",
            Stage::Property => "property",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RoleAtom {
    /// The role is committed to the empty set.
    Empty(RoleId),
    /// The role is exactly the singleton of the variable.
    Is(RoleId, String),
    /// The role contains the variable.
    Contains(RoleId, String),
}

impl RoleAtom {
    pub fn role(&self) -> &RoleId {
        match self {
            RoleAtom::Empty(r) | RoleAtom::Is(r, _) | RoleAtom::Contains(r, _) => r,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ObjPattern {
    pub var: String,
    pub class: ClassId,
    pub atoms: Vec<RoleAtom>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Cond {
    Ne(String, String),
    Eq(String, String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PatternRule {
    pub name: String,
    pub stage: Stage,
    pub objects: Vec<ObjPattern>,
    pub conds: Vec<Cond>,
}

impl PatternRule {
    /// Partial-stage rules may not test for emptiness, which later commits can repair.
    pub fn is_monotonic(&self) -> bool {
        self.objects
            .iter()
            .flat_map(|o| &o.atoms)
            .all(|a| !matches!(a, RoleAtom::Empty(_)))
    }
}

/// Forbids directed cycles along one role (self-loops included).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AcyclicityDecl {
    pub class: ClassId,
    pub role: RoleId,
}

impl AcyclicityDecl {
    pub fn rule_name(&self) -> String {
        format!("acyclic {}.{}", self.class, self.role)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Evidence {
    Binding(BTreeMap<String, Oid>),
    Cycle(Vec<Oid>),
    Builtin { object: Oid, role: RoleId, detail: String },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub rule: String,
    pub evidence: Evidence,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: ", self.rule)?;
        match &self.evidence {
            Evidence::Binding(b) => {
                let parts: Vec<String> = b.iter().map(|(v, o)| format!("{v}={o}")).collect();
                write!(f, "{{{}}}", parts.join(", "))
            }
            Evidence::Cycle(c) => {
                let parts: Vec<&str> = c.iter().map(Oid::name).collect();
                write!(f, "cycle [{}]", parts.join(", "))
            }
            Evidence::Builtin { object, role, detail } => write!(f, "{object}.{role} {detail}"),
        }
    }
}

fn builtin(object: &Oid, role: &RoleId, detail: String) -> Option<Violation> {
    Some(Violation {
        rule: "builtin".into(),
        evidence: Evidence::Builtin {
            object: object.clone(),
            role: role.clone(),
            detail,
        },
    })
}

/// Intrinsic well-formedness: multiplicities, target classes and known identifiers.
pub fn check_partial_builtin(spec: &Spec, g: &Graph) -> Option<Violation> {
    let universe = spec.universe();
    for rec in g.records() {
        let Some(decl) = spec.schema.class(&rec.class) else {
            return builtin(&rec.id, &RoleId::new("-"), format!("has undeclared class {}", rec.class));
        };
        if !universe.contains(&rec.id) || rec.id.class() != &rec.class {
            return builtin(&rec.id, &RoleId::new("-"), "is not an identifier of its class".into());
        }
        for (role, slot) in &rec.refs {
            let RefSlot::Committed(set) = slot else {
                continue;
            };
            let Some(role_decl) = decl.role(role) else {
                return builtin(&rec.id, role, "is not a declared role".into());
            };
            let bound = spec.role_bound(&rec.class, role);
            if set.len() as u64 > bound.ub as u64 {
                return builtin(&rec.id, role, format!("has {} targets, above {}", set.len(), bound.ub));
            }
            if (set.len() as u64) < bound.lb as u64 {
                return builtin(&rec.id, role, format!("has {} targets, below {}", set.len(), bound.lb));
            }
            for t in set {
                if !universe.contains(t) {
                    return builtin(&rec.id, role, format!("targets unknown identifier {t}"));
                }
                if t.class() != &role_decl.target {
                    return builtin(&rec.id, role, format!("targets {t} outside class {}", role_decl.target));
                }
                if !g.contains(t) {
                    return builtin(&rec.id, role, format!("targets absent object {t}"));
                }
            }
        }
    }
    None
}

/// First violation among the rules of `stage`, in declaration order, with
/// acyclicity declarations checked after the full-stage pattern rules.
pub fn check_rules(spec: &Spec, g: &Graph, stage: Stage) -> Option<Violation> {
    for rule in spec.rules_at(stage) {
        if let Some(binding) = match_pattern(rule, g) {
            return Some(Violation {
                rule: rule.name.clone(),
                evidence: Evidence::Binding(binding),
            });
        }
    }
    if stage == Stage::Full {
        for decl in &spec.acyclic {
            if let Some(cycle) = find_cycle(g, &decl.class, &decl.role) {
                return Some(Violation {
                    rule: decl.rule_name(),
                    evidence: Evidence::Cycle(cycle),
                });
            }
        }
    }
    None
}

type Binding = BTreeMap<String, Oid>;

/// First binding of the rule's variables satisfying every pattern and side
/// condition, searching candidates in identifier order.
pub fn match_pattern(rule: &PatternRule, g: &Graph) -> Option<Binding> {
    let mut binding = Binding::new();
    if match_objects(rule, g, 0, &mut binding) {
        Some(binding)
    } else {
        None
    }
}

fn match_objects(rule: &PatternRule, g: &Graph, idx: usize, b: &mut Binding) -> bool {
    let Some(pat) = rule.objects.get(idx) else {
        return conds_hold(&rule.conds, b);
    };
    if let Some(bound) = b.get(&pat.var).cloned() {
        return match g.get(&bound) {
            Some(rec) if rec.class == pat.class => match_atoms(rule, g, idx, 0, &bound, b),
            _ => false,
        };
    }
    let candidates: Vec<Oid> = g.of_class(&pat.class).map(|r| r.id.clone()).collect();
    for oid in candidates {
        b.insert(pat.var.clone(), oid.clone());
        if match_atoms(rule, g, idx, 0, &oid, b) {
            return true;
        }
        b.remove(&pat.var);
    }
    false
}

fn match_atoms(rule: &PatternRule, g: &Graph, idx: usize, atom: usize, subject: &Oid, b: &mut Binding) -> bool {
    let pat = &rule.objects[idx];
    let Some(a) = pat.atoms.get(atom) else {
        return match_objects(rule, g, idx + 1, b);
    };
    let Some(RefSlot::Committed(set)) = g.get(subject).and_then(|r| r.slot(a.role())) else {
        return false;
    };
    let next = |b: &mut Binding| match_atoms(rule, g, idx, atom + 1, subject, b);
    match a {
        RoleAtom::Empty(_) => set.is_empty() && next(b),
        RoleAtom::Is(_, var) => {
            if set.len() != 1 {
                return false;
            }
            let only = set.iter().next().unwrap();
            bind_then(var, only, b, &next)
        }
        RoleAtom::Contains(_, var) => {
            for t in set {
                if bind_then(var, t, b, &next) {
                    return true;
                }
            }
            false
        }
    }
}

fn bind_then(var: &str, oid: &Oid, b: &mut Binding, k: &dyn Fn(&mut Binding) -> bool) -> bool {
    match b.get(var) {
        Some(existing) => existing == oid && k(b),
        None => {
            b.insert(var.to_string(), oid.clone());
            if k(b) {
                return true;
            }
            b.remove(var);
            false
        }
    }
}

fn conds_hold(conds: &[Cond], b: &Binding) -> bool {
    conds.iter().all(|c| match c {
        Cond::Ne(x, y) => b.get(x) != b.get(y),
        Cond::Eq(x, y) => b.get(x) == b.get(y),
    })
}

/// Iterative depth-first search for a directed cycle along `role` among
/// objects of `class`. Returns the cycle from its entry point.
pub fn find_cycle(g: &Graph, class: &ClassId, role: &RoleId) -> Option<Vec<Oid>> {
    let succ = |o: &Oid| -> Vec<Oid> {
        g.get(o)
            .map(|r| r.targets(role).filter(|t| t.class() == class).cloned().collect())
            .unwrap_or_default()
    };
    let mut done: BTreeSet<Oid> = BTreeSet::new();
    for start in g.of_class(class).map(|r| r.id.clone()) {
        if done.contains(&start) {
            continue;
        }
        // Stack of (node, pending successors); `path` mirrors the stack.
        let mut stack: Vec<(Oid, Vec<Oid>)> = vec![(start.clone(), succ(&start))];
        let mut path: Vec<Oid> = vec![start];
        while let Some((_, pending)) = stack.last_mut() {
            match pending.pop() {
                Some(next) => {
                    if let Some(pos) = path.iter().position(|p| p == &next) {
                        return Some(path[pos..].to_vec());
                    }
                    if !done.contains(&next) {
                        let mut s = succ(&next);
                        s.reverse();
                        stack.push((next.clone(), s));
                        path.push(next);
                    }
                }
                None => {
                    let (node, _) = stack.pop().unwrap();
                    path.pop();
                    done.insert(node);
                }
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{ceo_check_spec, ceo_spec, oid};
    use std::collections::BTreeSet;

    fn set(names: &[&str]) -> BTreeSet<Oid> {
        names.iter().map(|n| oid(n)).collect()
    }

    /// Complete CEO graph with the given ceo and managers, no projects.
    fn ceo_graph(spec: &Spec, ceo: &str, m1: &[&str], m2: &[&str]) -> Graph {
        let mut g = Graph::new();
        for name in ["c1", "e1", "e2"] {
            let o = oid(name);
            let decl = spec.schema.class(o.class()).unwrap();
            g.insert(crate::model::ObjectRecord::skeleton(o, decl));
        }
        g.set_ref(&oid("c1"), &"ceo".into(), set(&[ceo]));
        g.set_ref(&oid("c1"), &"projects".into(), set(&[]));
        g.set_ref(&oid("e1"), &"manager".into(), set(m1));
        g.set_ref(&oid("e2"), &"manager".into(), set(m2));
        g
    }

    #[test]
    fn empty_graph_is_well_formed() {
        let spec = ceo_spec();
        assert_eq!(check_partial_builtin(&spec, &Graph::new()), None);
        assert_eq!(check_rules(&spec, &Graph::new(), Stage::Full), None);
    }

    #[test]
    fn builtin_rejects_upper_bound_excess() {
        let spec = crate::fixtures::parse(
            &crate::fixtures::CEO_TEXT.replace("class Employee [2..2];", "class Employee [3..3];"),
        );
        let named = |n: &str| spec.universe().by_name(n).unwrap().clone();
        let mut g = Graph::new();
        for name in ["p1", "e1", "e2", "e3"] {
            let o = named(name);
            g.insert(crate::model::ObjectRecord::skeleton(o.clone(), spec.schema.class(o.class()).unwrap()));
        }
        let three: BTreeSet<Oid> = ["e1", "e2", "e3"].into_iter().map(named).collect();
        g.set_ref(&named("p1"), &"members".into(), three);
        let v = check_partial_builtin(&spec, &g).expect("ub exceeded");
        assert!(matches!(v.evidence, Evidence::Builtin { ref object, .. } if object == &named("p1")));
    }

    #[test]
    fn builtin_rejects_class_mismatch() {
        let spec = ceo_spec();
        let mut g = Graph::new();
        let c1 = oid("c1");
        g.insert(crate::model::ObjectRecord::skeleton(c1.clone(), spec.schema.class(c1.class()).unwrap()));
        let p1 = oid("p1");
        g.insert(crate::model::ObjectRecord::skeleton(p1.clone(), spec.schema.class(p1.class()).unwrap()));
        g.set_ref(&c1, &"ceo".into(), set(&["p1"]));
        assert!(check_partial_builtin(&spec, &g).is_some());
    }

    #[test]
    fn ceo_with_manager_is_rejected() {
        let spec = ceo_spec();
        let g = ceo_graph(&spec, "e1", &["e2"], &[]);
        let v = check_rules(&spec, &g, Stage::Full).unwrap();
        assert_eq!(v.rule, "ceoHasManager");
        let Evidence::Binding(b) = v.evidence else { panic!("expected a binding") };
        assert_eq!(b.get("C"), Some(&oid("c1")));
        assert_eq!(b.get("E"), Some(&oid("e1")));
        assert_eq!(b.get("M"), Some(&oid("e2")));
    }

    #[test]
    fn two_cycle_is_detected() {
        let spec = ceo_spec();
        let g = ceo_graph(&spec, "e1", &[], &[]);
        let mut g2 = g.clone();
        g2.set_ref(&oid("e1"), &"manager".into(), set(&["e2"]));
        g2.set_ref(&oid("e2"), &"manager".into(), set(&["e1"]));
        assert_eq!(
            find_cycle(&g2, &"Employee".into(), &"manager".into()),
            Some(vec![oid("e1"), oid("e2")])
        );
        let mut g3 = g;
        g3.set_ref(&oid("e2"), &"manager".into(), set(&["e2"]));
        assert_eq!(find_cycle(&g3, &"Employee".into(), &"manager".into()), Some(vec![oid("e2")]));
    }

    #[test]
    fn graph_without_manager_edges_passes() {
        let spec = ceo_spec();
        let g = ceo_graph(&spec, "e1", &[], &[]);
        assert_eq!(check_rules(&spec, &g, Stage::Full), None);
        assert_eq!(check_rules(&spec, &g, Stage::Partial), None);
    }

    #[test]
    fn non_ceo_without_manager_binds_second_employee() {
        let spec = ceo_check_spec();
        let rule = spec.rules_at(Stage::Property).next().unwrap();
        let g = ceo_graph(&spec, "e1", &[], &[]);
        let b = match_pattern(rule, &g).unwrap();
        assert_eq!(b.get("C"), Some(&oid("c1")));
        assert_eq!(b.get("E"), Some(&oid("e2")));
        let both = ceo_graph(&spec, "e1", &["e2"], &["e1"]);
        assert_eq!(match_pattern(rule, &both), None);
        assert_eq!(match_pattern(rule, &Graph::new()), None);
    }

    #[test]
    fn matching_is_deterministic() {
        let spec = ceo_check_spec();
        let g = ceo_graph(&spec, "e2", &[], &[]);
        let a = check_rules(&spec, &g, Stage::Property);
        let b = check_rules(&spec, &g, Stage::Property);
        assert_eq!(a, b);
        let Some(Violation { evidence: Evidence::Binding(m), .. }) = a else { panic!() };
        assert_eq!(m.get("E"), Some(&oid("e1")));
    }
}
