//! Schema, scope and object graphs.
//!
//! Every other module works over these values. Identifiers are cheap to clone
//! (`Arc<str>` inside) and compare by content, except [`Oid`] which compares by
//! its position in the canonical identifier order.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

macro_rules! text_id {
    ($(#[$doc:meta])* $name:ident) => {
        $(#[$doc])*
        #[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub struct $name(Arc<str>);

        impl $name {
            pub fn new(text: impl AsRef<str>) -> Self {
                Self(Arc::from(text.as_ref()))
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl fmt::Debug for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}", self.0)
            }
        }

        impl From<&str> for $name {
            fn from(text: &str) -> Self {
                Self::new(text)
            }
        }
    };
}

text_id!(
    /// Class name.
    ClassId
);
text_id!(
    /// Reference role name, unique within its owning class.
    RoleId
);
text_id!(
    /// Data attribute name, unique within its owning class.
    AttrName
);

/// Object identifier drawn from the bounded pool.
///
/// Ordering, equality and hashing use `(class position, index)` only; the
/// rendered name is carried along for display.
#[derive(Clone)]
pub struct Oid {
    class: ClassId,
    class_pos: u32,
    index: u32,
    name: Arc<str>,
}

impl Oid {
    pub fn new(class: ClassId, class_pos: u32, index: u32, prefix: &str) -> Self {
        let name = Arc::from(format!("{prefix}{index}"));
        Oid {
            class,
            class_pos,
            index,
            name,
        }
    }

    pub fn class(&self) -> &ClassId {
        &self.class
    }

    pub fn class_pos(&self) -> u32 {
        self.class_pos
    }

    /// One-based index within the class pool.
    pub fn index(&self) -> u32 {
        self.index
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    fn key(&self) -> (u32, u32) {
        (self.class_pos, self.index)
    }
}

impl PartialEq for Oid {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}

impl Eq for Oid {}

impl PartialOrd for Oid {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Oid {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.key().cmp(&other.key())
    }
}

impl std::hash::Hash for Oid {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.key().hash(state)
    }
}

impl fmt::Display for Oid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

impl fmt::Debug for Oid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// Sort of a data attribute.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sort {
    Int,
    Bool,
    Real,
}

impl Sort {
    pub fn keyword(self) -> &'static str {
        match self {
            Sort::Int => "Int",
            Sort::Bool => "Bool",
            Sort::Real => "Real",
        }
    }
}

/// Multiplicity carrier of a role.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Carrier {
    /// Exactly one target.
    Single,
    /// At most one target.
    Maybe,
    /// Any number of targets.
    Set,
    /// At least one target.
    NonEmptySet,
}

impl Carrier {
    pub fn glyph(self) -> char {
        match self {
            Carrier::Single => '!',
            Carrier::Maybe => '?',
            Carrier::Set => '*',
            Carrier::NonEmptySet => '+',
        }
    }

    /// Whether the multiplicity interval `[lb, ub]` is legal for this carrier.
    pub fn admits(self, lb: u32, ub: u32) -> bool {
        match self {
            Carrier::Single => lb == 1 && ub == 1,
            Carrier::Maybe => lb == 0 && ub <= 1,
            Carrier::Set => true,
            Carrier::NonEmptySet => lb >= 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RoleDecl {
    pub name: RoleId,
    pub target: ClassId,
    pub carrier: Carrier,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassDecl {
    pub name: ClassId,
    pub roles: Vec<RoleDecl>,
    pub attrs: Vec<(AttrName, Sort)>,
}

impl ClassDecl {
    pub fn role(&self, role: &RoleId) -> Option<&RoleDecl> {
        self.roles.iter().find(|r| &r.name == role)
    }

    pub fn attr_sort(&self, attr: &AttrName) -> Option<Sort> {
        self.attrs.iter().find(|(a, _)| a == attr).map(|(_, s)| *s)
    }
}

/// Ordered class declarations. Declaration order is the canonical class order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Schema {
    pub classes: Vec<ClassDecl>,
}

impl Schema {
    pub fn class(&self, class: &ClassId) -> Option<&ClassDecl> {
        self.classes.iter().find(|c| &c.name == class)
    }

    pub fn position(&self, class: &ClassId) -> Option<usize> {
        self.classes.iter().position(|c| &c.name == class)
    }
}

/// Inclusive cardinality interval.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Interval {
    pub lo: u32,
    pub hi: u32,
}

impl Interval {
    pub fn new(lo: u32, hi: u32) -> Self {
        Interval { lo, hi }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RoleBound {
    pub target: ClassId,
    pub lb: u32,
    pub ub: u32,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Scope {
    pub class_bounds: BTreeMap<ClassId, Interval>,
    pub role_bounds: BTreeMap<(ClassId, RoleId), RoleBound>,
}

impl Scope {
    pub fn class_bound(&self, class: &ClassId) -> Interval {
        self.class_bounds
            .get(class)
            .copied()
            .unwrap_or(Interval::new(0, 0))
    }

    /// Declared bound of a role, or the carrier-implied default when absent.
    pub fn role_bound(&self, schema: &Schema, class: &ClassId, role: &RoleId) -> Option<RoleBound> {
        if let Some(b) = self.role_bounds.get(&(class.clone(), role.clone())) {
            return Some(b.clone());
        }
        let decl = schema.class(class)?.role(role)?;
        let hi = self.class_bound(&decl.target).hi;
        let (lb, ub) = match decl.carrier {
            Carrier::Single => (1, 1),
            Carrier::Maybe => (0, 1),
            Carrier::Set => (0, hi),
            Carrier::NonEmptySet => (1, hi.max(1)),
        };
        Some(RoleBound {
            target: decl.target.clone(),
            lb,
            ub,
        })
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum BoundsError {
    #[error("class `{0}` is not declared in the schema")]
    UnknownClass(ClassId),
    #[error("role `{0}.{1}` is not declared in the schema")]
    UnknownRole(ClassId, RoleId),
    #[error("class `{0}` has no bounds declaration")]
    MissingClassBound(ClassId),
    #[error("class `{class}` has lower bound {lo} above upper bound {hi}")]
    ClassInterval { class: ClassId, lo: u32, hi: u32 },
    #[error("role `{class}.{role}` has lower multiplicity {lb} above upper multiplicity {ub}")]
    RoleInterval {
        class: ClassId,
        role: RoleId,
        lb: u32,
        ub: u32,
    },
    #[error("role `{class}.{role}` is declared with target `{declared}` but bounded with target `{bounded}`")]
    TargetMismatch {
        class: ClassId,
        role: RoleId,
        declared: ClassId,
        bounded: ClassId,
    },
    #[error("role `{class}.{role}` multiplicity [{lb}..{ub}] is incompatible with its `{glyph}` carrier")]
    CarrierMismatch {
        class: ClassId,
        role: RoleId,
        lb: u32,
        ub: u32,
        glyph: char,
    },
    #[error("role `{class}.{role}` needs at least {lb} targets but class `{target}` allows at most {hi} objects")]
    LowerExceedsUniverse {
        class: ClassId,
        role: RoleId,
        target: ClassId,
        lb: u32,
        hi: u32,
    },
    #[error("class `{class}` allows at most {hi} objects but incoming roles need {need}")]
    InsufficientScope { class: ClassId, hi: u32, need: u32 },
}

/// Checks that the scope is consistent with the schema and admits at least the
/// lower multiplicities demanded by every role.
pub fn validate_bounds(schema: &Schema, scope: &Scope) -> Result<(), BoundsError> {
    for class in scope.class_bounds.keys() {
        if schema.class(class).is_none() {
            return Err(BoundsError::UnknownClass(class.clone()));
        }
    }
    for decl in &schema.classes {
        let Some(iv) = scope.class_bounds.get(&decl.name) else {
            return Err(BoundsError::MissingClassBound(decl.name.clone()));
        };
        if iv.lo > iv.hi {
            return Err(BoundsError::ClassInterval {
                class: decl.name.clone(),
                lo: iv.lo,
                hi: iv.hi,
            });
        }
    }
    for ((class, role), bound) in &scope.role_bounds {
        let decl = schema
            .class(class)
            .ok_or_else(|| BoundsError::UnknownClass(class.clone()))?
            .role(role)
            .ok_or_else(|| BoundsError::UnknownRole(class.clone(), role.clone()))?;
        if decl.target != bound.target {
            return Err(BoundsError::TargetMismatch {
                class: class.clone(),
                role: role.clone(),
                declared: decl.target.clone(),
                bounded: bound.target.clone(),
            });
        }
    }
    for decl in &schema.classes {
        for role in &decl.roles {
            let bound = scope
                .role_bound(schema, &decl.name, &role.name)
                .ok_or_else(|| BoundsError::UnknownClass(role.target.clone()))?;
            if schema.class(&role.target).is_none() {
                return Err(BoundsError::UnknownClass(role.target.clone()));
            }
            if bound.lb > bound.ub {
                return Err(BoundsError::RoleInterval {
                    class: decl.name.clone(),
                    role: role.name.clone(),
                    lb: bound.lb,
                    ub: bound.ub,
                });
            }
            if !role.carrier.admits(bound.lb, bound.ub) {
                return Err(BoundsError::CarrierMismatch {
                    class: decl.name.clone(),
                    role: role.name.clone(),
                    lb: bound.lb,
                    ub: bound.ub,
                    glyph: role.carrier.glyph(),
                });
            }
            let hi = scope.class_bound(&role.target).hi;
            if bound.lb > hi {
                return Err(BoundsError::LowerExceedsUniverse {
                    class: decl.name.clone(),
                    role: role.name.clone(),
                    target: role.target.clone(),
                    lb: bound.lb,
                    hi,
                });
            }
        }
    }
    for decl in &schema.classes {
        let need = in_need(schema, scope, &decl.name)?;
        let hi = scope.class_bound(&decl.name).hi;
        if hi < need {
            return Err(BoundsError::InsufficientScope {
                class: decl.name.clone(),
                hi,
                need,
            });
        }
    }
    Ok(())
}

/// Maximum lower multiplicity among the roles targeting `class`, zero if none.
pub fn in_need(schema: &Schema, scope: &Scope, class: &ClassId) -> Result<u32, BoundsError> {
    if schema.class(class).is_none() {
        return Err(BoundsError::UnknownClass(class.clone()));
    }
    let mut need = 0;
    for decl in &schema.classes {
        for role in decl.roles.iter().filter(|r| &r.target == class) {
            if let Some(b) = scope.role_bound(schema, &decl.name, &role.name) {
                need = need.max(b.lb);
            }
        }
    }
    Ok(need)
}

/// The bounded identifier pool: per-class lists and their canonical linearization.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct IdentifierUniverse {
    pub per_class: Vec<(ClassId, Vec<Oid>)>,
    pub ordered: Vec<Oid>,
}

impl IdentifierUniverse {
    pub fn of_class(&self, class: &ClassId) -> &[Oid] {
        self.per_class
            .iter()
            .find(|(c, _)| c == class)
            .map(|(_, ids)| ids.as_slice())
            .unwrap_or(&[])
    }

    pub fn contains(&self, oid: &Oid) -> bool {
        self.of_class(oid.class()).contains(oid)
    }

    pub fn by_name(&self, name: &str) -> Option<&Oid> {
        self.ordered.iter().find(|o| o.name() == name)
    }
}

/// Lowercase name prefixes, extended character by character until unique.
fn class_prefixes(schema: &Schema) -> Vec<String> {
    let mut taken: Vec<String> = Vec::new();
    for decl in &schema.classes {
        let lower: Vec<char> = decl.name.as_str().to_lowercase().chars().collect();
        let mut len = 1.min(lower.len());
        loop {
            let candidate: String = lower[..len].iter().collect();
            if !taken.contains(&candidate) {
                taken.push(candidate);
                break;
            }
            if len == lower.len() {
                let mut n = 2;
                while taken.contains(&format!("{candidate}_{n}_")) {
                    n += 1;
                }
                taken.push(format!("{candidate}_{n}_"));
                break;
            }
            len += 1;
        }
    }
    taken
}

/// Allocates `hi(C)` identifiers per class, in schema declaration order.
pub fn identifier_universe(schema: &Schema, scope: &Scope) -> IdentifierUniverse {
    let prefixes = class_prefixes(schema);
    let mut per_class = Vec::with_capacity(schema.classes.len());
    let mut ordered = Vec::new();
    for (pos, (decl, prefix)) in schema.classes.iter().zip(&prefixes).enumerate() {
        let hi = scope.class_bound(&decl.name).hi;
        let ids: Vec<Oid> = (1..=hi)
            .map(|i| Oid::new(decl.name.clone(), pos as u32, i, prefix))
            .collect();
        ordered.extend(ids.iter().cloned());
        per_class.push((decl.name.clone(), ids));
    }
    IdentifierUniverse { per_class, ordered }
}

/// Value of a role on an object record.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum RefSlot {
    /// Placeholder installed at creation, not yet chosen.
    Uncommitted,
    Committed(BTreeSet<Oid>),
}

impl RefSlot {
    pub fn committed(&self) -> Option<&BTreeSet<Oid>> {
        match self {
            RefSlot::Committed(s) => Some(s),
            RefSlot::Uncommitted => None,
        }
    }

    pub fn is_committed(&self) -> bool {
        matches!(self, RefSlot::Committed(_))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ObjectRecord {
    pub id: Oid,
    pub class: ClassId,
    /// One entry per declared role, in declaration order.
    pub refs: Vec<(RoleId, RefSlot)>,
}

impl ObjectRecord {
    /// A record with every role of `decl` set to the uncommitted placeholder.
    pub fn skeleton(id: Oid, decl: &ClassDecl) -> Self {
        ObjectRecord {
            id,
            class: decl.name.clone(),
            refs: decl
                .roles
                .iter()
                .map(|r| (r.name.clone(), RefSlot::Uncommitted))
                .collect(),
        }
    }

    pub fn slot(&self, role: &RoleId) -> Option<&RefSlot> {
        self.refs.iter().find(|(r, _)| r == role).map(|(_, s)| s)
    }

    pub fn slot_mut(&mut self, role: &RoleId) -> Option<&mut RefSlot> {
        self.refs.iter_mut().find(|(r, _)| r == role).map(|(_, s)| s)
    }

    /// Committed targets of `role`; empty when uncommitted or undeclared.
    pub fn targets(&self, role: &RoleId) -> impl Iterator<Item = &Oid> {
        self.slot(role)
            .and_then(RefSlot::committed)
            .into_iter()
            .flatten()
    }
}

/// An object graph keyed by identifier. Map equality realizes multiset
/// equality under the unique-identifier invariant.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Graph {
    records: BTreeMap<Oid, Arc<ObjectRecord>>,
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, record: ObjectRecord) {
        self.records.insert(record.id.clone(), Arc::new(record));
    }

    pub fn get(&self, id: &Oid) -> Option<&ObjectRecord> {
        self.records.get(id).map(Arc::as_ref)
    }

    pub fn contains(&self, id: &Oid) -> bool {
        self.records.contains_key(id)
    }

    /// Sets a role value, returning false if the object or role is unknown.
    pub fn set_ref(&mut self, owner: &Oid, role: &RoleId, value: BTreeSet<Oid>) -> bool {
        let Some(rec) = self.records.get_mut(owner) else {
            return false;
        };
        match Arc::make_mut(rec).slot_mut(role) {
            Some(slot) => {
                *slot = RefSlot::Committed(value);
                true
            }
            None => false,
        }
    }

    /// Records in identifier order.
    pub fn records(&self) -> impl Iterator<Item = &ObjectRecord> {
        self.records.values().map(Arc::as_ref)
    }

    pub fn ids(&self) -> impl Iterator<Item = &Oid> {
        self.records.keys()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn of_class<'a>(&'a self, class: &'a ClassId) -> impl Iterator<Item = &'a ObjectRecord> {
        self.records().filter(move |r| &r.class == class)
    }

    /// Canonical text rendering, e.g. `c1:Company{ceo={e1},projects={}} e1:Employee{manager=?}`.
    pub fn canonical_text(&self) -> String {
        let mut out = String::new();
        for (i, rec) in self.records().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            out.push_str(&format!("{}:{}{{", rec.id, rec.class));
            for (j, (role, slot)) in rec.refs.iter().enumerate() {
                if j > 0 {
                    out.push(',');
                }
                match slot {
                    RefSlot::Uncommitted => out.push_str(&format!("{role}=?")),
                    RefSlot::Committed(set) => {
                        let names: Vec<&str> = set.iter().map(Oid::name).collect();
                        out.push_str(&format!("{role}={{{}}}", names.join(",")));
                    }
                }
            }
            out.push('}');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ceo_schema_scope() -> (Schema, Scope) {
        let company = ClassDecl {
            name: "Company".into(),
            roles: vec![
                RoleDecl {
                    name: "ceo".into(),
                    target: "Employee".into(),
                    carrier: Carrier::Single,
                },
                RoleDecl {
                    name: "projects".into(),
                    target: "Project".into(),
                    carrier: Carrier::Set,
                },
            ],
            attrs: vec![],
        };
        let project = ClassDecl {
            name: "Project".into(),
            roles: vec![RoleDecl {
                name: "members".into(),
                target: "Employee".into(),
                carrier: Carrier::NonEmptySet,
            }],
            attrs: vec![],
        };
        let employee = ClassDecl {
            name: "Employee".into(),
            roles: vec![RoleDecl {
                name: "manager".into(),
                target: "Employee".into(),
                carrier: Carrier::Maybe,
            }],
            attrs: vec![("level".into(), Sort::Int)],
        };
        let schema = Schema {
            classes: vec![company, project, employee],
        };
        let mut scope = Scope::default();
        scope.class_bounds.insert("Company".into(), Interval::new(1, 1));
        scope.class_bounds.insert("Employee".into(), Interval::new(2, 2));
        scope.class_bounds.insert("Project".into(), Interval::new(0, 2));
        let rb = |t: &str, lb, ub| RoleBound {
            target: t.into(),
            lb,
            ub,
        };
        scope
            .role_bounds
            .insert(("Company".into(), "ceo".into()), rb("Employee", 1, 1));
        scope
            .role_bounds
            .insert(("Company".into(), "projects".into()), rb("Project", 0, 2));
        scope
            .role_bounds
            .insert(("Employee".into(), "manager".into()), rb("Employee", 0, 1));
        scope
            .role_bounds
            .insert(("Project".into(), "members".into()), rb("Employee", 1, 2));
        (schema, scope)
    }

    #[test]
    fn ceo_bounds_validate() {
        let (schema, scope) = ceo_schema_scope();
        assert_eq!(validate_bounds(&schema, &scope), Ok(()));
    }

    #[test]
    fn lower_multiplicity_beyond_universe_is_rejected() {
        let (schema, mut scope) = ceo_schema_scope();
        scope.role_bounds.insert(
            ("Project".into(), "members".into()),
            RoleBound {
                target: "Employee".into(),
                lb: 3,
                ub: 3,
            },
        );
        assert!(matches!(
            validate_bounds(&schema, &scope),
            Err(BoundsError::LowerExceedsUniverse { .. })
        ));
    }

    #[test]
    fn inverted_class_interval_is_rejected() {
        let (schema, mut scope) = ceo_schema_scope();
        scope.class_bounds.insert("Company".into(), Interval::new(2, 1));
        assert!(matches!(
            validate_bounds(&schema, &scope),
            Err(BoundsError::ClassInterval { .. })
        ));
    }

    #[test]
    fn carrier_must_admit_multiplicity() {
        let (schema, mut scope) = ceo_schema_scope();
        scope.role_bounds.insert(
            ("Employee".into(), "manager".into()),
            RoleBound {
                target: "Employee".into(),
                lb: 0,
                ub: 2,
            },
        );
        assert!(matches!(
            validate_bounds(&schema, &scope),
            Err(BoundsError::CarrierMismatch { .. })
        ));
    }

    #[test]
    fn in_need_reads_max_incoming_lower_bound() {
        let (schema, scope) = ceo_schema_scope();
        assert_eq!(in_need(&schema, &scope, &"Employee".into()), Ok(1));
        assert_eq!(in_need(&schema, &scope, &"Company".into()), Ok(0));
        assert_eq!(in_need(&schema, &scope, &"Project".into()), Ok(0));
        assert!(in_need(&schema, &scope, &"Nope".into()).is_err());
    }

    #[test]
    fn universe_follows_declaration_order() {
        let (schema, scope) = ceo_schema_scope();
        let u = identifier_universe(&schema, &scope);
        let names: Vec<&str> = u.ordered.iter().map(Oid::name).collect();
        assert_eq!(names, ["c1", "p1", "p2", "e1", "e2"]);
        assert!(u.ordered.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(u, identifier_universe(&schema, &scope));
    }

    #[test]
    fn empty_and_zero_bound_universes() {
        let u = identifier_universe(&Schema::default(), &Scope::default());
        assert!(u.per_class.is_empty() && u.ordered.is_empty());

        let schema = Schema {
            classes: vec![ClassDecl {
                name: "A".into(),
                roles: vec![],
                attrs: vec![],
            }],
        };
        let mut scope = Scope::default();
        scope.class_bounds.insert("A".into(), Interval::new(0, 0));
        let u = identifier_universe(&schema, &scope);
        assert!(u.of_class(&"A".into()).is_empty());
    }

    #[test]
    fn colliding_prefixes_are_extended() {
        let mk = |n: &str| ClassDecl {
            name: n.into(),
            roles: vec![],
            attrs: vec![],
        };
        let schema = Schema {
            classes: vec![mk("Employee"), mk("Engineer"), mk("E")],
        };
        let mut scope = Scope::default();
        for c in ["Employee", "Engineer", "E"] {
            scope.class_bounds.insert(c.into(), Interval::new(1, 1));
        }
        let u = identifier_universe(&schema, &scope);
        let names: Vec<&str> = u.ordered.iter().map(Oid::name).collect();
        assert_eq!(names, ["e1", "en1", "e_2_1"]);
    }

    #[test]
    fn set_ref_commits_slot() {
        let (schema, scope) = ceo_schema_scope();
        let u = identifier_universe(&schema, &scope);
        let e1 = u.by_name("e1").unwrap().clone();
        let e2 = u.by_name("e2").unwrap().clone();
        let mut g = Graph::new();
        g.insert(ObjectRecord::skeleton(e1.clone(), schema.class(&"Employee".into()).unwrap()));
        assert_eq!(g.canonical_text(), "e1:Employee{manager=?}");
        assert!(g.set_ref(&e1, &"manager".into(), [e2.clone()].into()));
        assert!(!g.set_ref(&e2, &"manager".into(), BTreeSet::new()));
        assert_eq!(g.canonical_text(), "e1:Employee{manager={e2}}");
    }
}
