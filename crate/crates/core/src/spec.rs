//! The parsed problem bundle and its data hooks.

use std::collections::BTreeSet;
use std::fmt;

use crate::constraint::{simp, Formula, SymVar, Variable};
use crate::model::{
    identifier_universe, in_need, validate_bounds, AttrName, BoundsError, ClassId,
    IdentifierUniverse, Oid, RoleBound, RoleId, Schema, Scope, Sort,
};
use crate::structural::{AcyclicityDecl, PatternRule, Stage};

/// Placeholder position inside a hook template.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Slot {
    /// The object the event happens to.
    This,
    /// An element of a committed reference set.
    That,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TemplateVar {
    pub kind: Sort,
    pub slot: Slot,
    pub attr: AttrName,
}

impl fmt::Display for TemplateVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let who = match self.slot {
            Slot::This => "this",
            Slot::That => "that",
        };
        write!(f, "{}({who},{})", crate::constraint::sort_letter(self.kind), self.attr)
    }
}

impl Variable for TemplateVar {
    fn sort(&self) -> Sort {
        self.kind
    }
}

pub type Template = Formula<TemplateVar>;

fn instantiate(t: &Template, this: &Oid, that: Option<&Oid>) -> Formula {
    t.map_vars(&mut |v: &TemplateVar| {
        let owner = match v.slot {
            Slot::This => this.clone(),
            Slot::That => that.expect("template refers to an absent element").clone(),
        };
        SymVar::new(v.kind, owner, v.attr.clone())
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CreateHook {
    pub class: ClassId,
    /// Variable name the user bound to the created object.
    pub this: String,
    pub body: Template,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SetRefBody {
    /// One formula used for every element; an empty commit contributes `true`.
    Plain(Template),
    Cases { empty: Template, each: Template },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SetRefHook {
    pub class: ClassId,
    pub role: RoleId,
    pub this: String,
    pub that: String,
    pub body: SetRefBody,
}

impl SetRefHook {
    fn instantiate(&self, owner: &Oid, value: &BTreeSet<Oid>) -> Formula {
        let (empty, each) = match &self.body {
            SetRefBody::Plain(f) => (&Formula::True, f),
            SetRefBody::Cases { empty, each } => (empty, each),
        };
        if value.is_empty() {
            instantiate(empty, owner, None)
        } else {
            Formula::and(value.iter().map(|v| instantiate(each, owner, Some(v))))
        }
    }
}

/// Event-indexed constraint contributions, with the check-mode property hooks.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct HookSet {
    pub on_create: Vec<CreateHook>,
    pub on_set_ref: Vec<SetRefHook>,
    pub prop_on_create: Vec<CreateHook>,
    pub prop_on_set_ref: Vec<SetRefHook>,
}

/// Which family of hooks to fire.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HookKind {
    Invariant,
    Property,
}

impl HookSet {
    /// Canonical contribution of creating `oid`; `true` when no hook applies.
    pub fn on_create(&self, kind: HookKind, oid: &Oid) -> Formula {
        let hooks = match kind {
            HookKind::Invariant => &self.on_create,
            HookKind::Property => &self.prop_on_create,
        };
        simp(&Formula::and(
            hooks
                .iter()
                .filter(|h| &h.class == oid.class())
                .map(|h| instantiate(&h.body, oid, None)),
        ))
    }

    /// Canonical contribution of committing `owner.role = value`.
    pub fn on_set_ref(&self, kind: HookKind, owner: &Oid, role: &RoleId, value: &BTreeSet<Oid>) -> Formula {
        let hooks = match kind {
            HookKind::Invariant => &self.on_set_ref,
            HookKind::Property => &self.prop_on_set_ref,
        };
        simp(&Formula::and(
            hooks
                .iter()
                .filter(|h| &h.class == owner.class() && &h.role == role)
                .map(|h| h.instantiate(owner, value)),
        ))
    }

    /// Number of hook equations: a two-case reference hook counts twice.
    pub fn equation_count(&self) -> usize {
        let refs = |hs: &[SetRefHook]| -> usize {
            hs.iter()
                .map(|h| match h.body {
                    SetRefBody::Plain(_) => 1,
                    SetRefBody::Cases { .. } => 2,
                })
                .sum()
        };
        self.on_create.len() + refs(&self.on_set_ref) + self.prop_on_create.len() + refs(&self.prop_on_set_ref)
    }
}

/// Schema, scope, structural constraints, hooks and optional property.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Spec {
    pub schema: Schema,
    pub scope: Scope,
    /// Pattern rules of every stage, in declaration order.
    pub rules: Vec<PatternRule>,
    pub acyclic: Vec<AcyclicityDecl>,
    pub hooks: HookSet,
    /// Whether a property block was declared.
    pub has_property: bool,
    universe: IdentifierUniverse,
}

impl Spec {
    pub fn new(
        schema: Schema,
        scope: Scope,
        rules: Vec<PatternRule>,
        acyclic: Vec<AcyclicityDecl>,
        hooks: HookSet,
        has_property: bool,
    ) -> Result<Spec, BoundsError> {
        validate_bounds(&schema, &scope)?;
        let universe = identifier_universe(&schema, &scope);
        Ok(Spec {
            schema,
            scope,
            rules,
            acyclic,
            hooks,
            has_property,
            universe,
        })
    }

    pub fn universe(&self) -> &IdentifierUniverse {
        &self.universe
    }

    /// Effective bound of a declared role. Panics on undeclared roles.
    pub fn role_bound(&self, class: &ClassId, role: &RoleId) -> RoleBound {
        self.scope
            .role_bound(&self.schema, class, role)
            .unwrap_or_else(|| panic!("undeclared role {class}.{role}"))
    }

    pub fn in_need(&self, class: &ClassId) -> u32 {
        in_need(&self.schema, &self.scope, class).unwrap_or(0)
    }

    pub fn rules_at(&self, stage: Stage) -> impl Iterator<Item = &PatternRule> {
        self.rules.iter().filter(move |r| r.stage == stage)
    }
}
