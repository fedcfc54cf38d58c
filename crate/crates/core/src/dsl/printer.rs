use std::fmt::Write;

use crate::constraint::{Formula, NumTerm};
use crate::model::Sort;
use crate::spec::{CreateHook, SetRefBody, SetRefHook, Slot, Spec, Template, TemplateVar};
use crate::structural::{Cond, PatternRule, RoleAtom};

struct Names<'a> {
    this: &'a str,
    that: &'a str,
}

fn var(v: &TemplateVar, n: &Names<'_>) -> String {
    let letter = match v.kind {
        Sort::Int => 'i',
        Sort::Bool => 'b',
        Sort::Real => 'r',
    };
    let who = match v.slot {
        Slot::This => n.this,
        Slot::That => n.that,
    };
    format!("{letter}({who}, {})", v.attr)
}

fn term(t: &NumTerm<TemplateVar>, n: &Names<'_>) -> String {
    let join = |ts: &[NumTerm<TemplateVar>], op: &str| {
        let parts: Vec<String> = ts.iter().map(|t| term(t, n)).collect();
        format!("({})", parts.join(op))
    };
    match t {
        NumTerm::Int(v) => v.to_string(),
        NumTerm::Rat(q) => format!("{}/{}", q.numer(), q.denom()),
        NumTerm::Var(v) => var(v, n),
        NumTerm::Neg(t) => format!("-({})", term(t, n)),
        NumTerm::Add(ts) => join(ts, " + "),
        NumTerm::Mul(ts) => join(ts, " * "),
    }
}

fn formula(f: &Template, n: &Names<'_>) -> String {
    let join = |fs: &[Template], op: &str| {
        let parts: Vec<String> = fs.iter().map(|f| formula(f, n)).collect();
        format!("({})", parts.join(op))
    };
    match f {
        Formula::True => "true".into(),
        Formula::False => "false".into(),
        Formula::BoolVar(v) => var(v, n),
        Formula::Not(g) => format!("not {}", formula(g, n)),
        Formula::Atom(r, a, b) => format!("{} {} {}", term(a, n), r.symbol(), term(b, n)),
        Formula::And(fs) => join(fs, " and "),
        Formula::Or(fs) => join(fs, " or "),
    }
}

fn rule(out: &mut String, r: &PatternRule) {
    let _ = writeln!(out, "  forbid {} {} {{", r.name, r.stage.keyword());
    for o in &r.objects {
        let atoms: Vec<String> = o
            .atoms
            .iter()
            .map(|a| match a {
                RoleAtom::Empty(role) => format!("{role} = none"),
                RoleAtom::Is(role, v) => format!("{role} = {v}"),
                RoleAtom::Contains(role, v) => format!("{role} contains {v}"),
            })
            .collect();
        let _ = writeln!(out, "    {} : {}({});", o.var, o.class, atoms.join(", "));
    }
    if !r.conds.is_empty() {
        let conds: Vec<String> = r
            .conds
            .iter()
            .map(|c| match c {
                Cond::Ne(a, b) => format!("{a} != {b}"),
                Cond::Eq(a, b) => format!("{a} = {b}"),
            })
            .collect();
        let _ = writeln!(out, "    where {}", conds.join(", "));
    }
    out.push_str("  }\n");
}

fn create_hook(out: &mut String, h: &CreateHook) {
    let n = Names { this: &h.this, that: "" };
    let _ = writeln!(out, "  onCreate {}({}): {};", h.class, h.this, formula(&h.body, &n));
}

fn set_ref_hook(out: &mut String, h: &SetRefHook) {
    let n = Names {
        this: &h.this,
        that: &h.that,
    };
    let body = match &h.body {
        SetRefBody::Plain(f) => formula(f, &n),
        SetRefBody::Cases { empty, each } => {
            format!("empty -> {} | each -> {}", formula(empty, &n), formula(each, &n))
        }
    };
    let _ = writeln!(out, "  onSetRef {}.{}({}, {}): {body};", h.class, h.role, h.this, h.that);
}

/// Renders a problem description back to DSL text that parses to an equal value.
pub fn print_spec(spec: &Spec) -> String {
    let mut out = String::from("schema {\n");
    for c in &spec.schema.classes {
        let _ = writeln!(out, "  class {} {{", c.name);
        for r in &c.roles {
            let _ = writeln!(out, "    ref {} : {} {};", r.name, r.target, r.carrier.glyph());
        }
        for (a, s) in &c.attrs {
            let _ = writeln!(out, "    attr {a} : {};", s.keyword());
        }
        out.push_str("  }\n");
    }
    out.push_str("}\n\nbounds {\n");
    for c in &spec.schema.classes {
        if let Some(iv) = spec.scope.class_bounds.get(&c.name) {
            let _ = writeln!(out, "  class {} [{}..{}];", c.name, iv.lo, iv.hi);
        }
    }
    for ((class, role), b) in &spec.scope.role_bounds {
        let _ = writeln!(out, "  role {class}.{role} [{}..{}];", b.lb, b.ub);
    }
    out.push_str("}\n");
    let base: Vec<&PatternRule> = spec
        .rules
        .iter()
        .filter(|r| r.stage != crate::structural::Stage::Property)
        .collect();
    let h = &spec.hooks;
    if !base.is_empty() || !spec.acyclic.is_empty() || !h.on_create.is_empty() || !h.on_set_ref.is_empty() {
        out.push_str("\nconstraints {\n");
        for r in base {
            rule(&mut out, r);
        }
        for a in &spec.acyclic {
            let _ = writeln!(out, "  acyclic {}.{};", a.class, a.role);
        }
        for c in &h.on_create {
            create_hook(&mut out, c);
        }
        for s in &h.on_set_ref {
            set_ref_hook(&mut out, s);
        }
        out.push_str("}\n");
    }
    if spec.has_property {
        out.push_str("\nproperty {\n");
        for r in spec.rules.iter().filter(|r| r.stage == crate::structural::Stage::Property) {
            rule(&mut out, r);
        }
        for c in &h.prop_on_create {
            create_hook(&mut out, c);
        }
        for s in &h.prop_on_set_ref {
            set_ref_hook(&mut out, s);
        }
        out.push_str("}\n");
    }
    out
}
