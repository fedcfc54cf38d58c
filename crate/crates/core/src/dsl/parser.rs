use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Pow, Zero};

use super::lexer::{tokenize, Tok, Token};
use super::ParseError;
use crate::constraint::{Formula, NumTerm, Rel};
use crate::model::{
    AttrName, Carrier, ClassDecl, ClassId, Interval, RoleBound, RoleDecl, RoleId, Schema, Scope, Sort,
};
use crate::spec::{CreateHook, HookSet, SetRefBody, SetRefHook, Slot, Spec, Template, TemplateVar};
use crate::structural::{AcyclicityDecl, Cond, ObjPattern, PatternRule, RoleAtom, Stage};

type PResult<T> = Result<T, ParseError>;

/// Variables a hook body may mention, with the class each one ranges over.
struct HookScope {
    this: (String, ClassId),
    that: Option<(String, ClassId)>,
}

struct Parser<'s> {
    toks: Vec<Token>,
    pos: usize,
    schema: &'s Schema,
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn err_here<T>(&self, message: impl Into<String>) -> PResult<T> {
        let t = &self.toks[self.pos];
        Err(ParseError {
            line: t.line,
            col: t.col,
            message: message.into(),
        })
    }

    fn err_at<T>(&self, at: usize, message: impl Into<String>) -> PResult<T> {
        let t = &self.toks[at];
        Err(ParseError {
            line: t.line,
            col: t.col,
            message: message.into(),
        })
    }

    fn expected<T>(&self, what: &str) -> PResult<T> {
        self.err_here(format!("expected {what}, found {}", self.peek().describe()))
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(x) if x == kw)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn sym(&mut self, s: &str) -> PResult<()> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            self.expected(&format!("`{s}`"))
        }
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn kw(&mut self, kw: &str) -> PResult<()> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            self.expected(&format!("`{kw}`"))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.pos += 1;
                Ok(s)
            }
            _ => self.expected("an identifier"),
        }
    }

    fn nat(&mut self) -> PResult<u32> {
        match self.peek().clone() {
            Tok::Nat(s) => match s.parse() {
                Ok(n) => {
                    self.pos += 1;
                    Ok(n)
                }
                Err(_) => self.err_here(format!("number {s} is too large")),
            },
            _ => self.expected("a natural number"),
        }
    }

    fn range(&mut self) -> PResult<(u32, u32, usize)> {
        let at = self.pos;
        self.sym("[")?;
        let lo = self.nat()?;
        self.sym("..")?;
        let hi = self.nat()?;
        self.sym("]")?;
        if lo > hi {
            return self.err_at(at, format!("range [{lo}..{hi}] has its lower end above its upper end"));
        }
        Ok((lo, hi, at))
    }

    fn class_ref(&mut self) -> PResult<ClassId> {
        let at = self.pos;
        let name = self.ident()?;
        let id = ClassId::new(&name);
        match self.schema.class(&id) {
            Some(_) => Ok(id),
            None => self.err_at(at, format!("unknown class `{name}`")),
        }
    }

    fn role_ref(&mut self, class: &ClassId) -> PResult<RoleDecl> {
        let at = self.pos;
        let name = self.ident()?;
        match self.schema.class(class).and_then(|c| c.role(&RoleId::new(&name))) {
            Some(r) => Ok(r.clone()),
            None => self.err_at(at, format!("class `{class}` has no role `{name}`")),
        }
    }

    // ---- bounds -------------------------------------------------------

    fn bounds(&mut self) -> PResult<Scope> {
        let at = self.pos;
        self.kw("bounds")?;
        self.sym("{")?;
        let mut scope = Scope::default();
        while !self.eat_sym("}") {
            if self.eat_kw("class") {
                let cat = self.pos;
                let class = self.class_ref()?;
                let (lo, hi, _) = self.range()?;
                self.sym(";")?;
                if scope.class_bounds.insert(class.clone(), Interval::new(lo, hi)).is_some() {
                    return self.err_at(cat, format!("class `{class}` is bounded twice"));
                }
            } else if self.eat_kw("role") {
                let cat = self.pos;
                let class = self.class_ref()?;
                self.sym(".")?;
                let role = self.role_ref(&class)?;
                let (lb, ub, rat) = self.range()?;
                self.sym(";")?;
                if !role.carrier.admits(lb, ub) {
                    return self.err_at(
                        rat,
                        format!("multiplicity [{lb}..{ub}] does not fit the `{}` carrier", role.carrier.glyph()),
                    );
                }
                let key = (class.clone(), role.name.clone());
                let bound = RoleBound {
                    target: role.target.clone(),
                    lb,
                    ub,
                };
                if scope.role_bounds.insert(key, bound).is_some() {
                    return self.err_at(cat, format!("role `{class}.{}` is bounded twice", role.name));
                }
            } else {
                return self.expected("`class`, `role` or `}`");
            }
        }
        if let Err(e) = crate::model::validate_bounds(self.schema, &scope) {
            return self.err_at(at, e.to_string());
        }
        Ok(scope)
    }

    // ---- structural rules --------------------------------------------

    fn forbid(&mut self, allowed: &[Stage]) -> PResult<PatternRule> {
        self.kw("forbid")?;
        let name = self.ident()?;
        let stage_at = self.pos;
        let stage = match self.ident()?.as_str() {
            "partial" => Stage::Partial,
            "full" => Stage::Full,
            "property" => Stage::Property,
            other => return self.err_at(stage_at, format!("unknown stage `{other}`")),
        };
        if !allowed.contains(&stage) {
            return self.err_at(stage_at, format!("stage `{}` is not allowed here", stage.keyword()));
        }
        self.sym("{")?;
        let mut objects = Vec::new();
        let mut bound: BTreeSet<String> = BTreeSet::new();
        while matches!(self.peek(), Tok::Ident(s) if s != "where") {
            let var = self.ident()?;
            self.sym(":")?;
            let class = self.class_ref()?;
            self.sym("(")?;
            let mut atoms = Vec::new();
            loop {
                let atom_at = self.pos;
                let role = self.role_ref(&class)?.name;
                let atom = if self.eat_kw("contains") {
                    RoleAtom::Contains(role, self.ident()?)
                } else {
                    self.sym("=")?;
                    if self.eat_kw("none") {
                        if stage == Stage::Partial {
                            return self.err_at(
                                atom_at,
                                "partial rules must be monotonic and cannot test a role for `none`",
                            );
                        }
                        RoleAtom::Empty(role)
                    } else {
                        RoleAtom::Is(role, self.ident()?)
                    }
                };
                if let RoleAtom::Is(_, v) | RoleAtom::Contains(_, v) = &atom {
                    bound.insert(v.clone());
                }
                atoms.push(atom);
                if !self.eat_sym(",") {
                    break;
                }
            }
            self.sym(")")?;
            self.sym(";")?;
            bound.insert(var.clone());
            objects.push(ObjPattern { var, class, atoms });
        }
        if objects.is_empty() {
            return self.expected("an object pattern");
        }
        let mut conds = Vec::new();
        if self.eat_kw("where") {
            loop {
                let side = |p: &mut Self| -> PResult<String> {
                    let at = p.pos;
                    let v = p.ident()?;
                    if !bound.contains(&v) {
                        return p.err_at(at, format!("variable `{v}` is not bound by any pattern"));
                    }
                    Ok(v)
                };
                let a = side(self)?;
                let ne = if self.eat_sym("!=") {
                    true
                } else {
                    self.sym("=")?;
                    false
                };
                let b = side(self)?;
                conds.push(if ne { Cond::Ne(a, b) } else { Cond::Eq(a, b) });
                if !self.eat_sym(",") {
                    break;
                }
            }
        }
        self.sym("}")?;
        Ok(PatternRule {
            name,
            stage,
            objects,
            conds,
        })
    }

    fn acyclic(&mut self) -> PResult<AcyclicityDecl> {
        self.kw("acyclic")?;
        let class = self.class_ref()?;
        self.sym(".")?;
        let role = self.role_ref(&class)?.name;
        self.sym(";")?;
        Ok(AcyclicityDecl { class, role })
    }

    // ---- hooks -------------------------------------------------------

    fn on_create(&mut self) -> PResult<CreateHook> {
        self.kw("onCreate")?;
        let class = self.class_ref()?;
        self.sym("(")?;
        let this = self.ident()?;
        self.sym(")")?;
        self.sym(":")?;
        let scope = HookScope {
            this: (this.clone(), class.clone()),
            that: None,
        };
        let body = self.formula(&scope)?;
        self.sym(";")?;
        Ok(CreateHook { class, this, body })
    }

    fn on_set_ref(&mut self) -> PResult<SetRefHook> {
        self.kw("onSetRef")?;
        let class = self.class_ref()?;
        self.sym(".")?;
        let role = self.role_ref(&class)?;
        self.sym("(")?;
        let this = self.ident()?;
        self.sym(",")?;
        let that_at = self.pos;
        let that = self.ident()?;
        if that == this {
            return self.err_at(that_at, "owner and element variables must differ");
        }
        self.sym(")")?;
        self.sym(":")?;
        let full = HookScope {
            this: (this.clone(), class.clone()),
            that: Some((that.clone(), role.target.clone())),
        };
        let body = if self.is_kw("empty") && matches!(self.peek_at(1), Tok::Sym("->")) {
            self.pos += 2;
            let owner_only = HookScope {
                this: (this.clone(), class.clone()),
                that: None,
            };
            let empty = self.formula(&owner_only)?;
            self.sym("|")?;
            self.kw("each")?;
            self.sym("->")?;
            let each = self.formula(&full)?;
            SetRefBody::Cases { empty, each }
        } else {
            SetRefBody::Plain(self.formula(&full)?)
        };
        self.sym(";")?;
        Ok(SetRefHook {
            class,
            role: role.name,
            this,
            that,
            body,
        })
    }

    // ---- formulas ----------------------------------------------------

    fn formula(&mut self, sc: &HookScope) -> PResult<Template> {
        let mut parts = vec![self.conjunction(sc)?];
        while self.eat_kw("or") {
            parts.push(self.conjunction(sc)?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { Formula::Or(parts) })
    }

    fn conjunction(&mut self, sc: &HookScope) -> PResult<Template> {
        let mut parts = vec![self.negation(sc)?];
        while self.eat_kw("and") {
            parts.push(self.negation(sc)?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { Formula::And(parts) })
    }

    fn negation(&mut self, sc: &HookScope) -> PResult<Template> {
        if self.eat_kw("not") {
            return Ok(Formula::not(self.negation(sc)?));
        }
        self.literal(sc)
    }

    fn literal(&mut self, sc: &HookScope) -> PResult<Template> {
        if self.eat_kw("true") {
            return Ok(Formula::True);
        }
        if self.eat_kw("false") {
            return Ok(Formula::False);
        }
        if self.is_kw("b") && matches!(self.peek_at(1), Tok::Sym("(")) {
            return Ok(Formula::BoolVar(self.attr_var(sc)?));
        }
        if self.is_sym("(") {
            // Either a parenthesized comparison operand or a parenthesized formula.
            let start = self.pos;
            let as_atom = self.comparison(sc);
            if as_atom.is_ok() {
                return as_atom;
            }
            let atom_end = self.pos;
            self.pos = start;
            self.sym("(")?;
            let inner = self.formula(sc).and_then(|f| self.sym(")").map(|_| f));
            return match (inner, as_atom) {
                (Ok(f), _) => Ok(f),
                (Err(e), Err(a)) => Err(if atom_end > self.pos { a } else { e }),
                (Err(e), Ok(_)) => Err(e),
            };
        }
        self.comparison(sc)
    }

    fn comparison(&mut self, sc: &HookScope) -> PResult<Template> {
        let lhs = self.arith(sc)?;
        let rel = match self.peek() {
            Tok::Sym("<") => Rel::Lt,
            Tok::Sym("<=") => Rel::Le,
            Tok::Sym(">") => Rel::Gt,
            Tok::Sym(">=") => Rel::Ge,
            Tok::Sym("=") => Rel::Eq,
            Tok::Sym("!=") => Rel::Ne,
            _ => return self.expected("a comparison operator"),
        };
        self.pos += 1;
        let rhs = self.arith(sc)?;
        Ok(Formula::Atom(rel, lhs, rhs))
    }

    fn arith(&mut self, sc: &HookScope) -> PResult<NumTerm<TemplateVar>> {
        let mut parts = vec![self.product(sc)?];
        loop {
            if self.eat_sym("+") {
                parts.push(self.product(sc)?);
            } else if self.eat_sym("-") {
                parts.push(NumTerm::Neg(Box::new(self.product(sc)?)));
            } else {
                break;
            }
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { NumTerm::Add(parts) })
    }

    fn product(&mut self, sc: &HookScope) -> PResult<NumTerm<TemplateVar>> {
        let mut parts = vec![self.unary(sc)?];
        while self.eat_sym("*") {
            parts.push(self.unary(sc)?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { NumTerm::Mul(parts) })
    }

    fn unary(&mut self, sc: &HookScope) -> PResult<NumTerm<TemplateVar>> {
        if self.eat_sym("-") {
            if matches!(self.peek(), Tok::Nat(_) | Tok::Decimal(..)) {
                return Ok(match self.number()? {
                    NumTerm::Int(n) => NumTerm::Int(-n),
                    NumTerm::Rat(q) => NumTerm::Rat(-q),
                    _ => unreachable!(),
                });
            }
            return Ok(NumTerm::Neg(Box::new(self.unary(sc)?)));
        }
        self.primary(sc)
    }

    fn number(&mut self) -> PResult<NumTerm<TemplateVar>> {
        let digits = |s: &str| s.parse::<BigInt>().expect("lexer yields digits");
        match self.peek().clone() {
            Tok::Nat(n) => {
                self.pos += 1;
                let num = digits(&n);
                if self.is_sym("/") && matches!(self.peek_at(1), Tok::Nat(_)) {
                    self.pos += 1;
                    let Tok::Nat(d) = self.peek().clone() else { unreachable!() };
                    let den = digits(&d);
                    if den.is_zero() {
                        return self.err_here("division by zero");
                    }
                    self.pos += 1;
                    return Ok(NumTerm::Rat(BigRational::new(num, den)));
                }
                Ok(NumTerm::Int(num))
            }
            Tok::Decimal(a, b) => {
                self.pos += 1;
                let den = BigInt::from(10u32).pow(b.len() as u32);
                let num = digits(&format!("{a}{b}"));
                Ok(NumTerm::Rat(BigRational::new(num, den)))
            }
            _ => self.expected("a number"),
        }
    }

    fn primary(&mut self, sc: &HookScope) -> PResult<NumTerm<TemplateVar>> {
        match self.peek() {
            Tok::Nat(_) | Tok::Decimal(..) => self.number(),
            Tok::Sym("(") => {
                self.pos += 1;
                let t = self.arith(sc)?;
                self.sym(")")?;
                Ok(t)
            }
            Tok::Ident(s) if (s == "i" || s == "r") && matches!(self.peek_at(1), Tok::Sym("(")) => {
                Ok(NumTerm::Var(self.attr_var(sc)?))
            }
            _ => self.expected("a number, `i(..)`, `r(..)` or `(`"),
        }
    }

    /// `i(V, attr)`, `r(V, attr)` or `b(V, attr)`.
    fn attr_var(&mut self, sc: &HookScope) -> PResult<TemplateVar> {
        let kind = match self.ident()?.as_str() {
            "i" => Sort::Int,
            "r" => Sort::Real,
            _ => Sort::Bool,
        };
        self.sym("(")?;
        let var_at = self.pos;
        let var = self.ident()?;
        let (slot, class) = if var == sc.this.0 {
            (Slot::This, sc.this.1.clone())
        } else if let Some((_, c)) = sc.that.as_ref().filter(|(n, _)| n == &var) {
            (Slot::That, c.clone())
        } else {
            return self.err_at(var_at, format!("unknown variable `{var}`"));
        };
        self.sym(",")?;
        let attr_at = self.pos;
        let attr = AttrName::new(self.ident()?);
        self.sym(")")?;
        match self.schema.class(&class).and_then(|c| c.attr_sort(&attr)) {
            None => self.err_at(attr_at, format!("class `{class}` has no attribute `{attr}`")),
            Some(sort) if sort != kind => self.err_at(
                attr_at,
                format!("attribute `{class}.{attr}` has sort {}, not {}", sort.keyword(), kind.keyword()),
            ),
            Some(_) => Ok(TemplateVar { kind, slot, attr }),
        }
    }
}

fn parse_schema(p: &mut Parser<'_>) -> PResult<Schema> {
    p.kw("schema")?;
    p.sym("{")?;
    let mut classes: Vec<ClassDecl> = Vec::new();
    let mut targets: Vec<(ClassId, usize)> = Vec::new();
    while !p.eat_sym("}") {
        p.kw("class")?;
        let name_at = p.pos;
        let name = ClassId::new(p.ident()?);
        if classes.iter().any(|c| c.name == name) {
            return p.err_at(name_at, format!("class `{name}` is declared twice"));
        }
        if p.is_kw("extends") || p.is_sym("<") {
            return p.err_here("subclass relations are not supported");
        }
        p.sym("{")?;
        let mut decl = ClassDecl {
            name,
            roles: Vec::new(),
            attrs: Vec::new(),
        };
        let mut names: BTreeSet<String> = BTreeSet::new();
        while !p.eat_sym("}") {
            let is_ref = if p.eat_kw("ref") {
                true
            } else if p.eat_kw("attr") {
                false
            } else {
                return p.expected("`ref`, `attr` or `}`");
            };
            let member_at = p.pos;
            let member = p.ident()?;
            if !names.insert(member.clone()) {
                return p.err_at(member_at, format!("`{member}` is declared twice in class `{}`", decl.name));
            }
            p.sym(":")?;
            if is_ref {
                let target_at = p.pos;
                let target = ClassId::new(p.ident()?);
                let carrier = match p.peek() {
                    Tok::Sym("!") => Carrier::Single,
                    Tok::Sym("?") => Carrier::Maybe,
                    Tok::Sym("*") => Carrier::Set,
                    Tok::Sym("+") => Carrier::NonEmptySet,
                    _ => return p.expected("a carrier `!`, `?`, `*` or `+`"),
                };
                p.pos += 1;
                targets.push((target.clone(), target_at));
                decl.roles.push(RoleDecl {
                    name: RoleId::new(member),
                    target,
                    carrier,
                });
            } else {
                let sort = match p.ident()?.as_str() {
                    "Int" => Sort::Int,
                    "Bool" => Sort::Bool,
                    "Real" => Sort::Real,
                    _ => return p.err_at(p.pos - 1, "expected `Int`, `Bool` or `Real`"),
                };
                decl.attrs.push((AttrName::new(member), sort));
            }
            p.sym(";")?;
        }
        classes.push(decl);
    }
    for (target, at) in targets {
        if !classes.iter().any(|c| c.name == target) {
            return p.err_at(at, format!("unknown class `{target}`"));
        }
    }
    Ok(Schema { classes })
}

/// Parses DSL text into a [`Spec`].
pub fn parse_spec(text: &str) -> Result<Spec, ParseError> {
    let toks = tokenize(text)?;
    let empty = Schema::default();
    let mut head = Parser {
        toks,
        pos: 0,
        schema: &empty,
    };
    let schema = parse_schema(&mut head)?;
    let mut p = Parser {
        toks: std::mem::take(&mut head.toks),
        pos: head.pos,
        schema: &schema,
    };
    let scope = p.bounds()?;
    let mut rules = Vec::new();
    let mut acyclic = Vec::new();
    let mut hooks = HookSet::default();
    if p.eat_kw("constraints") {
        p.sym("{")?;
        while !p.eat_sym("}") {
            if p.is_kw("forbid") {
                rules.push(p.forbid(&[Stage::Partial, Stage::Full])?);
            } else if p.is_kw("acyclic") {
                acyclic.push(p.acyclic()?);
            } else if p.is_kw("onCreate") {
                hooks.on_create.push(p.on_create()?);
            } else if p.is_kw("onSetRef") {
                hooks.on_set_ref.push(p.on_set_ref()?);
            } else {
                return p.expected("`forbid`, `acyclic`, `onCreate`, `onSetRef` or `}`");
            }
        }
    }
    let mut has_property = false;
    if p.eat_kw("property") {
        has_property = true;
        p.sym("{")?;
        while !p.eat_sym("}") {
            if p.is_kw("forbid") {
                rules.push(p.forbid(&[Stage::Property])?);
            } else if p.is_kw("onCreate") {
                hooks.prop_on_create.push(p.on_create()?);
            } else if p.is_kw("onSetRef") {
                hooks.prop_on_set_ref.push(p.on_set_ref()?);
            } else {
                return p.expected("`forbid`, `onCreate`, `onSetRef` or `}`");
            }
        }
    }
    if !matches!(p.peek(), Tok::Eof) {
        return p.expected("end of input");
    }
    Spec::new(schema, scope, rules, acyclic, hooks, has_property).map_err(|e| ParseError {
        line: 1,
        col: 1,
        message: e.to_string(),
    })
}
