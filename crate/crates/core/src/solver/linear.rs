//! Exact decision procedure for conjunctions of linear constraints over
//! mixed integer and real variables.
//!
//! Real variables are projected away first by Fourier-Motzkin elimination,
//! which is exact over the reals for every value of the remaining variables.
//! The integer remainder is decided by the Omega test: equalities are removed
//! by unimodular substitution, inequalities by exact elimination where all
//! coefficients on one side are unit, and otherwise by real shadow, dark
//! shadow and grey-shadow splinters. Models are rebuilt by back-substitution.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// `Σ coeffs[v]·v + constant`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Lin {
    pub coeffs: BTreeMap<usize, BigRational>,
    pub constant: BigRational,
}

impl Lin {
    pub fn constant(c: BigRational) -> Lin {
        Lin {
            coeffs: BTreeMap::new(),
            constant: c,
        }
    }

    pub fn var(v: usize) -> Lin {
        Lin {
            coeffs: [(v, BigRational::one())].into(),
            constant: BigRational::zero(),
        }
    }

    pub fn add(mut self, other: &Lin) -> Lin {
        for (v, c) in &other.coeffs {
            let entry = self.coeffs.entry(*v).or_insert_with(BigRational::zero);
            *entry += c;
            if entry.is_zero() {
                self.coeffs.remove(v);
            }
        }
        self.constant += &other.constant;
        self
    }

    pub fn scale(mut self, k: &BigRational) -> Lin {
        if k.is_zero() {
            return Lin::constant(BigRational::zero());
        }
        for c in self.coeffs.values_mut() {
            *c *= k;
        }
        self.constant *= k;
        self
    }

    pub fn as_constant(&self) -> Option<&BigRational> {
        self.coeffs.is_empty().then_some(&self.constant)
    }

    fn coeff(&self, v: usize) -> BigRational {
        self.coeffs.get(&v).cloned().unwrap_or_else(BigRational::zero)
    }

    /// Replaces `v` by `by`.
    fn substitute(&self, v: usize, by: &Lin) -> Lin {
        let a = self.coeff(v);
        if a.is_zero() {
            return self.clone();
        }
        let mut rest = self.clone();
        rest.coeffs.remove(&v);
        rest.add(&by.clone().scale(&a))
    }

    fn eval(&self, model: &mut BTreeMap<usize, BigRational>) -> BigRational {
        let mut acc = self.constant.clone();
        for (v, c) in &self.coeffs {
            acc += c * model.entry(*v).or_insert_with(BigRational::zero).clone();
        }
        acc
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Kind {
    /// `expr >= 0`
    Ge,
    /// `expr > 0`
    Gt,
    /// `expr = 0`
    Eq,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Constraint {
    pub lin: Lin,
    pub kind: Kind,
}

impl Constraint {
    /// `Some(truth)` when the constraint has no variables.
    fn ground(&self) -> Option<bool> {
        let c = self.lin.as_constant()?;
        Some(match self.kind {
            Kind::Ge => !c.is_negative(),
            Kind::Gt => c.is_positive(),
            Kind::Eq => c.is_zero(),
        })
    }
}

enum RealStep {
    Subst(usize, Lin),
    Bounds {
        var: usize,
        lower: Vec<(Lin, bool)>,
        upper: Vec<(Lin, bool)>,
    },
}

/// Drops tautologies; `None` on a ground contradiction.
fn simplify(cs: Vec<Constraint>) -> Option<Vec<Constraint>> {
    let mut out = Vec::with_capacity(cs.len());
    for c in cs {
        match c.ground() {
            Some(true) => {}
            Some(false) => return None,
            None => out.push(c),
        }
    }
    out.sort();
    out.dedup();
    Some(out)
}

/// A model of the conjunction, or `None` if it is unsatisfiable.
/// `is_int[v]` gives the sort of variable `v`.
pub fn solve(cs: &[Constraint], is_int: &[bool]) -> Option<BTreeMap<usize, BigRational>> {
    let mut system = simplify(cs.to_vec())?;
    let mut steps = Vec::new();
    while let Some(x) = system
        .iter()
        .flat_map(|c| c.lin.coeffs.keys())
        .copied()
        .find(|v| !is_int[*v])
    {
        if let Some(pos) = system
            .iter()
            .position(|c| c.kind == Kind::Eq && c.lin.coeffs.contains_key(&x))
        {
            let eq = system.swap_remove(pos);
            let a = eq.lin.coeff(x);
            let mut rest = eq.lin.clone();
            rest.coeffs.remove(&x);
            let by = rest.scale(&(-a.recip()));
            system = simplify(
                system
                    .into_iter()
                    .map(|c| Constraint {
                        lin: c.lin.substitute(x, &by),
                        kind: c.kind,
                    })
                    .collect(),
            )?;
            steps.push(RealStep::Subst(x, by));
            continue;
        }
        let mut lower = Vec::new();
        let mut upper = Vec::new();
        let mut kept = Vec::new();
        for c in system {
            let a = c.lin.coeff(x);
            if a.is_zero() {
                kept.push(c);
                continue;
            }
            // a·x + e ⋈ 0  gives  x ⋈' -e/a.
            let mut e = c.lin.clone();
            e.coeffs.remove(&x);
            let bound = e.scale(&(-a.recip()));
            let strict = c.kind == Kind::Gt;
            if a.is_positive() {
                lower.push((bound, strict));
            } else {
                upper.push((bound, strict));
            }
        }
        for (l, ls) in &lower {
            for (u, us) in &upper {
                // l ⋈ x ⋈ u  projects to  u - l ⋈ 0.
                let lin = u.clone().add(&l.clone().scale(&-BigRational::one()));
                let kind = if *ls || *us { Kind::Gt } else { Kind::Ge };
                kept.push(Constraint { lin, kind });
            }
        }
        system = simplify(kept)?;
        steps.push(RealStep::Bounds { var: x, lower, upper });
    }

    let ints = to_integer_system(&system);
    let mut next = is_int.len();
    let int_model = omega(ints.0, ints.1, &mut next)?;
    let mut model: BTreeMap<usize, BigRational> = int_model
        .into_iter()
        .filter(|(v, _)| *v < is_int.len())
        .map(|(v, n)| (v, BigRational::from_integer(n)))
        .collect();
    for step in steps.into_iter().rev() {
        match step {
            RealStep::Subst(x, by) => {
                let value = by.eval(&mut model);
                model.insert(x, value);
            }
            RealStep::Bounds { var, lower, upper } => {
                let value = pick_real(&lower, &upper, &mut model);
                model.insert(var, value);
            }
        }
    }
    for (v, int) in is_int.iter().enumerate() {
        if *int {
            model.entry(v).or_insert_with(BigRational::zero);
        }
    }
    Some(model)
}

fn pick_real(
    lower: &[(Lin, bool)],
    upper: &[(Lin, bool)],
    model: &mut BTreeMap<usize, BigRational>,
) -> BigRational {
    let tightest = |bounds: &[(Lin, bool)], model: &mut BTreeMap<usize, BigRational>, lower: bool| {
        let mut best: Option<(BigRational, bool)> = None;
        for (b, strict) in bounds {
            let v = b.eval(model);
            best = Some(match best {
                None => (v, *strict),
                Some((w, s)) if w == v => (w, s || *strict),
                Some((w, s)) => {
                    if (v > w) == lower {
                        (v, *strict)
                    } else {
                        (w, s)
                    }
                }
            });
        }
        best
    };
    let lo = tightest(lower, model, true);
    let hi = tightest(upper, model, false);
    match (lo, hi) {
        (Some((l, _)), Some((h, _))) if l < h => (l + h) / BigRational::from_integer(2.into()),
        (Some((l, _)), Some(_)) => l,
        (Some((l, strict)), None) => {
            if strict {
                l + BigRational::one()
            } else {
                l
            }
        }
        (None, Some((h, strict))) => {
            if strict {
                h - BigRational::one()
            } else {
                h
            }
        }
        (None, None) => BigRational::zero(),
    }
}

/// Integer linear form `Σ coeffs[v]·v + c`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct IntLin {
    coeffs: BTreeMap<usize, BigInt>,
    c: BigInt,
}

impl IntLin {
    fn coeff(&self, v: usize) -> BigInt {
        self.coeffs.get(&v).cloned().unwrap_or_else(BigInt::zero)
    }

    fn scale(&self, k: &BigInt) -> IntLin {
        IntLin {
            coeffs: self.coeffs.iter().map(|(v, a)| (*v, a * k)).collect(),
            c: &self.c * k,
        }
    }

    fn add(mut self, other: &IntLin) -> IntLin {
        for (v, a) in &other.coeffs {
            let e = self.coeffs.entry(*v).or_insert_with(BigInt::zero);
            *e += a;
            if e.is_zero() {
                self.coeffs.remove(v);
            }
        }
        self.c += &other.c;
        self
    }

    fn substitute(&self, v: usize, by: &IntLin) -> IntLin {
        let a = self.coeff(v);
        if a.is_zero() {
            return self.clone();
        }
        let mut rest = self.clone();
        rest.coeffs.remove(&v);
        rest.add(&by.scale(&a))
    }

    fn eval(&self, model: &mut BTreeMap<usize, BigInt>) -> BigInt {
        let mut acc = self.c.clone();
        for (v, a) in &self.coeffs {
            acc += a * model.entry(*v).or_insert_with(BigInt::zero).clone();
        }
        acc
    }

    fn gcd(&self) -> BigInt {
        self.coeffs
            .values()
            .fold(BigInt::zero(), |g, a| g.gcd(a))
    }
}

fn to_integer_system(cs: &[Constraint]) -> (Vec<IntLin>, Vec<IntLin>) {
    let mut eqs = Vec::new();
    let mut geqs = Vec::new();
    for c in cs {
        let lcm = c
            .lin
            .coeffs
            .values()
            .chain(std::iter::once(&c.lin.constant))
            .fold(BigInt::one(), |l, q| l.lcm(q.denom()));
        let scale = |q: &BigRational| (q * BigRational::from_integer(lcm.clone())).to_integer();
        let mut lin = IntLin {
            coeffs: c.lin.coeffs.iter().map(|(v, q)| (*v, scale(q))).collect(),
            c: scale(&c.lin.constant),
        };
        match c.kind {
            Kind::Eq => eqs.push(lin),
            Kind::Ge => geqs.push(lin),
            Kind::Gt => {
                lin.c -= BigInt::one();
                geqs.push(lin);
            }
        }
    }
    (eqs, geqs)
}

fn normalize_eq(mut e: IntLin) -> Option<Option<IntLin>> {
    let g = e.gcd();
    if g.is_zero() {
        return if e.c.is_zero() { Some(None) } else { None };
    }
    if !(&e.c % &g).is_zero() {
        return None;
    }
    for a in e.coeffs.values_mut() {
        *a /= &g;
    }
    e.c /= &g;
    Some(Some(e))
}

fn normalize_geq(mut e: IntLin) -> Option<Option<IntLin>> {
    let g = e.gcd();
    if g.is_zero() {
        return if e.c.is_negative() { None } else { Some(None) };
    }
    for a in e.coeffs.values_mut() {
        *a /= &g;
    }
    e.c = e.c.div_floor(&g);
    Some(Some(e))
}

fn ceil_div(p: &BigInt, q: &BigInt) -> BigInt {
    -((-p).div_floor(q))
}

/// Omega test. Returns a model for every variable occurring in the system.
fn omega(eqs: Vec<IntLin>, geqs: Vec<IntLin>, next: &mut usize) -> Option<BTreeMap<usize, BigInt>> {
    let mut eqs_n = Vec::new();
    for e in eqs {
        if let Some(e) = normalize_eq(e)? {
            eqs_n.push(e);
        }
    }
    // Keep only the tightest constant per coefficient vector.
    let mut tight: BTreeMap<BTreeMap<usize, BigInt>, BigInt> = BTreeMap::new();
    for g in geqs {
        if let Some(g) = normalize_geq(g)? {
            tight
                .entry(g.coeffs)
                .and_modify(|c| {
                    if g.c < *c {
                        *c = g.c.clone()
                    }
                })
                .or_insert(g.c);
        }
    }
    // Opposite pairs a·x + c ≥ 0 and -a·x + d ≥ 0 need c + d ≥ 0.
    for (coeffs, c) in &tight {
        let neg: BTreeMap<usize, BigInt> = coeffs.iter().map(|(v, a)| (*v, -a)).collect();
        if let Some(d) = tight.get(&neg) {
            if (c + d).is_negative() {
                return None;
            }
        }
    }
    let mut geqs: Vec<IntLin> = tight.into_iter().map(|(coeffs, c)| IntLin { coeffs, c }).collect();

    if let Some(eq) = eqs_n.pop() {
        let (k, ak) = eq
            .coeffs
            .iter()
            .min_by_key(|(_, a)| a.abs())
            .map(|(k, a)| (*k, a.clone()))
            .unwrap();
        if ak.abs().is_one() {
            // x_k = -(rest)/a_k with a_k = ±1.
            let mut rest = eq.clone();
            rest.coeffs.remove(&k);
            let by = rest.scale(&-&ak);
            let sub = |e: &IntLin| e.substitute(k, &by);
            let eqs2 = eqs_n.iter().map(sub).collect();
            geqs = geqs.iter().map(sub).collect();
            let mut model = omega(eqs2, geqs, next)?;
            let value = by.eval(&mut model);
            model.insert(k, value);
            return Some(model);
        }
        // Unimodular step: x_k = t - Σ q_i·x_i - q_c with q = floor(a / a_k),
        // leaving remainders strictly smaller than |a_k| in the equality.
        let eq = if ak.is_negative() { eq.scale(&-BigInt::one()) } else { eq };
        let m = eq.coeff(k);
        let t = *next;
        *next += 1;
        let mut by = IntLin {
            coeffs: [(t, BigInt::one())].into(),
            c: -eq.c.div_floor(&m),
        };
        for (v, a) in &eq.coeffs {
            if *v != k {
                let q = a.div_floor(&m);
                if !q.is_zero() {
                    by.coeffs.insert(*v, -q);
                }
            }
        }
        let sub = |e: &IntLin| e.substitute(k, &by);
        let mut eqs2: Vec<IntLin> = eqs_n.iter().map(sub).collect();
        eqs2.push(sub(&eq));
        geqs = geqs.iter().map(sub).collect();
        let mut model = omega(eqs2, geqs, next)?;
        let value = by.eval(&mut model);
        model.insert(k, value);
        return Some(model);
    }

    if geqs.is_empty() {
        return Some(BTreeMap::new());
    }

    // Choose the variable to eliminate.
    let mut vars: BTreeMap<usize, (usize, usize, bool, bool)> = BTreeMap::new();
    for g in &geqs {
        for (v, a) in &g.coeffs {
            let e = vars.entry(*v).or_insert((0, 0, true, true));
            if a.is_positive() {
                e.0 += 1;
                e.2 &= a.is_one();
            } else {
                e.1 += 1;
                e.3 &= (-a).is_one();
            }
        }
    }
    let (&x, &(nl, nu, unit_lo, unit_hi)) = vars
        .iter()
        .min_by_key(|(_, (nl, nu, ul, uh))| {
            let one_sided = *nl == 0 || *nu == 0;
            (!one_sided, !(*ul || *uh), nl * nu)
        })
        .unwrap();
    let (mut lower, mut upper, mut others) = (Vec::new(), Vec::new(), Vec::new());
    for g in &geqs {
        let a = g.coeff(x);
        if a.is_positive() {
            lower.push(g.clone());
        } else if a.is_negative() {
            upper.push(g.clone());
        } else {
            others.push(g.clone());
        }
    }

    let pick = |model: &mut BTreeMap<usize, BigInt>| -> BigInt {
        let lo = lower
            .iter()
            .map(|g| {
                let a = g.coeff(x);
                let mut rest = g.clone();
                rest.coeffs.remove(&x);
                ceil_div(&-rest.eval(model), &a)
            })
            .max();
        let hi = upper
            .iter()
            .map(|g| {
                let b = -g.coeff(x);
                let mut rest = g.clone();
                rest.coeffs.remove(&x);
                rest.eval(model).div_floor(&b)
            })
            .min();
        match (lo, hi) {
            (Some(l), _) => l,
            (None, Some(h)) => h,
            (None, None) => BigInt::zero(),
        }
    };

    if nl == 0 || nu == 0 {
        let mut model = omega(Vec::new(), others, next)?;
        let value = pick(&mut model);
        model.insert(x, value);
        return Some(model);
    }

    let shadow = |dark: bool| -> Vec<IntLin> {
        let mut out = others.clone();
        for l in &lower {
            let a = l.coeff(x);
            for u in &upper {
                let b = -u.coeff(x);
                let mut combined = l.scale(&b).add(&u.scale(&a));
                combined.coeffs.remove(&x);
                if dark {
                    combined.c -= (&a - 1) * (&b - 1);
                }
                out.push(combined);
            }
        }
        out
    };

    if unit_lo || unit_hi {
        let mut model = omega(Vec::new(), shadow(false), next)?;
        let value = pick(&mut model);
        model.insert(x, value);
        return Some(model);
    }
    omega(Vec::new(), shadow(false), next)?;
    if let Some(mut model) = omega(Vec::new(), shadow(true), next) {
        let value = pick(&mut model);
        model.insert(x, value);
        return Some(model);
    }
    // Grey shadow: any integer solution outside the dark shadow lies close
    // to some lower bound, so try each such splinter as an equality.
    let amax = upper.iter().map(|u| -u.coeff(x)).max().unwrap();
    for l in &lower {
        let a = l.coeff(x);
        let limit = (&amax * &a - &a - &amax).div_floor(&amax);
        let mut i = BigInt::zero();
        while i <= limit {
            let mut eq = l.clone();
            eq.c -= &i;
            if let Some(model) = omega(vec![eq], geqs.clone(), next) {
                return Some(model);
            }
            i += 1;
        }
    }
    None
}
