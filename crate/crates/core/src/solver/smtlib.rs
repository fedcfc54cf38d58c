//! SMT-LIB v2 serialization, model parsing and a child-process client.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed};

use super::{Backend, SatResult, SolverError};
use crate::constraint::{sort_letter, Formula, NumTerm, SymVar, Value, Valuation};
use crate::model::Sort;

/// Query text together with the constant name chosen for each variable.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SmtQuery {
    pub text: String,
    pub names: BTreeMap<String, SymVar>,
}

fn mangle(v: &SymVar) -> String {
    format!("{}_{}_{}", sort_letter(v.kind), v.owner, v.attr)
}

fn sort_name(s: Sort) -> &'static str {
    match s {
        Sort::Int => "Int",
        Sort::Bool => "Bool",
        Sort::Real => "Real",
    }
}

fn rational(q: &BigRational) -> String {
    let lit = |n: &BigInt| {
        if n.is_negative() {
            format!("(- {}.0)", -n)
        } else {
            format!("{n}.0")
        }
    };
    if q.denom().is_one() {
        lit(q.numer())
    } else {
        format!("(/ {} {}.0)", lit(q.numer()), q.denom())
    }
}

fn int(n: &BigInt) -> String {
    if n.is_negative() {
        format!("(- {})", -n)
    } else {
        n.to_string()
    }
}

fn has_real(t: &NumTerm) -> bool {
    match t {
        NumTerm::Int(_) => false,
        NumTerm::Rat(_) => true,
        NumTerm::Var(v) => v.kind == Sort::Real,
        NumTerm::Neg(t) => has_real(t),
        NumTerm::Add(ts) | NumTerm::Mul(ts) => ts.iter().any(has_real),
    }
}

struct Printer<'a> {
    names: &'a BTreeMap<SymVar, String>,
}

impl Printer<'_> {
    fn term(&self, t: &NumTerm, real: bool, out: &mut String) {
        let nary = |op: &str, ts: &[NumTerm], out: &mut String| {
            out.push('(');
            out.push_str(op);
            for t in ts {
                out.push(' ');
                self.term(t, real, out);
            }
            out.push(')');
        };
        match t {
            NumTerm::Int(n) if real => out.push_str(&rational(&BigRational::from_integer(n.clone()))),
            NumTerm::Int(n) => out.push_str(&int(n)),
            NumTerm::Rat(q) => out.push_str(&rational(q)),
            NumTerm::Var(v) => {
                let name = format!("|{}|", self.names[v]);
                if real && v.kind == Sort::Int {
                    let _ = write!(out, "(to_real {name})");
                } else {
                    out.push_str(&name);
                }
            }
            NumTerm::Neg(t) => {
                out.push_str("(- ");
                self.term(t, real, out);
                out.push(')');
            }
            NumTerm::Add(ts) => nary("+", ts, out),
            NumTerm::Mul(ts) => nary("*", ts, out),
        }
    }

    fn formula(&self, f: &Formula, out: &mut String) {
        match f {
            Formula::True => out.push_str("true"),
            Formula::False => out.push_str("false"),
            Formula::BoolVar(v) => {
                let _ = write!(out, "|{}|", self.names[v]);
            }
            Formula::Not(g) => {
                out.push_str("(not ");
                self.formula(g, out);
                out.push(')');
            }
            Formula::Atom(rel, a, b) => {
                let real = has_real(a) || has_real(b);
                let op = match rel {
                    crate::constraint::Rel::Lt => "<",
                    crate::constraint::Rel::Le => "<=",
                    crate::constraint::Rel::Gt => ">",
                    crate::constraint::Rel::Ge => ">=",
                    crate::constraint::Rel::Eq | crate::constraint::Rel::Ne => "=",
                };
                let ne = *rel == crate::constraint::Rel::Ne;
                if ne {
                    out.push_str("(not ");
                }
                let _ = write!(out, "({op} ");
                self.term(a, real, out);
                out.push(' ');
                self.term(b, real, out);
                out.push(')');
                if ne {
                    out.push(')');
                }
            }
            Formula::And(gs) | Formula::Or(gs) => {
                out.push_str(if matches!(f, Formula::And(_)) { "(and" } else { "(or" });
                for g in gs {
                    out.push(' ');
                    self.formula(g, out);
                }
                out.push(')');
            }
        }
    }
}

/// Serializes one satisfiability query ending in `(check-sat)`.
pub fn to_smt_text(f: &Formula) -> SmtQuery {
    let mut by_var = BTreeMap::new();
    let mut names = BTreeMap::new();
    let mut taken = BTreeSet::new();
    for v in f.free_vars() {
        let base = mangle(&v);
        let mut name = base.clone();
        let mut k = 2;
        while !taken.insert(name.clone()) {
            name = format!("{base}_{k}");
            k += 1;
        }
        names.insert(name.clone(), v.clone());
        by_var.insert(v, name);
    }
    let mut text = String::from("(set-option :produce-models true)\n(set-logic QF_LIRA)\n");
    for (v, name) in &by_var {
        let _ = writeln!(text, "(declare-const |{name}| {})", sort_name(v.kind));
    }
    text.push_str("(assert ");
    Printer { names: &by_var }.formula(f, &mut text);
    text.push_str(")\n(check-sat)\n");
    SmtQuery { text, names }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Sexp {
    Atom(String),
    List(Vec<Sexp>),
}

fn parse_sexps(text: &str) -> Result<Vec<Sexp>, SolverError> {
    let malformed = |m: &str| SolverError::Protocol(format!("{m} in `{text}`"));
    let mut stack: Vec<Vec<Sexp>> = vec![Vec::new()];
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '(' => stack.push(Vec::new()),
            ')' => {
                let done = stack.pop().filter(|_| !stack.is_empty()).ok_or_else(|| malformed("unbalanced `)`"))?;
                stack.last_mut().unwrap().push(Sexp::List(done));
            }
            '|' => {
                let mut s = String::new();
                loop {
                    match chars.next() {
                        Some('|') => break,
                        Some(c) => s.push(c),
                        None => return Err(malformed("unterminated `|`")),
                    }
                }
                stack.last_mut().unwrap().push(Sexp::Atom(s));
            }
            ';' => {
                for c in chars.by_ref() {
                    if c == '\n' {
                        break;
                    }
                }
            }
            c if c.is_whitespace() => {}
            c => {
                let mut s = String::from(c);
                while let Some(&d) = chars.peek() {
                    if d.is_whitespace() || d == '(' || d == ')' {
                        break;
                    }
                    s.push(d);
                    chars.next();
                }
                stack.last_mut().unwrap().push(Sexp::Atom(s));
            }
        }
    }
    if stack.len() != 1 {
        return Err(malformed("unbalanced `(`"));
    }
    Ok(stack.pop().unwrap())
}

fn numeral(s: &str) -> Option<BigRational> {
    if let Some((a, b)) = s.split_once('.') {
        let digits = format!("{a}{b}");
        let n: BigInt = digits.parse().ok()?;
        let d = num_traits::pow(BigInt::from(10), b.len());
        Some(BigRational::new(n, d))
    } else {
        s.parse::<BigInt>().ok().map(BigRational::from_integer)
    }
}

fn value_of(e: &Sexp) -> Option<BigRational> {
    match e {
        Sexp::Atom(s) => numeral(s),
        Sexp::List(xs) => match xs.as_slice() {
            [Sexp::Atom(op), x] if op == "-" => value_of(x).map(|q| -q),
            [Sexp::Atom(op), x, y] if op == "/" => {
                let d = value_of(y)?;
                (!num_traits::Zero::is_zero(&d)).then(|| value_of(x).map(|n| n / d))?
            }
            [Sexp::Atom(op), x] if op == "to_real" => value_of(x),
            _ => None,
        },
    }
}

fn collect_defs<'a>(e: &'a Sexp, out: &mut Vec<&'a [Sexp]>) {
    if let Sexp::List(xs) = e {
        if matches!(xs.first(), Some(Sexp::Atom(h)) if h == "define-fun") {
            out.push(xs);
        } else {
            for x in xs {
                collect_defs(x, out);
            }
        }
    }
}

/// Reads `define-fun` forms of a model response. Constants not listed in
/// `names` are interpreted by their mangled form only when unambiguous,
/// so callers should pass the names returned by [`to_smt_text`].
pub fn parse_model(text: &str, names: &BTreeMap<String, SymVar>) -> Result<Valuation, SolverError> {
    let sexps = parse_sexps(text)?;
    let mut defs = Vec::new();
    for e in &sexps {
        collect_defs(e, &mut defs);
    }
    let mut model = Valuation::new();
    for d in defs {
        let bad = || SolverError::Protocol(format!("unreadable model entry `{}`", show(&Sexp::List(d.to_vec()))));
        let [_, Sexp::Atom(name), Sexp::List(params), Sexp::Atom(sort), value] = d else {
            return Err(bad());
        };
        if !params.is_empty() {
            continue;
        }
        let Some(var) = names.get(name) else { continue };
        let v = match sort.as_str() {
            "Bool" => match value {
                Sexp::Atom(b) if b == "true" => Value::Bool(true),
                Sexp::Atom(b) if b == "false" => Value::Bool(false),
                _ => return Err(bad()),
            },
            "Int" => {
                let q = value_of(value).ok_or_else(bad)?;
                if !q.is_integer() {
                    return Err(bad());
                }
                Value::Int(q.to_integer())
            }
            "Real" => Value::Real(value_of(value).ok_or_else(bad)?),
            _ => return Err(bad()),
        };
        if v.sort() != var.kind {
            return Err(bad());
        }
        model.insert(var.clone(), v);
    }
    Ok(model)
}

fn show(e: &Sexp) -> String {
    match e {
        Sexp::Atom(s) => s.clone(),
        Sexp::List(xs) => format!("({})", xs.iter().map(show).collect::<Vec<_>>().join(" ")),
    }
}

struct Process {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<String>,
}

impl Process {
    fn spawn(command: &str) -> Result<Process, SolverError> {
        let mut parts = command.split_whitespace();
        let program = parts
            .next()
            .ok_or_else(|| SolverError::Process("empty solver command".into()))?;
        let mut child = Command::new(program)
            .args(parts)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| SolverError::Process(format!("cannot start `{command}`: {e}")))?;
        let stdin = child.stdin.take().unwrap();
        let stdout = child.stdout.take().unwrap();
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let Ok(line) = line else { break };
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(Process { child, stdin, lines: rx })
    }

    fn send(&mut self, text: &str) -> Result<(), SolverError> {
        self.stdin
            .write_all(text.as_bytes())
            .and_then(|_| self.stdin.flush())
            .map_err(|e| SolverError::Process(format!("write to solver failed: {e}")))
    }

    fn line(&self, deadline: Instant) -> Result<Option<String>, SolverError> {
        let wait = deadline.saturating_duration_since(Instant::now());
        match self.lines.recv_timeout(wait) {
            Ok(l) => Ok(Some(l)),
            Err(RecvTimeoutError::Timeout) => Ok(None),
            Err(RecvTimeoutError::Disconnected) => Err(SolverError::Process("solver exited".into())),
        }
    }
}

impl Drop for Process {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// External solver speaking SMT-LIB v2 over standard input and output.
/// The child is started lazily and restarted after a timeout.
pub struct ExternalBackend {
    command: String,
    timeout: Duration,
    process: Option<Process>,
}

impl ExternalBackend {
    pub fn new(command: impl Into<String>, timeout_ms: u64) -> ExternalBackend {
        ExternalBackend {
            command: command.into(),
            timeout: Duration::from_millis(timeout_ms),
            process: None,
        }
    }

    fn query(&mut self, q: &SmtQuery) -> Result<SatResult, SolverError> {
        if self.process.is_none() {
            self.process = Some(Process::spawn(&self.command)?);
        }
        let p = self.process.as_mut().unwrap();
        let deadline = Instant::now() + self.timeout;
        p.send(&q.text)?;
        let answer = loop {
            match p.line(deadline)? {
                None => {
                    self.process = None;
                    return Ok(SatResult::Unknown("timeout".into()));
                }
                Some(l) if l.trim().is_empty() => continue,
                Some(l) => break l.trim().to_string(),
            }
        };
        let result = match answer.as_str() {
            "unsat" => SatResult::Unsat,
            "unknown" => SatResult::Unknown("solver returned unknown".into()),
            "sat" => {
                p.send("(get-model)\n")?;
                let mut text = String::new();
                let mut depth = 0i64;
                let mut opened = false;
                loop {
                    let Some(l) = p.line(deadline)? else {
                        self.process = None;
                        return Ok(SatResult::Unknown("timeout".into()));
                    };
                    for c in l.chars() {
                        match c {
                            '(' => {
                                depth += 1;
                                opened = true;
                            }
                            ')' => depth -= 1,
                            _ => {}
                        }
                    }
                    text.push_str(&l);
                    text.push('\n');
                    if opened && depth <= 0 {
                        break;
                    }
                }
                if text.trim_start().starts_with("(error") {
                    return Err(SolverError::Protocol(text));
                }
                let mut model = parse_model(&text, &q.names)?;
                for v in q.names.values() {
                    model.entry(v.clone()).or_insert_with(|| Value::default_for(v.kind));
                }
                SatResult::Sat(model)
            }
            other => return Err(SolverError::Protocol(format!("unexpected response `{other}`"))),
        };
        p.send("(reset)\n")?;
        Ok(result)
    }
}

impl Backend for ExternalBackend {
    fn check(&mut self, f: &Formula) -> Result<SatResult, SolverError> {
        self.query(&to_smt_text(f))
    }
}
