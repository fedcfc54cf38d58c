//! Satisfiability and entailment of ground constraints.

mod internal;
mod linear;
pub mod smtlib;

use std::collections::HashMap;

use thiserror::Error;

use crate::constraint::{simp, Formula, Valuation, Value};

pub use internal::{decide, InternalBackend};
pub use smtlib::ExternalBackend;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SatResult {
    Sat(Valuation),
    Unsat,
    Unknown(String),
}

impl SatResult {
    pub fn is_sat(&self) -> bool {
        matches!(self, SatResult::Sat(_))
    }

    pub fn is_unsat(&self) -> bool {
        matches!(self, SatResult::Unsat)
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum SolverError {
    #[error("nonlinear term `{0}` is outside the internal backend's fragment")]
    Nonlinear(String),
    #[error("solver process: {0}")]
    Process(String),
    #[error("malformed solver response: {0}")]
    Protocol(String),
    #[error("internal solver error: {0}")]
    Internal(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BackendChoice {
    Internal,
    External { command: String, timeout_ms: u64 },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolverConfig {
    pub backend: BackendChoice,
    pub cache: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            backend: BackendChoice::Internal,
            cache: true,
        }
    }
}

/// Command used for the external backend when none is given.
pub fn default_external_command() -> String {
    std::env::var("MMF_SMT_CMD").unwrap_or_else(|_| "z3 -in".to_string())
}

pub trait Backend {
    fn check(&mut self, f: &Formula) -> Result<SatResult, SolverError>;
}

/// A solver session: one backend plus a result cache keyed by the
/// canonical text of each query. All engine queries go through one session.
pub struct Solver {
    backend: Box<dyn Backend>,
    cache: Option<HashMap<String, SatResult>>,
    pub queries: u64,
    pub cache_hits: u64,
}

impl Solver {
    pub fn new(config: &SolverConfig) -> Solver {
        let backend: Box<dyn Backend> = match &config.backend {
            BackendChoice::Internal => Box::new(InternalBackend),
            BackendChoice::External { command, timeout_ms } => {
                Box::new(ExternalBackend::new(command.clone(), *timeout_ms))
            }
        };
        Solver::with_backend(backend, config.cache)
    }

    pub fn with_backend(backend: Box<dyn Backend>, cache: bool) -> Solver {
        Solver {
            backend,
            cache: cache.then(HashMap::new),
            queries: 0,
            cache_hits: 0,
        }
    }

    pub fn internal() -> Solver {
        Solver::new(&SolverConfig::default())
    }

    /// Models cover every free variable of `f`, including those `simp`
    /// removed; those get their sort's default value.
    pub fn is_sat(&mut self, f: &Formula) -> Result<SatResult, SolverError> {
        Ok(match self.is_sat_simplified(&simp(f))? {
            SatResult::Sat(mut m) => {
                for v in f.free_vars() {
                    m.entry(v.clone()).or_insert_with(|| Value::default_for(v.kind));
                }
                SatResult::Sat(m)
            }
            other => other,
        })
    }

    fn is_sat_simplified(&mut self, f: &Formula) -> Result<SatResult, SolverError> {
        match f {
            Formula::True => return Ok(SatResult::Sat(Valuation::new())),
            Formula::False => return Ok(SatResult::Unsat),
            _ => {}
        }
        self.queries += 1;
        let key = f.to_string();
        if let Some(hit) = self.cache.as_ref().and_then(|c| c.get(&key)) {
            self.cache_hits += 1;
            return Ok(hit.clone());
        }
        let r = self.backend.check(f)?;
        // A timeout may succeed on retry, so only definite answers are kept.
        if let (Some(c), false) = (self.cache.as_mut(), matches!(r, SatResult::Unknown(_))) {
            c.insert(key, r.clone());
        }
        Ok(r)
    }

    /// `f2 ⊨ f1`, i.e. `f2 ∧ ¬f1` is unsat. Unknown counts as not entailed.
    pub fn entails(&mut self, f2: &Formula, f1: &Formula) -> Result<bool, SolverError> {
        let q = Formula::and([f2.clone(), Formula::not(f1.clone())]);
        Ok(self.is_sat(&q)?.is_unsat())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraint::{eval, NumTerm, Rel, SymVar, Value};
    use crate::model::{ClassId, Oid};

    fn x(i: u32) -> NumTerm {
        NumTerm::Var(SymVar::int(Oid::new(ClassId::new("Employee"), 2, i, "e"), "level"))
    }

    fn a(r: Rel, t: NumTerm, n: i64) -> Formula {
        Formula::atom(r, t, NumTerm::int(n))
    }

    #[test]
    fn level_range_with_zero() {
        let f = Formula::and([a(Rel::Ge, x(1), 0), a(Rel::Lt, x(1), 3), a(Rel::Eq, x(1), 0)]);
        let SatResult::Sat(m) = Solver::internal().is_sat(&f).unwrap() else { panic!() };
        assert_eq!(m.values().next(), Some(&Value::Int(0.into())));
    }

    #[test]
    fn empty_interval_is_unsat() {
        let f = Formula::and([a(Rel::Lt, x(1), 0), a(Rel::Ge, x(1), 0)]);
        assert!(Solver::internal().is_sat(&f).unwrap().is_unsat());
    }

    #[test]
    fn manager_chain_levels() {
        // ceo=e1 (level 0), e2 managed by e1, both in 0..2.
        let range = |i| Formula::and([a(Rel::Ge, x(i), 0), a(Rel::Lt, x(i), 3)]);
        let f = Formula::and([
            range(1),
            range(2),
            a(Rel::Eq, x(1), 0),
            Formula::atom(Rel::Lt, x(1), x(2)),
        ]);
        let SatResult::Sat(m) = Solver::internal().is_sat(&f).unwrap() else { panic!() };
        assert_eq!(eval(&f, &m), Ok(true));
        // Finite-domain enumeration: levels (0, 1) and (0, 2) both qualify.
        let cyclic = Formula::and([f.clone(), Formula::atom(Rel::Lt, x(2), x(1))]);
        assert!(Solver::internal().is_sat(&cyclic).unwrap().is_unsat());
    }

    #[test]
    fn entailment_examples() {
        let mut s = Solver::internal();
        let eq0 = a(Rel::Eq, x(1), 0);
        let range = Formula::and([a(Rel::Ge, x(1), 0), a(Rel::Lt, x(1), 3)]);
        assert!(s.entails(&eq0, &range).unwrap());
        assert!(!s.entails(&a(Rel::Ge, x(1), 0), &eq0).unwrap());
        assert!(s.entails(&range, &range).unwrap());
    }

    #[test]
    fn nonlinear_products_are_rejected() {
        let f = Formula::atom(Rel::Gt, NumTerm::Mul(vec![x(1), x(2)]), NumTerm::int(0));
        assert!(matches!(Solver::internal().is_sat(&f), Err(SolverError::Nonlinear(_))));
    }

    #[test]
    fn cache_is_transparent() {
        let f = Formula::or([a(Rel::Eq, x(1), 4), a(Rel::Ne, x(2), 1)]);
        let mut cached = Solver::internal();
        let mut plain = Solver::new(&SolverConfig {
            backend: BackendChoice::Internal,
            cache: false,
        });
        let first = cached.is_sat(&f).unwrap();
        assert_eq!(cached.is_sat(&f).unwrap(), first);
        assert_eq!(plain.is_sat(&f).unwrap(), first);
        assert_eq!(cached.cache_hits, 1);
    }
}
