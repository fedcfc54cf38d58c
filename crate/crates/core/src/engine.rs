//! The exploration loop: worklist selection, exact deduplication,
//! admissibility pruning, folding against a covering antichain of normal
//! forms, and solution recording.

use std::collections::{BTreeMap, HashSet};
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::calculus::{Calculus, Measure, Mode, Phase, RuntimeState};
use crate::constraint::{Formula, Valuation};
use crate::model::Graph;
use crate::solver::{Solver, SolverError};
use crate::spec::Spec;
use crate::structural::Violation;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Quantity {
    All,
    First,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Options {
    pub symbolic_filtering: bool,
    pub folding: bool,
    pub indexing: bool,
    pub remove_redundant: bool,
    pub heuristic_pq: bool,
    pub timeout_ms: Option<u64>,
    pub quantity: Quantity,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            symbolic_filtering: true,
            folding: true,
            indexing: true,
            remove_redundant: true,
            heuristic_pq: false,
            timeout_ms: None,
            quantity: Quantity::All,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Profiler {
    pub ms: u64,
    /// Rule applications, counting a fused phase switch as one more.
    pub rewrites: u64,
    pub popped: u64,
    pub nf: u64,
    pub generated: u64,
    pub enqueued: u64,
    pub dedup: u64,
    pub pruned_bad: u64,
    pub pruned_unsat: u64,
    pub folded: u64,
    pub inserted: u64,
    pub redundant: u64,
}

impl Profiler {
    pub const COLUMNS: [&'static str; 12] = [
        "ms",
        "rewrites",
        "popped",
        "NF",
        "generated",
        "enqueued",
        "dedup",
        "prunedBad",
        "prunedUnsat",
        "folded",
        "inserted",
        "redundant",
    ];

    pub fn values(&self) -> [u64; 12] {
        [
            self.ms,
            self.rewrites,
            self.popped,
            self.nf,
            self.generated,
            self.enqueued,
            self.dedup,
            self.pruned_bad,
            self.pruned_unsat,
            self.folded,
            self.inserted,
            self.redundant,
        ]
    }
}

/// Coarse fingerprint: the sorted multiset of per-object profiles
/// `Class{role:targetCount,...}`. Equal graphs have equal keys.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ShapeKey(Vec<String>);

impl ShapeKey {
    pub fn of(g: &Graph) -> ShapeKey {
        let mut parts: Vec<String> = g
            .records()
            .map(|r| {
                let roles: Vec<String> = r
                    .refs
                    .iter()
                    .map(|(role, slot)| match slot.committed() {
                        Some(set) => format!("{role}:{}", set.len()),
                        None => format!("{role}:?"),
                    })
                    .collect();
                format!("{}{{{}}}", r.class, roles.join(","))
            })
            .collect();
        parts.sort();
        ShapeKey(parts)
    }
}

#[derive(Clone, Debug)]
pub struct Node {
    pub seq: u64,
    pub key: String,
    pub state: RuntimeState,
    pub nf: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Solution {
    pub graph: Graph,
    pub phi: Formula,
    pub psi: Option<Formula>,
    pub witness: Option<Valuation>,
    /// Property pattern that made the state a counterexample, if any.
    pub violation: Option<Violation>,
    pub profile: Profiler,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Exhausted,
    FirstFound,
    TimedOut,
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub status: Status,
    pub solutions: Vec<Solution>,
    pub profiler: Profiler,
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Solver(#[from] SolverError),
}

type PqKey = (Option<Measure>, u64);

/// Loop state. The antichain of retained normal forms lives in `seen`.
pub struct LoopState {
    pq: BTreeMap<PqKey, Node>,
    seen: BTreeMap<Option<ShapeKey>, Vec<RuntimeState>>,
    seen_succ: HashSet<String>,
    pub solutions: Vec<Solution>,
    pub profiler: Profiler,
    next_seq: u64,
}

struct Engine<'a> {
    calc: Calculus<'a>,
    opts: &'a Options,
    solver: &'a mut Solver,
}

impl Engine<'_> {
    fn sat_solver(&mut self) -> Option<&mut Solver> {
        self.opts.symbolic_filtering.then_some(&mut *self.solver)
    }

    fn bucket(&self, s: &RuntimeState) -> Option<ShapeKey> {
        self.opts.indexing.then(|| ShapeKey::of(&s.graph))
    }

    fn select(&self, l: &mut LoopState) -> Option<Node> {
        l.pq.pop_first().map(|(_, n)| n)
    }

    fn insert(&self, l: &mut LoopState, state: RuntimeState, key: String) {
        let seq = l.next_seq;
        l.next_seq += 1;
        let nf = self.calc.is_nf(&state);
        let prio = self.opts.heuristic_pq.then(|| state.measure());
        l.pq.insert((prio, seq), Node { seq, key, state, nf });
        l.profiler.enqueued += 1;
    }

    fn filter_exact(&self, l: &mut LoopState, states: Vec<RuntimeState>) -> Vec<(RuntimeState, String)> {
        let mut out = Vec::with_capacity(states.len());
        for s in states {
            let key = s.exact_key();
            if l.seen_succ.insert(key.clone()) {
                out.push((s, key));
            } else {
                l.profiler.dedup += 1;
            }
        }
        out
    }

    fn prune(
        &mut self,
        l: &mut LoopState,
        states: Vec<(RuntimeState, String)>,
    ) -> Result<Vec<(RuntimeState, String)>, EngineError> {
        let mut out = Vec::with_capacity(states.len());
        for (s, key) in states {
            if !self.calc.structurally_ok(&s) {
                l.profiler.pruned_bad += 1;
                continue;
            }
            if let Some(sv) = self.sat_solver() {
                if sv.is_sat(&s.phi)?.is_unsat() {
                    l.profiler.pruned_unsat += 1;
                    continue;
                }
            }
            out.push((s, key));
        }
        Ok(out)
    }

    /// `s1` covers `s2`: same shape, same graph, and `s2`'s constraints
    /// entail `s1`'s. Identifier permutations are not attempted.
    fn subsumes(&mut self, s1: &RuntimeState, s2: &RuntimeState) -> Result<bool, EngineError> {
        if (self.opts.indexing && ShapeKey::of(&s1.graph) != ShapeKey::of(&s2.graph)) || s1.graph != s2.graph {
            return Ok(false);
        }
        if !self.solver.entails(&s2.phi, &s1.phi)? {
            return Ok(false);
        }
        match (&s1.psi, &s2.psi) {
            (Some(p1), Some(p2)) => Ok(self.solver.entails(p2, p1)?),
            _ => Ok(true),
        }
    }

    fn fold_sift(&mut self, l: &LoopState, s: &RuntimeState) -> Result<bool, EngineError> {
        if let Some(bucket) = l.seen.get(&self.bucket(s)) {
            for r in bucket {
                if self.subsumes(r, s)? {
                    return Ok(true);
                }
            }
        }
        Ok(false)
    }

    fn fold_refresh(&mut self, l: &mut LoopState, s: &RuntimeState) -> Result<(), EngineError> {
        let key = self.bucket(s);
        let old = l.seen.remove(&key).unwrap_or_default();
        let mut kept = Vec::with_capacity(old.len() + 1);
        for r in old {
            if !self.subsumes(s, &r)? {
                kept.push(r);
            }
        }
        kept.push(s.clone());
        l.seen.insert(key, kept);
        Ok(())
    }

    fn solution_subsumes(&mut self, a: &Solution, b: &Solution) -> Result<bool, EngineError> {
        if a.graph != b.graph || !self.solver.entails(&b.phi, &a.phi)? {
            return Ok(false);
        }
        match (&a.psi, &b.psi) {
            (Some(p1), Some(p2)) => Ok(self.solver.entails(p2, p1)?),
            _ => Ok(true),
        }
    }

    fn record_solution(&mut self, l: &mut LoopState, mut sol: Solution) -> Result<(), EngineError> {
        if self.opts.remove_redundant {
            for existing in &l.solutions {
                if self.solution_subsumes(existing, &sol)? {
                    l.profiler.redundant += 1;
                    return Ok(());
                }
            }
            let old = std::mem::take(&mut l.solutions);
            for existing in old {
                if !self.solution_subsumes(&sol, &existing)? {
                    l.solutions.push(existing);
                }
            }
        }
        l.profiler.inserted += 1;
        sol.profile = l.profiler;
        l.solutions.push(sol);
        Ok(())
    }

    fn process_node(&mut self, l: &mut LoopState, node: Node) -> Result<(), EngineError> {
        if node.nf {
            l.profiler.nf += 1;
            let s = node.state;
            let sat_solver = self.opts.symbolic_filtering.then_some(&mut *self.solver);
            let verdict = self.calc.accept(&s, sat_solver)?;
            if verdict.accepted {
                let sol = Solution {
                    graph: s.graph,
                    phi: s.phi,
                    psi: s.psi,
                    witness: verdict.witness,
                    violation: verdict.violation,
                    profile: Profiler::default(),
                };
                self.record_solution(l, sol)?;
            }
            return Ok(());
        }
        let succs = self.calc.successors(&node.state);
        l.profiler.generated += succs.len() as u64;
        l.profiler.rewrites += succs.len() as u64;
        if node.state.phase == Phase::ObjectBuild {
            l.profiler.rewrites += succs.iter().filter(|s| s.phase == Phase::RefBuild).count() as u64;
        }
        let fresh = self.filter_exact(l, succs);
        let admissible = self.prune(l, fresh)?;
        for (s, key) in admissible {
            if self.opts.folding && self.calc.is_nf(&s) {
                if self.fold_sift(l, &s)? {
                    l.profiler.folded += 1;
                    continue;
                }
                self.fold_refresh(l, &s)?;
            }
            self.insert(l, s, key);
        }
        Ok(())
    }
}

/// Runs the search to exhaustion, first solution, or timeout.
pub fn explore(spec: &Spec, mode: Mode, opts: &Options, solver: &mut Solver) -> Result<Outcome, EngineError> {
    explore_with(Calculus::new(spec, mode), opts, solver)
}

/// [`explore`] over an explicitly configured rule set.
pub fn explore_with(calc: Calculus<'_>, opts: &Options, solver: &mut Solver) -> Result<Outcome, EngineError> {
    let start = Instant::now();
    let deadline = opts.timeout_ms.map(|ms| start + Duration::from_millis(ms));
    let mut engine = Engine { calc, opts, solver };
    let mut l = LoopState {
        pq: BTreeMap::new(),
        seen: BTreeMap::new(),
        seen_succ: HashSet::new(),
        solutions: Vec::new(),
        profiler: Profiler::default(),
        next_seq: 0,
    };
    let init = engine.calc.init();
    let key = init.exact_key();
    l.seen_succ.insert(key.clone());
    for (s, key) in engine.prune(&mut l, vec![(init, key)])? {
        engine.insert(&mut l, s, key);
    }
    let mut status = Status::Exhausted;
    loop {
        if deadline.is_some_and(|d| Instant::now() >= d) {
            status = Status::TimedOut;
            break;
        }
        let Some(node) = engine.select(&mut l) else { break };
        l.profiler.popped += 1;
        engine.process_node(&mut l, node)?;
        if opts.quantity == Quantity::First && !l.solutions.is_empty() {
            status = Status::FirstFound;
            break;
        }
    }
    l.profiler.ms = start.elapsed().as_millis() as u64;
    Ok(Outcome {
        status,
        solutions: l.solutions,
        profiler: l.profiler,
    })
}
