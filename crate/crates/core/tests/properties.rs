mod common;

use mmf_core::calculus::{Calculus, Mode};
use mmf_core::constraint::{eval, simp, Formula, NumTerm, Rel, SymVar, Valuation, Value};
use mmf_core::dsl::parse_spec;
use mmf_core::enumeration::{binomial, cursor_of, rank, ranked_from_to, unrank, RankedDomain};
use mmf_core::model::{ClassId, Oid};
use mmf_core::solver::{SatResult, Solver};
use mmf_core::spec::Spec;
use mmf_core::structural::{check_rules, Stage};
use num_bigint::{BigInt, BigUint};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const CEO: &str = include_str!("../specs/ceo.mmf");
const CEO_CHECK: &str = include_str!("../specs/ceo_check.mmf");
const LIBRARY: &str = include_str!("../specs/library.mmf");

fn specs() -> Vec<(Spec, Mode)> {
    vec![
        (parse_spec(CEO).unwrap(), Mode::Find),
        (parse_spec(CEO_CHECK).unwrap(), Mode::Check),
        (parse_spec(LIBRARY).unwrap(), Mode::Find),
    ]
}

fn universe(n: u32) -> Vec<Oid> {
    (1..=n).map(|i| Oid::new(ClassId::new("P"), 0, i, "p")).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn simp_preserves_eval_and_is_idempotent(seed in any::<u64>()) {
        let (nums, bools) = common::var_pool();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = common::formula(&mut rng, &nums, &bools, 4);
        let g = simp(&f);
        prop_assert_eq!(simp(&g), g.clone());
        for _ in 0..8 {
            let rho = common::valuation(&mut rng, &nums, &bools);
            prop_assert_eq!(eval(&f, &rho), eval(&g, &rho), "{} vs {}", f, g);
        }
    }

    #[test]
    fn derivations_lower_the_measure_and_keep_wf(seed in any::<u64>(), which in 0usize..3) {
        let all = specs();
        let (spec, mode) = &all[which];
        let calc = Calculus::new(spec, *mode);
        let r = common::random_walk(&calc, &mut ChaCha8Rng::seed_from_u64(seed), 10_000);
        prop_assert!(r.failure.is_none(), "{:?}", r.failure);
    }

    /// Once a partial rule matches, no construction step can undo it.
    #[test]
    fn partial_violations_persist_under_extension(seed in any::<u64>(), which in 0usize..3) {
        let all = specs();
        let (spec, mode) = &all[which];
        let calc = Calculus::new(spec, *mode);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = calc.init();
        let mut violated = None;
        loop {
            let now = check_rules(spec, &s.graph, Stage::Partial);
            if let Some(v) = &violated {
                prop_assert!(now.is_some(), "violation {} disappeared", v);
            }
            violated = violated.or(now);
            let succ = calc.successors(&s);
            let Some(next) = succ.choose(&mut rng) else { break };
            s = next.clone();
        }
    }

    /// Boxed integer problems: the internal answer matches exhaustive search.
    #[test]
    fn internal_solver_matches_brute_force(seed in any::<u64>()) {
        let nums = vec![
            SymVar::int(common::oid(1), "level"),
            SymVar::int(common::oid(2), "level"),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let body = common::linear_formula(&mut rng, &nums, 3);
        let mut parts = vec![body];
        for x in &nums {
            parts.push(Formula::atom(Rel::Ge, NumTerm::Var(x.clone()), NumTerm::int(-4)));
            parts.push(Formula::atom(Rel::Le, NumTerm::Var(x.clone()), NumTerm::int(4)));
        }
        let f = Formula::and(parts);
        let mut found = false;
        for a in -4..=4 {
            for b in -4..=4 {
                let rho: Valuation = [(nums[0].clone(), Value::Int(BigInt::from(a))), (nums[1].clone(), Value::Int(BigInt::from(b)))].into();
                found |= eval(&f, &rho) == Ok(true);
            }
        }
        match Solver::internal().is_sat(&f).unwrap() {
            SatResult::Sat(m) => {
                prop_assert!(found);
                prop_assert_eq!(eval(&f, &m), Ok(true));
            }
            SatResult::Unsat => prop_assert!(!found, "{}", f),
            SatResult::Unknown(why) => prop_assert!(false, "unknown: {}", why),
        }
    }

    #[test]
    fn rank_and_unrank_are_inverse(n in 0u32..14, m_seed in any::<usize>(), j_seed in any::<u64>()) {
        let u = universe(n);
        let m = m_seed % (n as usize + 1);
        let j = BigUint::from(j_seed) % binomial(n as usize, m);
        let s = unrank(&u, m, &j).unwrap();
        prop_assert_eq!(s.len(), m);
        prop_assert_eq!(rank(&u, &s).unwrap(), (m, j));
    }

    #[test]
    fn cursor_round_trips_through_tiers(n in 0u32..14, lb_seed in any::<usize>(), span in any::<usize>(), c_seed in any::<u64>()) {
        let u = universe(n);
        let lb = lb_seed % (n as usize + 1);
        let ub = lb + span % (n as usize + 1 - lb);
        let d = RankedDomain::new(u, lb, ub);
        let c = BigUint::from(c_seed) % d.size();
        let s = ranked_from_to(&d, &c).unwrap();
        prop_assert!(s.len() >= lb && s.len() <= ub);
        prop_assert_eq!(cursor_of(&d, &s).unwrap(), c);
    }
}
