//! Property checks driven by `proptest`'s runner so that both the test
//! targets and the acceptance binary can run them.

use std::cell::RefCell;

use misspec_core::agents::{
    literal_belief_update, mixture_policy, sample_demonstration, softmax, Belief, Environment, Generator,
    HumanParams, PedagogicPlanner,
};
use misspec_core::estimation::bootstrap_ci;
use misspec_core::grid::{load_grid, Action, RewardHypothesis};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

fn runner(cases: u32) -> TestRunner {
    TestRunner::new(Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    })
}

fn report<T: std::fmt::Debug>(name: &str, r: Result<(), proptest::test_runner::TestError<T>>) -> Result<(), String> {
    r.map_err(|e| format!("{name}: {e}"))
}

fn q_row() -> impl Strategy<Value = [f64; 4]> {
    prop::array::uniform4(-50.0..50.0f64)
}

fn tau() -> impl Strategy<Value = f64> {
    prop_oneof![0.05..0.5f64, 0.5..5.0f64, 5.0..100.0f64]
}

fn dist() -> impl Strategy<Value = [f64; 4]> {
    prop::array::uniform4(0.01..1.0f64).prop_map(|w| {
        let z: f64 = w.iter().sum();
        w.map(|x| x / z)
    })
}

fn belief() -> impl Strategy<Value = [f64; 8]> {
    prop::array::uniform8(0.001..1.0f64).prop_map(|w| {
        let z: f64 = w.iter().sum();
        w.map(|x| x / z)
    })
}

const PROP_GRID: &str = "S.o.\np#c.\n.cpG";

fn prop_env() -> Environment {
    Environment::new(load_grid(PROP_GRID).unwrap(), 1.0)
}

fn prop_params() -> HumanParams {
    HumanParams {
        plan_horizon: 3,
        ..Default::default()
    }
}

fn is_distribution(p: &[f64]) -> bool {
    p.iter().all(|&x| x >= 0.0) && (p.iter().sum::<f64>() - 1.0).abs() <= 1e-9
}

pub fn policy_normalization() -> Result<(), String> {
    report(
        "softmax",
        runner(512).run(&(q_row(), tau()), |(q, t)| {
            prop_assert!(is_distribution(&softmax(&q, t)));
            Ok(())
        }),
    )?;
    let env = prop_env();
    let cells: Vec<_> = env.grid().open_cells().filter(|&c| c != env.grid().goal()).collect();
    let planner = RefCell::new(PedagogicPlanner::new(&env, &prop_params()).unwrap());
    report(
        "literal and pedagogic policies",
        runner(128).run(&(0..cells.len(), 0..8usize, belief()), |(ci, r, b)| {
            let r = RewardHypothesis::new(r).unwrap();
            prop_assert!(is_distribution(&env.literal_policy(cells[ci], r)));
            let b = Belief::new(b).unwrap();
            prop_assert!(is_distribution(&planner.borrow_mut().policy(cells[ci], &b, r)));
            Ok(())
        }),
    )
}

pub fn softmax_shift_invariance() -> Result<(), String> {
    report(
        "softmax shift",
        runner(512).run(&(q_row(), tau(), -1e3..1e3f64), |(q, t, c)| {
            let a = softmax(&q, t);
            let b = softmax(&q.map(|x| x + c), t);
            for i in 0..4 {
                prop_assert!((a[i] - b[i]).abs() <= 1e-9, "{a:?} vs {b:?}");
            }
            Ok(())
        }),
    )?;
    let env = prop_env();
    let planner = RefCell::new(PedagogicPlanner::new(&env, &prop_params()).unwrap());
    let params = prop_params();
    report(
        "policy shift",
        runner(64).run(&(0..8usize, belief(), -100.0..100.0f64), |(r, b, c)| {
            let hyp = RewardHypothesis::new(r).unwrap();
            let cell = env.grid().start();
            let lit = env.q_table(hyp).row(cell);
            let lp = env.literal_policy(cell, hyp);
            let shifted = softmax(&lit.map(|x| x + c), params.tau_literal);
            let b = Belief::new(b).unwrap();
            let pq = planner.borrow_mut().q_for(cell, &b, hyp);
            let pp = planner.borrow_mut().policy(cell, &b, hyp);
            let pshift = softmax(&pq.map(|x| x + c), params.tau_pedagogic);
            for i in 0..4 {
                prop_assert!((lp[i] - shifted[i]).abs() <= 1e-9);
                prop_assert!((pp[i] - pshift[i]).abs() <= 1e-9);
            }
            Ok(())
        }),
    )
}

pub fn mixture_endpoints() -> Result<(), String> {
    report(
        "mixture policy endpoints",
        runner(512).run(&(dist(), dist()), |(l, p)| {
            prop_assert_eq!(mixture_policy(&l, &p, 0.0), l);
            prop_assert_eq!(mixture_policy(&l, &p, 1.0), p);
            Ok(())
        }),
    )?;
    let env = prop_env();
    let planner = RefCell::new(PedagogicPlanner::new(&env, &prop_params()).unwrap());
    report(
        "action-mixture demonstration endpoints",
        runner(16).run(&(any::<u64>(), 0..8usize), |(seed, r)| {
            let r = RewardHypothesis::new(r).unwrap();
            let run = |g| sample_demonstration(&mut planner.borrow_mut(), r, g, seed).unwrap().steps;
            prop_assert_eq!(run(Generator::ActionMixture(0.0)), run(Generator::LiteralH));
            prop_assert_eq!(run(Generator::ActionMixture(1.0)), run(Generator::PedagogicH));
            Ok(())
        }),
    )
}

pub fn literal_permutation_invariance() -> Result<(), String> {
    let env = prop_env();
    let cells: Vec<_> = env.grid().open_cells().filter(|&c| c != env.grid().goal()).collect();
    let steps = prop::collection::vec((0..cells.len(), 0..4usize), 1..12);
    report(
        "literal posterior permutation",
        runner(256).run(&steps.prop_flat_map(|s| (Just(s.clone()), Just(s).prop_shuffle())), |(a, b)| {
            let post = |seq: &[(usize, usize)]| {
                seq.iter().fold(Belief::uniform(), |bel, &(ci, ai)| {
                    let (s, act) = (cells[ci], Action::from_index(ai));
                    let next = env.grid().step(s, act).0;
                    literal_belief_update(&env, &bel, s, act, next).unwrap()
                })
            };
            let (pa, pb) = (post(&a), post(&b));
            for r in 0..8 {
                prop_assert!((pa.probs()[r] - pb.probs()[r]).abs() <= 1e-9);
            }
            Ok(())
        }),
    )
}

pub fn argmax_scaling_invariance() -> Result<(), String> {
    let lik = prop::array::uniform8(1e-6..1.0f64);
    report(
        "likelihood scaling",
        runner(512).run(&(belief(), lik, 1e-6..1e6f64), |(b, l, c)| {
            let b = Belief::new(b).unwrap();
            let p1 = b.bayes(&l).unwrap();
            let p2 = b.bayes(&l.map(|x| x * c)).unwrap();
            for r in 0..8 {
                prop_assert!((p1.probs()[r] - p2.probs()[r]).abs() <= 1e-12);
            }
            prop_assert_eq!(p1.mode(), p2.mode());
            Ok(())
        }),
    )
}

pub fn bootstrap_determinism() -> Result<(), String> {
    let samples = prop::collection::vec(prop_oneof![Just(0.0), Just(1.0), -5.0..5.0f64], 1..60);
    report(
        "bootstrap determinism",
        runner(64).run(&(samples, any::<u64>()), |(s, seed)| {
            let a = bootstrap_ci(&s, 0.95, 300, seed).unwrap();
            let b = bootstrap_ci(&s, 0.95, 300, seed).unwrap();
            prop_assert_eq!(a, b);
            let mean = s.iter().sum::<f64>() / s.len() as f64;
            prop_assert!(a.lo <= mean && mean <= a.hi);
            prop_assert!((a.point - mean).abs() < 1e-12);
            Ok(())
        }),
    )
}

pub type Check = (&'static str, fn() -> Result<(), String>);

pub const INVARIANTS: [Check; 6] = [
    ("policy normalization", policy_normalization),
    ("softmax shift invariance", softmax_shift_invariance),
    ("mixture endpoints", mixture_endpoints),
    ("literal posterior permutation invariance", literal_permutation_invariance),
    ("posterior invariance under likelihood scaling", argmax_scaling_invariance),
    ("bootstrap determinism", bootstrap_determinism),
];

