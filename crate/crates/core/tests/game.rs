use std::collections::BTreeMap;

use deceptive_risk::game::{
    builtin, builtin_names, estimate_adv, estimate_det, run_interaction, trial_rng, Behavior, ChallengerPolicy,
    Oracle, Override, Scenario, TrialPlan, WatchdogStrategy,
};
use proptest::prelude::*;

/// Exact probability that a watchdog with `q` uniform queries per
/// functionality sees at least one divergence, by enumerating every query
/// tuple.
fn enumerate_detection(s: &Scenario, q: u32) -> f64 {
    let mut p_pass = 1.0;
    for f in 0..s.spec.len() {
        let n = s.spec.domain_size(f) as u64;
        let diverges: Vec<bool> = (0..n as usize)
            .map(|i| s.implementation.respond(f, i) != s.spec.respond(f, i))
            .collect();
        let total = n.pow(q);
        let mut clean = 0u64;
        for t in 0..total {
            let mut x = t;
            let mut ok = true;
            for _ in 0..q {
                ok &= !diverges[(x % n) as usize];
                x /= n;
            }
            clean += ok as u64;
        }
        p_pass *= clean as f64 / total as f64;
    }
    1.0 - p_pass
}

/// Exact goal probability of an interaction under a policy, solved as a
/// linear system on the machine with overrides applied.
fn exact_goal_probability(s: &Scenario, policy: &ChallengerPolicy) -> f64 {
    let id = s.implementation.interaction_id().expect("interaction");
    let f = s.spec.functionalities().iter().find(|f| f.id == id).unwrap();
    let Behavior::Machine(m) = &f.behavior else { panic!("not a machine") };
    let index: BTreeMap<&str, usize> = m.states.iter().enumerate().map(|(i, s)| (s.id.as_str(), i)).collect();
    let mut targets: Vec<Vec<usize>> = m
        .states
        .iter()
        .map(|st| st.actions.iter().map(|a| index[a.target.as_str()]).collect())
        .collect();
    for o in s.implementation.overrides() {
        if let Override::Transition(t) = o {
            let si = index[t.state.as_str()];
            let ai = m.states[si].actions.iter().position(|a| a.id == t.action).unwrap();
            targets[si][ai] = index[t.target.as_str()];
        }
    }
    let goal = s.implementation.goal();

    // probability of choosing each action in each state
    let choice: Vec<Vec<f64>> = m
        .states
        .iter()
        .map(|st| {
            let k = st.actions.len();
            let mut probs = vec![0.0; k];
            if k == 0 {
                return probs;
            }
            let recognize: Vec<f64> = st
                .actions
                .iter()
                .map(|a| match (policy, &a.cue) {
                    (ChallengerPolicy::Heuristic { sensitivities }, Some(cue)) => {
                        sensitivities.get(cue).copied().unwrap_or(0.0)
                    }
                    _ => 0.0,
                })
                .collect();
            for mask in 0u32..(1 << k) {
                let mut p = 1.0;
                for (i, r) in recognize.iter().enumerate() {
                    p *= if mask & (1 << i) != 0 { *r } else { 1.0 - r };
                }
                let remaining: Vec<usize> = (0..k).filter(|i| mask & (1 << i) == 0).collect();
                if remaining.is_empty() {
                    for pr in probs.iter_mut() {
                        *pr += p / k as f64;
                    }
                } else {
                    for &i in &remaining {
                        probs[i] += p / remaining.len() as f64;
                    }
                }
            }
            probs
        })
        .collect();

    // v = A v + b over all states, solved by Gaussian elimination
    let n = m.states.len();
    let mut a = vec![vec![0.0; n + 1]; n];
    for (si, st) in m.states.iter().enumerate() {
        a[si][si] = 1.0;
        if st.actions.is_empty() {
            a[si][n] = goal.terminal_states.contains(&st.id) as u8 as f64;
            continue;
        }
        for (ai, act) in st.actions.iter().enumerate() {
            if goal.actions.contains(&act.id) {
                a[si][n] += choice[si][ai];
            } else {
                a[si][targets[si][ai]] -= choice[si][ai];
            }
        }
    }
    for col in 0..n {
        let pivot = (col..n).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs())).unwrap();
        a.swap(col, pivot);
        assert!(a[col][col].abs() > 1e-12, "singular system");
        let pivot_row = a[col].clone();
        for (row, r) in a.iter_mut().enumerate() {
            let factor = r[col] / pivot_row[col];
            if row != col && factor != 0.0 {
                for (x, p) in r.iter_mut().zip(&pivot_row).skip(col) {
                    *x -= factor * p;
                }
            }
        }
    }
    let v: Vec<f64> = (0..n).map(|i| a[i][n] / a[i][i]).collect();
    v[index[m.start.as_str()]]
}

#[test]
fn one_divergent_input_enumeration_matches_closed_form() {
    let s = builtin("one-divergent-input").unwrap();
    let exact = enumerate_detection(&s, 4);
    assert!((exact - (1.0 - (7.0f64 / 8.0).powi(4))).abs() < 1e-12);
    assert!((exact - 0.41382).abs() < 5e-6);
}

#[test]
fn watchdog_power_monotone_in_queries() {
    let s = builtin("one-divergent-input").unwrap();
    let mut previous = 0.0;
    for q in 1..=8 {
        let p = enumerate_detection(&s, q);
        let closed = 1.0 - (7.0f64 / 8.0).powi(q as i32);
        assert!((p - closed).abs() < 1e-12, "q={q}: {p} vs {closed}");
        assert!(p >= previous, "q={q}");
        previous = p;
    }
}

#[test]
fn trap_chain_path_enumeration() {
    // all 3^4 button sequences; any trap press ends the walk in the goal
    let mut trapped = 0;
    for path in 0..81u32 {
        let mut x = path;
        let mut hit = false;
        for _ in 0..4 {
            hit |= x % 3 == 2;
            x /= 3;
        }
        trapped += hit as u32;
    }
    let enumerated = trapped as f64 / 81.0;
    assert!((enumerated - 0.80247).abs() < 5e-6);
    let s = builtin("trap-chain").unwrap();
    let exact = exact_goal_probability(&s, &ChallengerPolicy::RandomClick);
    assert!((exact - enumerated).abs() < 1e-12);
}

#[test]
fn exact_evaluator_on_simple_machines() {
    let b = builtin("binary-choice").unwrap();
    assert!((exact_goal_probability(&b, &ChallengerPolicy::RandomClick) - 0.5).abs() < 1e-12);
    let careful = ChallengerPolicy::heuristic([("ui_feature", 0.6)]);
    assert!((exact_goal_probability(&b, &careful) - 0.2).abs() < 1e-12);
    let r = builtin("rating-popup").unwrap();
    assert!((exact_goal_probability(&r, &ChallengerPolicy::RandomClick) - 1.0).abs() < 1e-9);
    let c = builtin("cancellation-trap").unwrap();
    assert!((exact_goal_probability(&c, &ChallengerPolicy::RandomClick) - 15.0 / 16.0).abs() < 1e-12);
}

fn consistency_count<F: Fn(u64) -> (f64, f64)>(truth: f64, estimate: F) -> usize {
    (0..100u64)
        .filter(|&seed| {
            let (value, se) = estimate(seed);
            // 1e-12 absorbs rounding in the oracle when the true value is 0 or 1
            (value - truth).abs() <= 3.0 * se + 1e-12
        })
        .count()
}

#[test]
fn det_estimator_consistent_across_seeds() {
    for name in builtin_names() {
        let s = builtin(name).unwrap();
        let q = s.queries_per_functionality.unwrap_or(4);
        let truth = enumerate_detection(&s, q);
        let strategy = WatchdogStrategy::uniform(q);
        let hits = consistency_count(truth, |seed| {
            let e = estimate_det(&strategy, &s.spec, &s.implementation, &TrialPlan::new(10_000, seed)).unwrap();
            (e.value, e.std_error)
        });
        assert!(hits >= 99, "{name}: {hits}/100 within 3 std errors of {truth}");
    }
}

#[test]
fn adv_estimator_consistent_across_seeds() {
    let policies = [
        ChallengerPolicy::RandomClick,
        ChallengerPolicy::heuristic([("ui_feature", 0.6), ("knowledge", 0.3)]),
    ];
    for name in builtin_names() {
        let s = builtin(name).unwrap();
        if !s.has_interaction() {
            continue;
        }
        for policy in &policies {
            let truth = exact_goal_probability(&s, policy);
            let hits = consistency_count(truth, |seed| {
                let e = estimate_adv(policy, &s.implementation, &TrialPlan::new(10_000, seed)).unwrap();
                (e.value, e.std_error)
            });
            assert!(hits >= 99, "{name} {policy:?}: {hits}/100 within 3 std errors of {truth}");
        }
    }
}

#[test]
fn fullscreen_ad_goal_is_the_install_action() {
    let s = builtin("fullscreen-ad").unwrap();
    assert!((exact_goal_probability(&s, &ChallengerPolicy::RandomClick) - 0.5).abs() < 1e-12);
    for seed in 0..50 {
        let mut rng = trial_rng(seed, 0, 0);
        let trace = run_interaction(&ChallengerPolicy::RandomClick, &s.implementation, &mut rng, 100).unwrap();
        // the overridden close button never returns to the app directly
        assert_eq!(trace.steps[0].0, "ad");
        assert!(trace.steps.len() >= 2);
        let installed = trace.steps.iter().any(|(_, a)| a == "install");
        assert_eq!(s.implementation.goal().holds(&trace), installed);
    }
}

#[test]
fn different_seeds_give_different_estimates() {
    let s = builtin("one-divergent-input").unwrap();
    let strategy = WatchdogStrategy::uniform(4);
    let a = estimate_det(&strategy, &s.spec, &s.implementation, &TrialPlan::new(5_000, 1)).unwrap();
    let b = estimate_det(&strategy, &s.spec, &s.implementation, &TrialPlan::new(5_000, 2)).unwrap();
    assert_ne!(a.value, b.value);
    assert_eq!(a.seed, 1);
}

#[test]
fn std_error_formulas() {
    let s = builtin("one-divergent-input").unwrap();
    let e = estimate_det(&WatchdogStrategy::uniform(4), &s.spec, &s.implementation, &TrialPlan::new(4_000, 9)).unwrap();
    // the reference side always passes, so its variance term is zero
    let p = 1.0 - e.value;
    assert!((e.std_error - (p * (1.0 - p) / 4_000.0).sqrt()).abs() < 1e-15);

    let b = builtin("binary-choice").unwrap();
    let a = estimate_adv(&ChallengerPolicy::RandomClick, &b.implementation, &TrialPlan::new(4_000, 9)).unwrap();
    assert!((a.std_error - (a.value * (1.0 - a.value) / 4_000.0).sqrt()).abs() < 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn honest_implementation_has_zero_det(q in 1u32..10, seed in any::<u64>(), which in 0usize..7) {
        let name = builtin_names().nth(which).unwrap();
        let s = builtin(name).unwrap();
        let e = estimate_det(&WatchdogStrategy::uniform(q), &s.spec, &s.spec, &TrialPlan::new(300, seed)).unwrap();
        prop_assert_eq!(e.value, 0.0);
        prop_assert_eq!(e.std_error, 0.0);
    }

    #[test]
    fn serial_and_parallel_agree(seed in any::<u64>(), trials in 1u64..2_000, which in 0usize..7) {
        let name = builtin_names().nth(which).unwrap();
        let s = builtin(name).unwrap();
        let plan = TrialPlan::new(trials, seed);
        let strategy = WatchdogStrategy::uniform(2);
        prop_assert_eq!(
            estimate_det(&strategy, &s.spec, &s.implementation, &plan.serial()).unwrap(),
            estimate_det(&strategy, &s.spec, &s.implementation, &plan.parallel()).unwrap()
        );
        if s.has_interaction() {
            let policy = ChallengerPolicy::heuristic([("ui_feature", 0.5)]);
            prop_assert_eq!(
                estimate_adv(&policy, &s.implementation, &plan.serial()).unwrap(),
                estimate_adv(&policy, &s.implementation, &plan.parallel()).unwrap()
            );
        }
    }

    #[test]
    fn estimates_stay_in_unit_interval(seed in any::<u64>(), trials in 1u64..500) {
        let s = builtin("cancellation-trap").unwrap();
        let plan = TrialPlan::new(trials, seed);
        let d = estimate_det(&WatchdogStrategy::uniform(1), &s.spec, &s.implementation, &plan).unwrap();
        let a = estimate_adv(&ChallengerPolicy::RandomClick, &s.implementation, &plan).unwrap();
        for e in [d, a] {
            prop_assert!((0.0..=1.0).contains(&e.value));
            prop_assert!(e.std_error >= 0.0);
            prop_assert_eq!(e.trials, trials);
        }
    }
}
