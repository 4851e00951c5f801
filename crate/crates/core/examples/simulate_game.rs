//! Runs the watchdog and challenger against every built-in scenario and
//! prints the resistance verdict.
//!
//!     cargo run --example simulate_game

use deceptive_risk::game::{
    builtin, builtin_names, check_resistance, estimate_adv, estimate_det, ChallengerPolicy, ResistanceThresholds,
    TrialPlan, WatchdogStrategy,
};

fn main() -> deceptive_risk::Result<()> {
    let plan = TrialPlan::new(10_000, 2024);
    let thresholds = ResistanceThresholds::new(0.1, 0.05)?;
    let careful = ChallengerPolicy::heuristic([("ui_feature", 0.8), ("knowledge", 0.5)]);

    for name in builtin_names() {
        let s = builtin(name)?;
        let watchdog = WatchdogStrategy::uniform(s.queries_per_functionality.unwrap_or(4));
        let det = estimate_det(&watchdog, &s.spec, &s.implementation, &plan)?;
        print!("{name:<22} DET {:.4} ± {:.4}", det.value, det.std_error);
        if !s.has_interaction() {
            println!();
            continue;
        }
        for (label, policy) in [("random", &ChallengerPolicy::RandomClick), ("careful", &careful)] {
            let adv = estimate_adv(policy, &s.implementation, &plan)?;
            let verdict = check_resistance(&det, &adv, &thresholds)?;
            print!(
                "  | {label}: ADV {:.4} {}",
                adv.value,
                if verdict.resistant { "resistant" } else { "not resistant" }
            );
        }
        println!();
    }
    Ok(())
}
