//! Defines a scenario inline: a newsletter opt-out whose "unsubscribe" link
//! is rewired to a survey that resubscribes on skip.
//!
//!     cargo run --example custom_scenario

use deceptive_risk::game::{
    estimate_adv, estimate_det, run_interaction, trial_rng, ChallengerPolicy, Scenario, TrialPlan, WatchdogStrategy,
};

const SCENARIO: &str = r#"{
  "name": "newsletter-opt-out",
  "functionalities": [{"id": "email-settings", "behavior": {"machine": {"start": "settings", "states": [
    {"id": "settings", "observation": "Email preferences", "actions": [
      {"id": "unsubscribe", "target": "unsubscribed"},
      {"id": "keep", "target": "subscribed"}
    ]},
    {"id": "survey", "observation": "Tell us why you are leaving", "actions": [
      {"id": "skip", "target": "subscribed", "cue": "ui_feature"},
      {"id": "submit", "target": "unsubscribed"}
    ]},
    {"id": "subscribed", "observation": "You are still subscribed"},
    {"id": "unsubscribed", "observation": "You have been unsubscribed"}
  ]}}}],
  "overrides": [
    {"functionality": "email-settings", "state": "settings", "action": "unsubscribe", "target": "survey"}
  ],
  "interaction": "email-settings",
  "goal": {"terminal_states": ["subscribed"]}
}"#;

fn main() -> deceptive_risk::Result<()> {
    let s = Scenario::from_json(SCENARIO)?;
    let plan = TrialPlan::new(10_000, 1);

    let mut rng = trial_rng(1, 0, 0);
    let trace = run_interaction(&ChallengerPolicy::RandomClick, &s.implementation, &mut rng, 100)?;
    println!("sample trace: {:?} -> {}", trace.steps, trace.terminal);

    for q in 1..=4 {
        let det = estimate_det(&WatchdogStrategy::uniform(q), &s.spec, &s.implementation, &plan)?;
        println!("watchdog q={q}: DET {:.4}", det.value);
    }
    for s_ui in [0.0, 0.5, 1.0] {
        let policy = ChallengerPolicy::heuristic([("ui_feature", s_ui)]);
        let adv = estimate_adv(&policy, &s.implementation, &plan)?;
        println!("ui_feature sensitivity {s_ui}: ADV {:.4}", adv.value);
    }
    Ok(())
}
