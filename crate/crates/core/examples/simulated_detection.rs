//! Replaces the F-score table with a simulated detection probability and
//! feeds it into the score.
//!
//!     cargo run --example simulated_detection

use deceptive_risk::fixtures;
use deceptive_risk::game::{builtin, det_to_factor, estimate_det, TrialPlan, WatchdogStrategy};
use deceptive_risk::model::Mode;
use deceptive_risk::scoring::assess_case;

fn main() -> deceptive_risk::Result<()> {
    let corpus = fixtures::reference_corpus();
    let profile = fixtures::default_profile();
    let detector = fixtures::default_detector();
    let scenario = builtin("fullscreen-ad")?;

    let mut case = corpus.case("pa-01").expect("shipped case").clone();
    let table = assess_case(&case, &corpus.taxonomy, &profile, &detector, Mode::WithChallenger)?;
    println!("F-score table  DET {:.4}  R {:.3} ({})", table.det, table.score, table.band);

    for q in [1, 2, 4, 8] {
        let estimate = estimate_det(
            &WatchdogStrategy::uniform(q),
            &scenario.spec,
            &scenario.implementation,
            &TrialPlan::new(20_000, 7),
        )?;
        case.detector_override = Some(det_to_factor(&estimate).value);
        let a = assess_case(&case, &corpus.taxonomy, &profile, &detector, Mode::WithChallenger)?;
        println!("watchdog q={q}   DET {:.4}  R {:.3} ({})", a.det, a.score, a.band);
    }
    Ok(())
}
