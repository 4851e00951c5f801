//! Builds a what-if weight profile, validates it, and rescores a case.
//!
//!     cargo run --example custom_profile

use deceptive_risk::fixtures;
use deceptive_risk::model::{validate_profile, Consequence, Mode, WeightProfile};
use deceptive_risk::scoring::assess_case;

fn main() -> deceptive_risk::Result<()> {
    let corpus = fixtures::reference_corpus();
    let detector = fixtures::default_detector();
    let case = corpus.case("rm-01").expect("shipped case");

    let mut profile = fixtures::default_profile();
    profile.name = "heavier-money".into();
    profile.imp_values.set(Consequence::FinancialLoss, 0.9);
    profile.alpha = 1.5;
    profile.beta = WeightProfile::derived_beta(profile.alpha);
    validate_profile(&profile).into_result()?;

    for p in [fixtures::default_profile(), profile.clone()] {
        let a = assess_case(case, &corpus.taxonomy, &p, &detector, Mode::WithChallenger)?;
        println!("{:<20} R {:.3} ({})", p.name, a.score, a.band);
    }

    // an invalid profile is reported violation by violation
    let mut broken = profile;
    broken.level_values.medium = 0.95;
    broken.beta = 4.0;
    for v in validate_profile(&broken).violations {
        println!("rejected: {}", v.message);
    }

    println!("\n{}", fixtures::default_profile().to_json());
    Ok(())
}
