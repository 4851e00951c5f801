//! How much of a case's risk comes from the user's own judgment: the same
//! case scored with its challenger ratings and with a random-guess
//! challenger.
//!
//!     cargo run --example compare_modes

use std::collections::BTreeSet;

use deceptive_risk::decimal::round2;
use deceptive_risk::fixtures;
use deceptive_risk::model::{CaseRecord, Consequence, FactorRatings, RiskLevel};
use deceptive_risk::scoring::compare_modes;

fn main() -> deceptive_risk::Result<()> {
    let taxonomy = fixtures::default_taxonomy();
    let profile = fixtures::default_profile();
    let detector = fixtures::default_detector();

    let case = CaseRecord {
        id: "ads-01".into(),
        title: "Interstitial ad with a delayed close button".into(),
        category: "pop-up-ads".into(),
        platform: "mobile app".into(),
        ratings: FactorRatings::new(RiskLevel::High, RiskLevel::High, RiskLevel::Low),
        consequences: BTreeSet::from([Consequence::TimeWasting]),
        detector_override: None,
        notes: None,
        evidence_uri: None,
    };

    let c = compare_modes(&case, &taxonomy, &profile, &detector)?;
    for a in [&c.with, &c.baseline] {
        println!(
            "{:<8} ADV {:.3}  DET {:.3}  IMP {:.3}  R {:.2}  {}",
            a.mode,
            a.adv,
            a.det,
            a.imp,
            round2(a.score),
            a.band
        );
    }
    println!("delta {:+.2}", round2(c.delta));
    Ok(())
}
