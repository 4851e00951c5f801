//! Data files shipped with the crate, embedded at build time.

use crate::corpus::Corpus;
use crate::model::{DetectorProfile, Taxonomy, WeightProfile};

pub const TAXONOMY_JSON: &str = include_str!("../fixtures/taxonomy.json");
pub const DEFAULT_PROFILE_JSON: &str = include_str!("../fixtures/default-profile.json");
pub const DEFAULT_DETECTOR_JSON: &str = include_str!("../fixtures/default-detector.json");
pub const REFERENCE_CASES_JSON: &str = include_str!("../fixtures/reference-cases.json");
pub const REFERENCE_BANDS_JSON: &str = include_str!("../fixtures/reference-bands.json");

pub fn default_taxonomy() -> Taxonomy {
    Taxonomy::from_json(TAXONOMY_JSON).expect("shipped taxonomy is valid")
}

pub fn default_profile() -> WeightProfile {
    WeightProfile::from_json(DEFAULT_PROFILE_JSON).expect("shipped profile is valid")
}

pub fn default_detector() -> DetectorProfile {
    DetectorProfile::from_json(DEFAULT_DETECTOR_JSON).expect("shipped detector is valid")
}

/// The four worked cases: privacy zuckering, pop-up to rate, pop-up ads and
/// roach motel.
pub fn reference_corpus() -> Corpus {
    Corpus::from_json(REFERENCE_CASES_JSON).expect("shipped corpus is valid")
}

pub fn reference_constraints() -> Vec<crate::calibrate::CalibrationConstraint> {
    crate::calibrate::parse_constraints(REFERENCE_BANDS_JSON).expect("shipped constraints are valid")
}
