//! Risk scoring for deceptive design patterns.
//!
//! A case is rated on three adversary sub-factors and a set of consequences;
//! a detector profile supplies how likely the pattern is to be caught. The
//! score is `R = (ADV - DET + alpha) * (1 + IMP) * beta` on a 0..10 scale.
//!
//! The [`game`] module estimates DET and ADV by simulation instead of by
//! table lookup, and [`calibrate`] searches for weights that reproduce a set
//! of expected bands.

pub mod calibrate;
pub mod cli;
pub mod corpus;
pub mod decimal;
pub mod error;
pub mod files;
pub mod fixtures;
pub mod game;
pub mod model;
pub mod scoring;
pub mod service;

pub use calibrate::{calibrate, CalibrationConstraint, CalibrationOutcome, SearchSpace};
pub use corpus::{batch_score, emit_report, load_corpus, Corpus, ReportFormat};
pub use error::{Error, Result};
pub use model::{
    validate_profile, Assessment, Band, CaseRecord, Consequence, DetectorProfile, FactorRatings, Mode, RiskLevel,
    Taxonomy, WeightProfile,
};
pub use scoring::{assess_case, classify_band, compare_modes, compute_adv, compute_imp, compute_risk};
