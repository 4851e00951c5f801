use std::path::PathBuf;

use thiserror::Error;

use crate::model::Violation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown category: {0}")]
    UnknownCategory(String),

    #[error("empty detector profile")]
    EmptyDetectorProfile,

    #[error("factor out of range: {name} = {value}")]
    FactorOutOfRange { name: &'static str, value: f64 },

    #[error("score out of range: {0}")]
    ScoreOutOfRange(f64),

    #[error("invalid profile: {}", join_violations(.0))]
    InvalidProfile(Vec<Violation>),

    #[error("invalid detector profile: {0}")]
    InvalidDetector(String),

    #[error("invalid taxonomy: {0}")]
    InvalidTaxonomy(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("duplicate case id: {0}")]
    DuplicateCaseId(String),

    #[error("unknown consequence token: {0}")]
    UnknownConsequence(String),

    #[error("invalid rating token: {0}")]
    InvalidRatingToken(String),

    #[error("invalid mode token: {0}")]
    InvalidModeToken(String),

    #[error("invalid band token: {0}")]
    InvalidBandToken(String),

    #[error("invalid case: {0}")]
    InvalidCase(String),

    #[error("unknown case id: {0}")]
    UnknownCaseId(String),

    #[error("case {case_id}: {source}")]
    InCase {
        case_id: String,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid constraint: {0}")]
    InvalidConstraint(String),

    #[error("invalid search space: {0}")]
    InvalidSearchSpace(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("invalid watchdog strategy: {0}")]
    InvalidStrategy(String),

    #[error("invalid challenger policy: {0}")]
    InvalidPolicy(String),

    #[error("invalid resistance thresholds: {0}")]
    InvalidThresholds(String),

    #[error("interaction did not terminate within {0} steps")]
    NonTerminating(usize),

    #[error("insufficient trials for thresholds: need at least {required}, got {actual}")]
    InsufficientTrials { required: u64, actual: u64 },

    #[error("unknown profile: {0}")]
    UnknownProfile(String),

    #[error("unknown detector profile: {0}")]
    UnknownDetector(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("cannot listen on {addr}: {source}")]
    Bind {
        addr: String,
        #[source]
        source: std::io::Error,
    },

    #[error("file not found: {}", .0.display())]
    FileNotFound(PathBuf),

    #[error("io error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn join_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(|v| v.message.as_str())
        .collect::<Vec<_>>()
        .join("; ")
}

impl Error {
    /// Stable machine-readable code, used on stderr and in HTTP error bodies.
    pub fn code(&self) -> &'static str {
        match self {
            Error::UnknownCategory(_) => "unknown_category",
            Error::EmptyDetectorProfile => "empty_detector_profile",
            Error::FactorOutOfRange { .. } => "factor_out_of_range",
            Error::ScoreOutOfRange(_) => "score_out_of_range",
            Error::InvalidProfile(_) => "invalid_profile",
            Error::InvalidDetector(_) => "invalid_detector",
            Error::InvalidTaxonomy(_) => "invalid_taxonomy",
            Error::Parse { .. } => "parse_error",
            Error::DuplicateCaseId(_) => "duplicate_case_id",
            Error::UnknownConsequence(_) => "unknown_consequence",
            Error::InvalidRatingToken(_) => "invalid_rating_token",
            Error::InvalidModeToken(_) => "invalid_mode_token",
            Error::InvalidBandToken(_) => "invalid_band_token",
            Error::InvalidCase(_) => "invalid_case",
            Error::UnknownCaseId(_) => "unknown_case_id",
            Error::InCase { source, .. } => source.code(),
            Error::InvalidConstraint(_) => "invalid_constraint",
            Error::InvalidSearchSpace(_) => "invalid_search_space",
            Error::InvalidScenario(_) => "invalid_scenario",
            Error::InvalidStrategy(_) => "invalid_strategy",
            Error::InvalidPolicy(_) => "invalid_policy",
            Error::InvalidThresholds(_) => "invalid_thresholds",
            Error::NonTerminating(_) => "interaction_did_not_terminate",
            Error::InsufficientTrials { .. } => "insufficient_trials",
            Error::UnknownProfile(_) => "unknown_profile",
            Error::UnknownDetector(_) => "unknown_detector",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::Bind { .. } => "address_unavailable",
            Error::FileNotFound(_) => "file_not_found",
            Error::Io { .. } => "io_error",
        }
    }

    /// True for errors caused by bad input rather than an internal failure.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::Io { .. } | Error::NonTerminating(_) => false,
            Error::InCase { source, .. } => source.is_validation(),
            _ => true,
        }
    }

    pub(crate) fn in_case(case_id: &str, source: Error) -> Self {
        Error::InCase {
            case_id: case_id.to_string(),
            source: Box::new(source),
        }
    }

    pub(crate) fn from_json(err: serde_json::Error) -> Self {
        Error::Parse {
            line: err.line(),
            column: err.column(),
            message: err.to_string(),
        }
    }
}
