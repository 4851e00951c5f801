//! Domain types shared by every other module: ratings, categories, weight and
//! detector profiles, case records and assessments.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::decimal;
use crate::error::{Error, Result};
use crate::scoring::ScoreBreakdown;

/// Upper end of the impact factor under clamped-sum aggregation.
pub const IMP_MAX: f64 = 1.0;
/// Upper end of the risk scale.
pub const SCORE_MAX: f64 = 10.0;

const WEIGHT_SUM_TOLERANCE: f64 = 1e-5;
const BETA_TOLERANCE: f64 = 5e-6;

/// Ordinal judgment for one sub-factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RiskLevel {
    Low,
    Medium,
    High,
}

impl RiskLevel {
    pub const ALL: [RiskLevel; 3] = [RiskLevel::Low, RiskLevel::Medium, RiskLevel::High];

    pub fn token(self) -> &'static str {
        match self {
            RiskLevel::Low => "low",
            RiskLevel::Medium => "medium",
            RiskLevel::High => "high",
        }
    }
}

impl FromStr for RiskLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "low" => Ok(RiskLevel::Low),
            "medium" => Ok(RiskLevel::Medium),
            "high" => Ok(RiskLevel::High),
            other => Err(Error::InvalidRatingToken(other.to_string())),
        }
    }
}

impl fmt::Display for RiskLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.token())
    }
}

/// Adverse outcome a deceptive pattern can bring to a user.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Consequence {
    TimeWasting,
    PrivacyBreach,
    FinancialLoss,
}

impl Consequence {
    pub const ALL: [Consequence; 3] = [
        Consequence::TimeWasting,
        Consequence::PrivacyBreach,
        Consequence::FinancialLoss,
    ];

    pub fn token(self) -> &'static str {
        match self {
            Consequence::TimeWasting => "time_wasting",
            Consequence::PrivacyBreach => "privacy_breach",
            Consequence::FinancialLoss => "financial_loss",
        }
    }
}

impl FromStr for Consequence {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "time_wasting" => Ok(Consequence::TimeWasting),
            "privacy_breach" => Ok(Consequence::PrivacyBreach),
            "financial_loss" => Ok(Consequence::FinancialLoss),
            other => Err(Error::UnknownConsequence(other.to_string())),
        }
    }
}

impl fmt::Display for Consequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.token())
    }
}

/// Whether the challenger's own judgment enters the score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Mode {
    /// ADV computed from the sub-factor ratings.
    #[serde(rename = "with")]
    WithChallenger,
    /// Challenger assumed to guess at random: ADV fixed at 0.5.
    #[serde(rename = "baseline")]
    BaselineChallenger,
}

impl Mode {
    pub const BOTH: [Mode; 2] = [Mode::WithChallenger, Mode::BaselineChallenger];

    pub fn token(self) -> &'static str {
        match self {
            Mode::WithChallenger => "with",
            Mode::BaselineChallenger => "baseline",
        }
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "with" => Ok(Mode::WithChallenger),
            "baseline" => Ok(Mode::BaselineChallenger),
            other => Err(Error::InvalidModeToken(other.to_string())),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.token())
    }
}

/// Risk band of a final score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Band {
    Low,
    Medium,
    High,
}

impl Band {
    pub fn token(self) -> &'static str {
        match self {
            Band::Low => "low",
            Band::Medium => "medium",
            Band::High => "high",
        }
    }
}

impl FromStr for Band {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "low" => Ok(Band::Low),
            "medium" => Ok(Band::Medium),
            "high" => Ok(Band::High),
            other => Err(Error::InvalidBandToken(other.to_string())),
        }
    }
}

impl fmt::Display for Band {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.token())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Category {
    pub id: String,
    pub display_name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent: Option<String>,
}

/// A validated set of categories. Ids are unique, parents resolve, and the
/// parent relation is acyclic.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Taxonomy {
    categories: Vec<Category>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl<'de> Deserialize<'de> for Taxonomy {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let file = crate::files::TaxonomyFile::deserialize(deserializer)?;
        Taxonomy::new(file.categories).map_err(serde::de::Error::custom)
    }
}

impl Taxonomy {
    pub fn new(categories: Vec<Category>) -> Result<Self> {
        let mut index = HashMap::with_capacity(categories.len());
        for (i, category) in categories.iter().enumerate() {
            if category.id.is_empty() {
                return Err(Error::InvalidTaxonomy("empty category id".into()));
            }
            if index.insert(category.id.clone(), i).is_some() {
                return Err(Error::InvalidTaxonomy(format!(
                    "duplicate category id {}",
                    category.id
                )));
            }
        }
        for category in &categories {
            if let Some(parent) = &category.parent {
                if !index.contains_key(parent) {
                    return Err(Error::InvalidTaxonomy(format!(
                        "category {} has unknown parent {}",
                        category.id, parent
                    )));
                }
            }
        }
        // a chain longer than the number of categories must revisit a node
        for category in &categories {
            let mut steps = 0;
            let mut cursor = category.parent.as_deref();
            while let Some(parent) = cursor {
                steps += 1;
                if steps > categories.len() {
                    return Err(Error::InvalidTaxonomy(format!(
                        "parent cycle through {}",
                        category.id
                    )));
                }
                cursor = categories[index[parent]].parent.as_deref();
            }
        }
        Ok(Self { categories, index })
    }

    pub fn categories(&self) -> &[Category] {
        &self.categories
    }

    pub fn get(&self, id: &str) -> Option<&Category> {
        self.index.get(id).map(|&i| &self.categories[i])
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    pub fn require(&self, id: &str) -> Result<&Category> {
        self.get(id).ok_or_else(|| Error::UnknownCategory(id.to_string()))
    }

    /// Ancestors of a category, nearest first.
    pub fn ancestors(&self, id: &str) -> Vec<&Category> {
        let mut out = Vec::new();
        let mut cursor = self.get(id).and_then(|c| c.parent.as_deref());
        while let Some(parent) = cursor {
            let category = &self.categories[self.index[parent]];
            out.push(category);
            cursor = category.parent.as_deref();
        }
        out
    }
}

/// The three sub-factor judgments for one case: misleading UI features,
/// professional knowledge needed to see through the pattern, and whether the
/// pattern unfolds as a step-by-step sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorRatings {
    pub uf: RiskLevel,
    pub pk: RiskLevel,
    pub se: RiskLevel,
}

impl FactorRatings {
    pub fn new(uf: RiskLevel, pk: RiskLevel, se: RiskLevel) -> Self {
        Self { uf, pk, se }
    }

    pub fn as_array(&self) -> [RiskLevel; 3] {
        [self.uf, self.pk, self.se]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelValues {
    #[serde(serialize_with = "decimal::serialize")]
    pub low: f64,
    #[serde(serialize_with = "decimal::serialize")]
    pub medium: f64,
    #[serde(serialize_with = "decimal::serialize")]
    pub high: f64,
}

impl LevelValues {
    pub fn value(&self, level: RiskLevel) -> f64 {
        match level {
            RiskLevel::Low => self.low,
            RiskLevel::Medium => self.medium,
            RiskLevel::High => self.high,
        }
    }

    pub fn set(&mut self, level: RiskLevel, value: f64) {
        match level {
            RiskLevel::Low => self.low = value,
            RiskLevel::Medium => self.medium = value,
            RiskLevel::High => self.high = value,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdvWeights {
    #[serde(serialize_with = "decimal::serialize")]
    pub uf: f64,
    #[serde(serialize_with = "decimal::serialize")]
    pub pk: f64,
    #[serde(serialize_with = "decimal::serialize")]
    pub se: f64,
}

impl AdvWeights {
    pub fn as_array(&self) -> [f64; 3] {
        [self.uf, self.pk, self.se]
    }

    pub fn sum(&self) -> f64 {
        self.uf + self.pk + self.se
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImpactValues {
    #[serde(serialize_with = "decimal::serialize")]
    pub time_wasting: f64,
    #[serde(serialize_with = "decimal::serialize")]
    pub privacy_breach: f64,
    #[serde(serialize_with = "decimal::serialize")]
    pub financial_loss: f64,
}

impl ImpactValues {
    pub fn value(&self, consequence: Consequence) -> f64 {
        match consequence {
            Consequence::TimeWasting => self.time_wasting,
            Consequence::PrivacyBreach => self.privacy_breach,
            Consequence::FinancialLoss => self.financial_loss,
        }
    }

    pub fn set(&mut self, consequence: Consequence, value: f64) {
        match consequence {
            Consequence::TimeWasting => self.time_wasting = value,
            Consequence::PrivacyBreach => self.privacy_breach = value,
            Consequence::FinancialLoss => self.financial_loss = value,
        }
    }
}

/// Every tunable constant of the risk formula and the factor model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightProfile {
    pub name: String,
    pub level_values: LevelValues,
    pub adv_weights: AdvWeights,
    pub imp_values: ImpactValues,
    #[serde(serialize_with = "decimal::serialize")]
    pub alpha: f64,
    #[serde(serialize_with = "decimal::serialize")]
    pub beta: f64,
    #[serde(serialize_with = "decimal::serialize")]
    pub band_low_max: f64,
    #[serde(serialize_with = "decimal::serialize")]
    pub band_high_min: f64,
}

impl WeightProfile {
    /// The scaling factor that maps the largest reachable product onto 10.
    pub fn derived_beta(alpha: f64) -> f64 {
        SCORE_MAX / ((1.0 + alpha) * (1.0 + IMP_MAX))
    }

    pub fn shipped() -> Self {
        crate::fixtures::default_profile()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationCode {
    LevelValueOutOfRange,
    LevelValuesNotIncreasing,
    AdvWeightNegative,
    AdvWeightsSum,
    ImpValueOutOfRange,
    AlphaBelowOne,
    BetaNotPositive,
    BetaNotNormalizing,
    BandThresholds,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub code: ViolationCode,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, code: ViolationCode) -> bool {
        self.violations.iter().any(|v| v.code == code)
    }

    pub fn into_result(self) -> Result<()> {
        if self.is_ok() {
            Ok(())
        } else {
            Err(Error::InvalidProfile(self.violations))
        }
    }

    fn push(&mut self, code: ViolationCode, message: impl Into<String>) {
        self.violations.push(Violation {
            code,
            message: message.into(),
        });
    }
}

fn in_unit(x: f64) -> bool {
    (0.0..=1.0).contains(&x)
}

/// Checks every profile invariant. Failures are reported as data.
// negated comparisons so that NaN fails every check
#[allow(clippy::neg_cmp_op_on_partial_ord)]
pub fn validate_profile(profile: &WeightProfile) -> ValidationReport {
    use ViolationCode::*;
    let mut report = ValidationReport::default();

    let levels = &profile.level_values;
    for level in RiskLevel::ALL {
        let v = levels.value(level);
        if !in_unit(v) {
            report.push(
                LevelValueOutOfRange,
                format!("level value for {level} outside [0,1]: {v}"),
            );
        }
    }
    if !(levels.low < levels.medium && levels.medium < levels.high) {
        report.push(LevelValuesNotIncreasing, "level_values not strictly increasing");
    }

    let weights = profile.adv_weights.as_array();
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        report.push(AdvWeightNegative, "adv weights must be nonnegative");
    }
    let sum = profile.adv_weights.sum();
    if !((sum - 1.0).abs() <= WEIGHT_SUM_TOLERANCE) {
        report.push(AdvWeightsSum, format!("adv weights do not sum to 1 (sum {sum})"));
    }

    for consequence in Consequence::ALL {
        let v = profile.imp_values.value(consequence);
        if !in_unit(v) {
            report.push(
                ImpValueOutOfRange,
                format!("impact value for {consequence} outside [0,1]: {v}"),
            );
        }
    }

    if !(profile.alpha >= 1.0) || !profile.alpha.is_finite() {
        report.push(AlphaBelowOne, format!("alpha must be >= 1 (got {})", profile.alpha));
    }
    if !(profile.beta > 0.0) || !profile.beta.is_finite() {
        report.push(BetaNotPositive, format!("beta must be > 0 (got {})", profile.beta));
    } else if profile.alpha.is_finite() {
        let expected = WeightProfile::derived_beta(profile.alpha);
        if !((profile.beta - expected).abs() <= BETA_TOLERANCE) {
            report.push(
                BetaNotNormalizing,
                format!("beta {} does not normalize to 10 (expected {expected})", profile.beta),
            );
        }
    }

    let (lo, hi) = (profile.band_low_max, profile.band_high_min);
    if !(0.0 < lo && lo < hi && hi <= SCORE_MAX) {
        report.push(
            BandThresholds,
            format!("band thresholds must satisfy 0 < {lo} < {hi} <= 10"),
        );
    }

    report
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FallbackRule {
    #[default]
    LowestAcrossCategories,
}

/// Watchdog capability per category, expressed as detector F-scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorProfile {
    pub name: String,
    #[serde(serialize_with = "decimal::serialize_map")]
    pub f_scores: BTreeMap<String, f64>,
    #[serde(default)]
    pub fallback: FallbackRule,
}

impl DetectorProfile {
    pub fn shipped() -> Self {
        crate::fixtures::default_detector()
    }

    pub fn validate(&self) -> Result<()> {
        for (category, value) in &self.f_scores {
            if !in_unit(*value) {
                return Err(Error::InvalidDetector(format!(
                    "f-score for {category} outside [0,1]: {value}"
                )));
            }
        }
        Ok(())
    }

    pub fn fallback_value(&self) -> Option<f64> {
        match self.fallback {
            FallbackRule::LowestAcrossCategories => {
                self.f_scores.values().copied().reduce(f64::min)
            }
        }
    }
}

/// DET for one category: an explicit override wins, then the category's own
/// F-score, then the fallback over the whole table.
pub fn resolve_detection(
    taxonomy: &Taxonomy,
    category: &str,
    detector: &DetectorProfile,
    override_value: Option<f64>,
) -> Result<f64> {
    taxonomy.require(category)?;
    if let Some(value) = override_value {
        if !in_unit(value) {
            return Err(Error::FactorOutOfRange {
                name: "detector_override",
                value,
            });
        }
        return Ok(value);
    }
    if let Some(value) = detector.f_scores.get(category) {
        return Ok(*value);
    }
    detector.fallback_value().ok_or(Error::EmptyDetectorProfile)
}

/// One assessed deceptive-pattern instance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseRecord {
    pub id: String,
    pub title: String,
    pub category: String,
    pub platform: String,
    pub ratings: FactorRatings,
    pub consequences: BTreeSet<Consequence>,
    #[serde(
        serialize_with = "decimal::serialize_opt",
        skip_serializing_if = "Option::is_none"
    )]
    pub detector_override: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub notes: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub evidence_uri: Option<String>,
}

impl CaseRecord {
    pub fn validate(&self, taxonomy: &Taxonomy) -> Result<()> {
        if self.id.is_empty() {
            return Err(Error::InvalidCase("case id must be nonempty".into()));
        }
        taxonomy.require(&self.category)?;
        if let Some(value) = self.detector_override {
            if !in_unit(value) {
                return Err(Error::FactorOutOfRange {
                    name: "detector_override",
                    value,
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatingsDraft {
    pub uf: String,
    pub pk: String,
    pub se: String,
}

/// Case record as written in files and request bodies, with tokens still as
/// strings so each bad token maps to its own error code.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseDraft {
    #[serde(default)]
    pub id: Option<String>,
    #[serde(default)]
    pub title: String,
    pub category: String,
    #[serde(default)]
    pub platform: String,
    pub ratings: RatingsDraft,
    #[serde(default)]
    pub consequences: Vec<String>,
    #[serde(default)]
    pub detector_override: Option<f64>,
    #[serde(default)]
    pub notes: Option<String>,
    #[serde(default)]
    pub evidence_uri: Option<String>,
}

impl CaseDraft {
    /// Resolves tokens. `default_id` fills a missing id (ad-hoc cases).
    pub fn into_record(self, default_id: Option<&str>) -> Result<CaseRecord> {
        let id = match (self.id, default_id) {
            (Some(id), _) => id,
            (None, Some(default)) => default.to_string(),
            (None, None) => return Err(Error::InvalidCase("case id missing".into())),
        };
        let ratings = FactorRatings {
            uf: self.ratings.uf.parse()?,
            pk: self.ratings.pk.parse()?,
            se: self.ratings.se.parse()?,
        };
        let consequences = self
            .consequences
            .iter()
            .map(|token| token.parse())
            .collect::<Result<BTreeSet<Consequence>>>()?;
        Ok(CaseRecord {
            id,
            title: self.title,
            category: self.category,
            platform: self.platform,
            ratings,
            consequences,
            detector_override: self.detector_override,
            notes: self.notes,
            evidence_uri: self.evidence_uri,
        })
    }
}

impl From<&CaseRecord> for CaseDraft {
    fn from(case: &CaseRecord) -> Self {
        CaseDraft {
            id: Some(case.id.clone()),
            title: case.title.clone(),
            category: case.category.clone(),
            platform: case.platform.clone(),
            ratings: RatingsDraft {
                uf: case.ratings.uf.token().into(),
                pk: case.ratings.pk.token().into(),
                se: case.ratings.se.token().into(),
            },
            consequences: case.consequences.iter().map(|c| c.token().into()).collect(),
            detector_override: case.detector_override,
            notes: case.notes.clone(),
            evidence_uri: case.evidence_uri.clone(),
        }
    }
}

/// Scored output for one (case, mode) pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Assessment {
    pub case_id: String,
    pub mode: Mode,
    pub adv: f64,
    pub det: f64,
    pub imp: f64,
    pub score: f64,
    pub band: Band,
    pub breakdown: ScoreBreakdown,
}
