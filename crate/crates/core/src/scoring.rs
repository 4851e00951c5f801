//! The scoring pipeline: sub-factor ratings give ADV, consequences give IMP,
//! the detector table gives DET, and the three combine as
//!
//! ```text
//! R = (ADV - DET + alpha) * (1 + IMP) * beta
//! ```
//!
//! followed by band classification against the profile thresholds.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{
    resolve_detection, validate_profile, Assessment, Band, CaseRecord, Consequence,
    DetectorProfile, FactorRatings, Mode, RiskLevel, Taxonomy, WeightProfile, SCORE_MAX,
};

/// ADV under the random-guess challenger.
pub const BASELINE_ADV: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SubFactor {
    Uf,
    Pk,
    Se,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdvTerm {
    pub factor: SubFactor,
    pub level: RiskLevel,
    pub weight: f64,
    pub level_value: f64,
    pub contribution: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ImpTerm {
    pub consequence: Consequence,
    pub contribution: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImpactBreakdown {
    pub terms: Vec<ImpTerm>,
    pub unclamped_sum: f64,
    pub clamped: bool,
}

/// Output of the risk formula with every intermediate kept.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RiskComputation {
    pub offset_term: f64,
    pub impact_multiplier: f64,
    pub beta: f64,
    pub raw_product: f64,
    pub final_score: f64,
    pub clamped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreBreakdown {
    /// Empty in baseline mode, where ADV is fixed rather than derived.
    pub adv_terms: Vec<AdvTerm>,
    pub imp_terms: ImpactBreakdown,
    pub offset_term: f64,
    pub impact_multiplier: f64,
    pub beta: f64,
    pub raw_product: f64,
    pub final_score: f64,
    pub clamped: bool,
}

impl ScoreBreakdown {
    /// Recomputes the score from its parts.
    pub fn reconstruct(&self) -> f64 {
        (self.offset_term * self.impact_multiplier * self.beta).clamp(0.0, SCORE_MAX)
    }
}

pub fn adv_terms(ratings: &FactorRatings, profile: &WeightProfile) -> [AdvTerm; 3] {
    let weights = profile.adv_weights.as_array();
    let levels = ratings.as_array();
    let factors = [SubFactor::Uf, SubFactor::Pk, SubFactor::Se];
    std::array::from_fn(|i| {
        let level_value = profile.level_values.value(levels[i]);
        AdvTerm {
            factor: factors[i],
            level: levels[i],
            weight: weights[i],
            level_value,
            contribution: weights[i] * level_value,
        }
    })
}

/// Weighted sum of the sub-factor level values.
///
/// The sum is divided by the total weight so that weights serialized at six
/// digits (0.333333 x 3) still form an exact convex combination.
pub fn compute_adv(ratings: &FactorRatings, profile: &WeightProfile) -> f64 {
    let total = profile.adv_weights.sum();
    let sum: f64 = adv_terms(ratings, profile).iter().map(|t| t.contribution).sum();
    if total > 0.0 {
        sum / total
    } else {
        sum
    }
}

pub fn impact_breakdown(
    consequences: &BTreeSet<Consequence>,
    profile: &WeightProfile,
) -> ImpactBreakdown {
    let terms: Vec<ImpTerm> = consequences
        .iter()
        .map(|&consequence| ImpTerm {
            consequence,
            contribution: profile.imp_values.value(consequence),
        })
        .collect();
    let unclamped_sum: f64 = terms.iter().map(|t| t.contribution).sum();
    ImpactBreakdown {
        terms,
        unclamped_sum,
        clamped: unclamped_sum > 1.0,
    }
}

/// IMP = min(1, sum of impact values of the present consequences).
pub fn compute_imp(consequences: &BTreeSet<Consequence>, profile: &WeightProfile) -> f64 {
    impact_breakdown(consequences, profile).unclamped_sum.min(1.0)
}

fn check_unit(name: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::FactorOutOfRange { name, value })
    }
}

pub fn compute_risk(adv: f64, det: f64, imp: f64, profile: &WeightProfile) -> Result<RiskComputation> {
    check_unit("adv", adv)?;
    check_unit("det", det)?;
    check_unit("imp", imp)?;
    let offset_term = adv - det + profile.alpha;
    let impact_multiplier = 1.0 + imp;
    let raw_product = offset_term * impact_multiplier * profile.beta;
    let final_score = raw_product.clamp(0.0, SCORE_MAX);
    Ok(RiskComputation {
        offset_term,
        impact_multiplier,
        beta: profile.beta,
        raw_product,
        final_score,
        clamped: final_score != raw_product,
    })
}

/// Low covers [0, band_low_max], High covers (band_high_min, 10].
pub fn classify_band(score: f64, profile: &WeightProfile) -> Result<Band> {
    if !(0.0..=SCORE_MAX).contains(&score) {
        return Err(Error::ScoreOutOfRange(score));
    }
    Ok(if score <= profile.band_low_max {
        Band::Low
    } else if score > profile.band_high_min {
        Band::High
    } else {
        Band::Medium
    })
}

pub fn assess_case(
    case: &CaseRecord,
    taxonomy: &Taxonomy,
    profile: &WeightProfile,
    detector: &DetectorProfile,
    mode: Mode,
) -> Result<Assessment> {
    validate_profile(profile).into_result()?;
    detector.validate()?;
    case.validate(taxonomy)?;

    let det = resolve_detection(taxonomy, &case.category, detector, case.detector_override)?;
    let (adv, adv_terms) = match mode {
        Mode::WithChallenger => (
            compute_adv(&case.ratings, profile),
            adv_terms(&case.ratings, profile).to_vec(),
        ),
        Mode::BaselineChallenger => (BASELINE_ADV, Vec::new()),
    };
    let imp_terms = impact_breakdown(&case.consequences, profile);
    let imp = imp_terms.unclamped_sum.min(1.0);
    let risk = compute_risk(adv, det, imp, profile)?;
    let band = classify_band(risk.final_score, profile)?;

    Ok(Assessment {
        case_id: case.id.clone(),
        mode,
        adv,
        det,
        imp,
        score: risk.final_score,
        band,
        breakdown: ScoreBreakdown {
            adv_terms,
            imp_terms,
            offset_term: risk.offset_term,
            impact_multiplier: risk.impact_multiplier,
            beta: risk.beta,
            raw_product: risk.raw_product,
            final_score: risk.final_score,
            clamped: risk.clamped,
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeComparison {
    pub with: Assessment,
    pub baseline: Assessment,
    /// with - baseline
    pub delta: f64,
}

pub fn compare_modes(
    case: &CaseRecord,
    taxonomy: &Taxonomy,
    profile: &WeightProfile,
    detector: &DetectorProfile,
) -> Result<ModeComparison> {
    let with = assess_case(case, taxonomy, profile, detector, Mode::WithChallenger)?;
    let baseline = assess_case(case, taxonomy, profile, detector, Mode::BaselineChallenger)?;
    let delta = with.score - baseline.score;
    Ok(ModeComparison {
        with,
        baseline,
        delta,
    })
}
