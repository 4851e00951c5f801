//! Grid search for weight and detector values that reproduce a set of
//! required risk bands.
//!
//! The grid covers the three level values, the three impact values and one
//! F-score per searched detector category. Alpha and the ADV weights are
//! fixed by the [`SearchSpace`]; beta is derived from alpha.
//!
//! Grid points are visited in lexicographic order of a parameter sequence
//! built from the constraints: for each constrained case, in order of first
//! appearance, the parameters it depends on are appended (levels, then
//! impacts, then F-scores, each in canonical order); parameters no case
//! depends on come last. A case's constraints are checked as soon as all of
//! its parameters are fixed, which prunes whole subtrees while still
//! returning the lexicographically first satisfying point.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{batch_score, Corpus};
use crate::decimal::round6;
use crate::error::{Error, Result};
use crate::files::{self, parse_json};
use crate::model::{
    validate_profile, AdvWeights, Band, CaseRecord, Consequence, DetectorProfile, FallbackRule,
    ImpactValues, LevelValues, Mode, RiskLevel, WeightProfile, SCORE_MAX,
};
use crate::scoring::{compute_adv, compute_imp, compute_risk, BASELINE_ADV};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScoreInterval {
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub min_exclusive: bool,
    pub max_exclusive: bool,
}

impl ScoreInterval {
    /// Distance from the interval and whether the value lies outside it.
    fn miss(&self, x: f64) -> (bool, f64) {
        if let Some(min) = self.min {
            if x < min || (self.min_exclusive && x == min) {
                return (true, min - x);
            }
        }
        if let Some(max) = self.max {
            if x > max || (self.max_exclusive && x == max) {
                return (true, x - max);
            }
        }
        (false, 0.0)
    }

    fn describe(&self) -> String {
        let lo = match self.min {
            Some(v) => format!("{}{v}", if self.min_exclusive { "(" } else { "[" }),
            None => "(-inf".into(),
        };
        let hi = match self.max {
            Some(v) => format!("{v}{}", if self.max_exclusive { ")" } else { "]" }),
            None => "+inf)".into(),
        };
        format!("score in {lo}, {hi}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Requirement {
    Band(Band),
    Interval(ScoreInterval),
    /// Upper bound on (with - baseline).
    DeltaMax(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationConstraint {
    pub case_id: String,
    pub mode: Mode,
    pub requirement: Requirement,
}

impl CalibrationConstraint {
    pub fn band(case_id: &str, mode: Mode, band: Band) -> Self {
        Self {
            case_id: case_id.into(),
            mode,
            requirement: Requirement::Band(band),
        }
    }

    pub fn describe(&self) -> String {
        let what = match &self.requirement {
            Requirement::Band(b) => format!("band {b}"),
            Requirement::Interval(i) => i.describe(),
            Requirement::DeltaMax(d) => format!("delta <= {d}"),
        };
        format!("{} ({}): {what}", self.case_id, self.mode)
    }

    /// (failed, magnitude) for the given scores of the constraint's case.
    fn evaluate(&self, with: f64, baseline: f64, low_max: f64, high_min: f64) -> (bool, f64) {
        let score = match self.mode {
            Mode::WithChallenger => with,
            Mode::BaselineChallenger => baseline,
        };
        match self.requirement {
            Requirement::Band(band) => band_interval(band, low_max, high_min).miss(score),
            Requirement::Interval(interval) => interval.miss(score),
            Requirement::DeltaMax(limit) => {
                let delta = with - baseline;
                if delta > limit {
                    (true, delta - limit)
                } else {
                    (false, 0.0)
                }
            }
        }
    }

    fn uses(&self, mode: Mode) -> bool {
        matches!(self.requirement, Requirement::DeltaMax(_)) || self.mode == mode
    }
}

fn band_interval(band: Band, low_max: f64, high_min: f64) -> ScoreInterval {
    match band {
        Band::Low => ScoreInterval {
            min: Some(0.0),
            max: Some(low_max),
            min_exclusive: false,
            max_exclusive: false,
        },
        Band::Medium => ScoreInterval {
            min: Some(low_max),
            max: Some(high_min),
            min_exclusive: true,
            max_exclusive: false,
        },
        Band::High => ScoreInterval {
            min: Some(high_min),
            max: Some(SCORE_MAX),
            min_exclusive: true,
            max_exclusive: false,
        },
    }
}

/// One entry of a constraint file.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConstraintEntry {
    case_id: String,
    mode: String,
    #[serde(default)]
    band: Option<String>,
    #[serde(default)]
    score_min: Option<f64>,
    #[serde(default)]
    score_max: Option<f64>,
    #[serde(default)]
    min_exclusive: Option<bool>,
    #[serde(default)]
    max_exclusive: Option<bool>,
    #[serde(default)]
    delta_max: Option<f64>,
}

impl ConstraintEntry {
    fn into_constraint(self) -> Result<CalibrationConstraint> {
        let mode: Mode = self.mode.parse()?;
        let has_interval = self.score_min.is_some() || self.score_max.is_some();
        let kinds = [self.band.is_some(), has_interval, self.delta_max.is_some()];
        if kinds.iter().filter(|k| **k).count() != 1 {
            return Err(Error::InvalidConstraint(format!(
                "{}: exactly one of band, score interval or delta_max is required",
                self.case_id
            )));
        }
        if (self.min_exclusive.is_some() && self.score_min.is_none())
            || (self.max_exclusive.is_some() && self.score_max.is_none())
        {
            return Err(Error::InvalidConstraint(format!(
                "{}: exclusivity flag without matching endpoint",
                self.case_id
            )));
        }
        let requirement = if let Some(band) = self.band {
            Requirement::Band(band.parse()?)
        } else if let Some(delta) = self.delta_max {
            if !delta.is_finite() {
                return Err(Error::InvalidConstraint(format!("{}: delta_max must be finite", self.case_id)));
            }
            Requirement::DeltaMax(delta)
        } else {
            for v in [self.score_min, self.score_max].into_iter().flatten() {
                if !(0.0..=SCORE_MAX).contains(&v) {
                    return Err(Error::InvalidConstraint(format!(
                        "{}: interval endpoint {v} outside [0,10]",
                        self.case_id
                    )));
                }
            }
            if let (Some(lo), Some(hi)) = (self.score_min, self.score_max) {
                if lo > hi {
                    return Err(Error::InvalidConstraint(format!(
                        "{}: score_min {lo} > score_max {hi}",
                        self.case_id
                    )));
                }
            }
            Requirement::Interval(ScoreInterval {
                min: self.score_min,
                max: self.score_max,
                min_exclusive: self.min_exclusive.unwrap_or(false),
                max_exclusive: self.max_exclusive.unwrap_or(false),
            })
        };
        Ok(CalibrationConstraint {
            case_id: self.case_id,
            mode,
            requirement,
        })
    }
}

pub fn parse_constraints(text: &str) -> Result<Vec<CalibrationConstraint>> {
    let entries: Vec<ConstraintEntry> = parse_json(text)?;
    entries.into_iter().map(ConstraintEntry::into_constraint).collect()
}

pub fn load_constraints(path: &Path) -> Result<Vec<CalibrationConstraint>> {
    parse_constraints(&files::read_text(path)?)
}

/// The finite grid being searched and the constants held fixed.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchSpace {
    pub step: f64,
    pub alpha: f64,
    pub adv_weights: AdvWeights,
    pub band_low_max: f64,
    pub band_high_min: f64,
    /// Categories that get their own F-score; all others use the fallback.
    pub detector_categories: Vec<String>,
    pub profile_name: String,
    pub detector_name: String,
}

impl SearchSpace {
    /// Fixed constants and searched categories taken from the shipped
    /// profile and detector.
    pub fn from_defaults(step: f64) -> Self {
        let profile = WeightProfile::shipped();
        let detector = DetectorProfile::shipped();
        SearchSpace {
            step,
            alpha: profile.alpha,
            adv_weights: profile.adv_weights,
            band_low_max: profile.band_low_max,
            band_high_min: profile.band_high_min,
            detector_categories: detector.f_scores.keys().cloned().collect(),
            profile_name: "calibrated".into(),
            detector_name: "calibrated".into(),
        }
    }

    fn grid(&self) -> Result<Vec<f64>> {
        if !(self.step > 0.0 && self.step <= 1.0) {
            return Err(Error::InvalidSearchSpace(format!(
                "grid step must be in (0, 1], got {}",
                self.step
            )));
        }
        let count = (1.0 / self.step + 1e-9).floor() as usize + 1;
        Ok((0..count).map(|i| round6(i as f64 * self.step)).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Param {
    Level(RiskLevel),
    Impact(Consequence),
    FScore(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstraintFailure {
    pub constraint: String,
    pub case_id: String,
    pub mode: Mode,
    /// The score (or delta) the candidate produced.
    pub actual: f64,
    pub shortfall: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Candidate {
    pub profile: WeightProfile,
    pub detector: DetectorProfile,
    pub failures: Vec<ConstraintFailure>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Calibrated {
    pub profile: WeightProfile,
    pub detector: DetectorProfile,
    /// Grid points up to and including the returned one, in search order.
    /// Points below it were ruled out, most of them by pruning.
    pub grid_points_examined: u128,
    pub case_evaluations: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExhaustionReport {
    pub grid_points: u128,
    pub case_evaluations: u64,
    /// Nearest miss: fewest failed constraints, then smallest total shortfall.
    /// None when no valid profile exists on the grid at all.
    pub best: Option<Candidate>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum CalibrationOutcome {
    Found(Calibrated),
    Exhausted(ExhaustionReport),
}

struct CaseSlot<'a> {
    case: &'a CaseRecord,
    constraints: Vec<&'a CalibrationConstraint>,
}

#[derive(Clone, Copy, PartialEq)]
struct Cost {
    failed: u32,
    magnitude: f64,
}

impl Cost {
    const ZERO: Cost = Cost {
        failed: 0,
        magnitude: 0.0,
    };

    fn add(self, other: Cost) -> Cost {
        Cost {
            failed: self.failed + other.failed,
            magnitude: self.magnitude + other.magnitude,
        }
    }

    fn cmp(&self, other: &Cost) -> Ordering {
        self.failed
            .cmp(&other.failed)
            .then(self.magnitude.total_cmp(&other.magnitude))
    }
}

struct Search<'a> {
    corpus: &'a Corpus,
    constraints: &'a [CalibrationConstraint],
    space: &'a SearchSpace,
    grid: Vec<f64>,
    order: Vec<Param>,
    /// case slots checked once depth `d` has been assigned
    checks: Vec<Vec<usize>>,
    slots: Vec<CaseSlot<'a>>,
    profile: WeightProfile,
    detector: DetectorProfile,
    assigned: BTreeSet<Param>,
    indices: Vec<usize>,
    evaluations: u64,
}

impl<'a> Search<'a> {
    // negated so that NaN is rejected
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    fn new(corpus: &'a Corpus, constraints: &'a [CalibrationConstraint], space: &'a SearchSpace) -> Result<Self> {
        let grid = space.grid()?;
        if !(space.alpha >= 1.0) {
            return Err(Error::InvalidSearchSpace(format!("alpha must be >= 1, got {}", space.alpha)));
        }

        let mut slots: Vec<CaseSlot> = Vec::new();
        for constraint in constraints {
            let case = corpus
                .case(&constraint.case_id)
                .ok_or_else(|| Error::UnknownCaseId(constraint.case_id.clone()))?;
            match slots.iter_mut().find(|s| s.case.id == case.id) {
                Some(slot) => slot.constraints.push(constraint),
                None => slots.push(CaseSlot {
                    case,
                    constraints: vec![constraint],
                }),
            }
        }

        let fscore_count = space.detector_categories.len();
        let mut order: Vec<Param> = Vec::new();
        let mut slot_deps: Vec<BTreeSet<Param>> = Vec::new();
        for slot in &slots {
            let deps = dependencies(slot, &space.detector_categories);
            for p in &deps {
                if !order.contains(p) {
                    order.push(*p);
                }
            }
            slot_deps.push(deps);
        }
        let all = RiskLevel::ALL
            .iter()
            .map(|&l| Param::Level(l))
            .chain(Consequence::ALL.iter().map(|&c| Param::Impact(c)))
            .chain((0..fscore_count).map(Param::FScore));
        for p in all {
            if !order.contains(&p) {
                order.push(p);
            }
        }

        let mut checks = vec![Vec::new(); order.len()];
        for (i, deps) in slot_deps.iter().enumerate() {
            let depth = deps
                .iter()
                .map(|p| order.iter().position(|q| q == p).expect("dependency in order"))
                .max()
                .unwrap_or(0);
            checks[depth].push(i);
        }

        let profile = WeightProfile {
            name: space.profile_name.clone(),
            level_values: LevelValues {
                low: 0.0,
                medium: 0.0,
                high: 0.0,
            },
            adv_weights: space.adv_weights,
            imp_values: ImpactValues {
                time_wasting: 0.0,
                privacy_breach: 0.0,
                financial_loss: 0.0,
            },
            alpha: space.alpha,
            beta: round6(WeightProfile::derived_beta(space.alpha)),
            band_low_max: space.band_low_max,
            band_high_min: space.band_high_min,
        };
        let detector = DetectorProfile {
            name: space.detector_name.clone(),
            f_scores: space
                .detector_categories
                .iter()
                .map(|c| (c.clone(), 0.0))
                .collect::<BTreeMap<_, _>>(),
            fallback: FallbackRule::LowestAcrossCategories,
        };

        Ok(Search {
            corpus,
            constraints,
            space,
            grid,
            indices: vec![0; order.len()],
            order,
            checks,
            slots,
            profile,
            detector,
            assigned: BTreeSet::new(),
            evaluations: 0,
        })
    }

    fn assign(&mut self, param: Param, value: f64) {
        match param {
            Param::Level(level) => self.profile.level_values.set(level, value),
            Param::Impact(c) => self.profile.imp_values.set(c, value),
            Param::FScore(i) => {
                let key = &self.space.detector_categories[i];
                *self.detector.f_scores.get_mut(key).expect("searched category") = value;
            }
        }
    }

    /// Strict level ordering among the levels assigned so far.
    fn levels_consistent(&self) -> bool {
        let assigned: Vec<f64> = RiskLevel::ALL
            .iter()
            .filter(|l| self.assigned.contains(&Param::Level(**l)))
            .map(|l| self.profile.level_values.value(*l))
            .collect();
        assigned.windows(2).all(|w| w[0] < w[1])
    }

    fn case_scores(&mut self, case: &CaseRecord) -> (f64, f64) {
        self.evaluations += 1;
        let det = match case.detector_override {
            Some(v) => v,
            None => match self.detector.f_scores.get(&case.category) {
                Some(v) => *v,
                None => self.detector.fallback_value().unwrap_or(0.0),
            },
        };
        let imp = compute_imp(&case.consequences, &self.profile);
        let adv = compute_adv(&case.ratings, &self.profile).clamp(0.0, 1.0);
        let score = |adv: f64| {
            compute_risk(adv, det, imp, &self.profile)
                .map(|r| r.final_score)
                .unwrap_or(f64::NAN)
        };
        (score(adv), score(BASELINE_ADV))
    }

    fn slot_cost(&mut self, slot: usize) -> Cost {
        let case = self.slots[slot].case;
        let (with, baseline) = self.case_scores(case);
        let (lo, hi) = (self.space.band_low_max, self.space.band_high_min);
        let mut cost = Cost::ZERO;
        for constraint in &self.slots[slot].constraints {
            let (failed, magnitude) = constraint.evaluate(with, baseline, lo, hi);
            if failed {
                cost = cost.add(Cost {
                    failed: 1,
                    magnitude,
                });
            }
        }
        cost
    }

    fn depth_cost(&mut self, depth: usize) -> Cost {
        let mut cost = Cost::ZERO;
        for i in 0..self.checks[depth].len() {
            let slot = self.checks[depth][i];
            cost = cost.add(self.slot_cost(slot));
        }
        cost
    }

    fn lex_index(&self) -> u128 {
        let n = self.grid.len() as u128;
        self.indices.iter().fold(0u128, |acc, &i| acc * n + i as u128)
    }

    fn grid_points(&self) -> u128 {
        (self.grid.len() as u128).pow(self.order.len() as u32)
    }

    /// First satisfying point in lexicographic order.
    fn first_satisfying(&mut self, depth: usize) -> bool {
        if depth == self.order.len() {
            return self.verify();
        }
        let param = self.order[depth];
        self.assigned.insert(param);
        for vi in 0..self.grid.len() {
            self.indices[depth] = vi;
            self.assign(param, self.grid[vi]);
            if !self.levels_consistent() {
                continue;
            }
            if self.depth_cost(depth).failed > 0 {
                continue;
            }
            if self.first_satisfying(depth + 1) {
                return true;
            }
        }
        self.assigned.remove(&param);
        false
    }

    /// Re-checks a leaf through the public scoring path.
    fn verify(&self) -> bool {
        if !validate_profile(&self.profile).is_ok() {
            return false;
        }
        match failures(self.corpus, self.constraints, &self.profile, &self.detector) {
            Ok(f) => f.is_empty(),
            Err(_) => false,
        }
    }

    /// Branch and bound for the lowest-cost valid point.
    fn best(&mut self, depth: usize, partial: Cost, best: &mut Option<(Cost, WeightProfile, DetectorProfile)>) {
        if depth == self.order.len() {
            let better = match best {
                None => true,
                Some((cost, ..)) => partial.cmp(cost) == Ordering::Less,
            };
            if better {
                *best = Some((partial, self.profile.clone(), self.detector.clone()));
            }
            return;
        }
        let param = self.order[depth];
        self.assigned.insert(param);
        for vi in 0..self.grid.len() {
            self.assign(param, self.grid[vi]);
            if !self.levels_consistent() {
                continue;
            }
            let cost = partial.add(self.depth_cost(depth));
            if let Some((bound, ..)) = best {
                if cost.cmp(bound) != Ordering::Less {
                    continue;
                }
            }
            self.best(depth + 1, cost, best);
        }
        self.assigned.remove(&param);
    }
}

fn dependencies(slot: &CaseSlot, detector_categories: &[String]) -> BTreeSet<Param> {
    let case = slot.case;
    let mut deps = BTreeSet::new();
    if slot.constraints.iter().any(|c| c.uses(Mode::WithChallenger)) {
        for level in case.ratings.as_array() {
            deps.insert(Param::Level(level));
        }
    }
    for c in &case.consequences {
        deps.insert(Param::Impact(*c));
    }
    if case.detector_override.is_none() {
        match detector_categories.iter().position(|c| *c == case.category) {
            Some(i) => {
                deps.insert(Param::FScore(i));
            }
            None => deps.extend((0..detector_categories.len()).map(Param::FScore)),
        }
    }
    deps
}

/// Constraints a profile/detector pair violates, evaluated with
/// [`batch_score`].
pub fn failures(
    corpus: &Corpus,
    constraints: &[CalibrationConstraint],
    profile: &WeightProfile,
    detector: &DetectorProfile,
) -> Result<Vec<ConstraintFailure>> {
    let mut ids: Vec<&str> = Vec::new();
    for c in constraints {
        if !ids.contains(&c.case_id.as_str()) {
            ids.push(&c.case_id);
        }
    }
    let mut cases = Vec::new();
    for id in ids {
        cases.push(
            corpus
                .case(id)
                .cloned()
                .ok_or_else(|| Error::UnknownCaseId(id.to_string()))?,
        );
    }
    let subset = Corpus {
        provenance: None,
        taxonomy: corpus.taxonomy.clone(),
        cases,
    };
    let scored = batch_score(&subset, profile, detector, &Mode::BOTH)?;
    let score_of = |id: &str, mode: Mode| {
        scored
            .iter()
            .find(|a| a.case_id == id && a.mode == mode)
            .map(|a| a.score)
            .expect("scored every constrained case in both modes")
    };

    let mut out = Vec::new();
    for c in constraints {
        let with = score_of(&c.case_id, Mode::WithChallenger);
        let baseline = score_of(&c.case_id, Mode::BaselineChallenger);
        let (failed, shortfall) = c.evaluate(with, baseline, profile.band_low_max, profile.band_high_min);
        if failed {
            let actual = match (c.requirement, c.mode) {
                (Requirement::DeltaMax(_), _) => with - baseline,
                (_, Mode::WithChallenger) => with,
                (_, Mode::BaselineChallenger) => baseline,
            };
            out.push(ConstraintFailure {
                constraint: c.describe(),
                case_id: c.case_id.clone(),
                mode: c.mode,
                actual,
                shortfall,
            });
        }
    }
    Ok(out)
}

pub fn calibrate(
    corpus: &Corpus,
    constraints: &[CalibrationConstraint],
    space: &SearchSpace,
) -> Result<CalibrationOutcome> {
    let mut search = Search::new(corpus, constraints, space)?;
    if search.first_satisfying(0) {
        return Ok(CalibrationOutcome::Found(Calibrated {
            profile: search.profile.clone(),
            detector: search.detector.clone(),
            grid_points_examined: search.lex_index() + 1,
            case_evaluations: search.evaluations,
        }));
    }

    let mut best = None;
    search.assigned.clear();
    search.best(0, Cost::ZERO, &mut best);
    let best = match best {
        Some((_, profile, detector)) => {
            let failures = failures(corpus, constraints, &profile, &detector)?;
            Some(Candidate {
                profile,
                detector,
                failures,
            })
        }
        None => None,
    };
    Ok(CalibrationOutcome::Exhausted(ExhaustionReport {
        grid_points: search.grid_points(),
        case_evaluations: search.evaluations,
        best,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn parses_shipped_constraints() {
        let constraints = fixtures::reference_constraints();
        assert_eq!(constraints.len(), 10);
        assert_eq!(
            constraints[2].requirement,
            Requirement::Interval(ScoreInterval {
                min: Some(2.5),
                max: Some(3.0),
                min_exclusive: false,
                max_exclusive: false
            })
        );
        assert_eq!(constraints[7].requirement, Requirement::DeltaMax(1.0));
    }

    #[test]
    fn rejects_malformed_constraints() {
        for text in [
            r#"[{"case_id": "pz-01", "mode": "with"}]"#,
            r#"[{"case_id": "pz-01", "mode": "with", "band": "low", "score_max": 3}]"#,
            r#"[{"case_id": "pz-01", "mode": "sometimes", "band": "low"}]"#,
            r#"[{"case_id": "pz-01", "mode": "with", "band": "extreme"}]"#,
            r#"[{"case_id": "pz-01", "mode": "with", "score_min": 11}]"#,
            r#"[{"case_id": "pz-01", "mode": "with", "score_min": 5, "score_max": 4}]"#,
            r#"[{"case_id": "pz-01", "mode": "with", "score_max": 4, "min_exclusive": true}]"#,
            r#"[{"case_id": "pz-01", "mode": "with", "band": "low", "colour": "red"}]"#,
        ] {
            assert!(parse_constraints(text).is_err(), "{text}");
        }
    }

    #[test]
    fn interval_endpoints() {
        let open = ScoreInterval {
            min: Some(3.0),
            max: Some(7.0),
            min_exclusive: true,
            max_exclusive: true,
        };
        assert!(open.miss(3.0).0);
        assert!(open.miss(7.0).0);
        assert!(!open.miss(5.0).0);
        assert_eq!(open.miss(2.0), (true, 1.0));
        let closed = ScoreInterval {
            min_exclusive: false,
            max_exclusive: false,
            ..open
        };
        assert!(!closed.miss(3.0).0 && !closed.miss(7.0).0);
    }

    #[test]
    fn shipped_default_satisfies_reference_constraints() {
        let f = failures(
            &fixtures::reference_corpus(),
            &fixtures::reference_constraints(),
            &WeightProfile::shipped(),
            &DetectorProfile::shipped(),
        )
        .unwrap();
        assert!(f.is_empty(), "{f:?}");
    }

    #[test]
    fn finds_profile_for_reference_constraints() {
        let corpus = fixtures::reference_corpus();
        let constraints = fixtures::reference_constraints();
        let outcome = calibrate(&corpus, &constraints, &SearchSpace::from_defaults(0.05)).unwrap();
        let CalibrationOutcome::Found(found) = outcome else {
            panic!("expected a satisfying profile");
        };
        assert!(validate_profile(&found.profile).is_ok());
        assert!(failures(&corpus, &constraints, &found.profile, &found.detector)
            .unwrap()
            .is_empty());
        assert!(!found.detector.f_scores.contains_key("roach-motel"));
    }

    #[test]
    fn contradictory_constraints_exhaust() {
        let corpus = fixtures::reference_corpus();
        let constraints = vec![
            CalibrationConstraint::band("pz-01", Mode::WithChallenger, Band::Low),
            CalibrationConstraint::band("pz-01", Mode::WithChallenger, Band::High),
        ];
        let outcome = calibrate(&corpus, &constraints, &SearchSpace::from_defaults(0.05)).unwrap();
        let CalibrationOutcome::Exhausted(report) = outcome else {
            panic!("expected exhaustion");
        };
        let best = report.best.unwrap();
        assert_eq!(best.failures.len(), 1);
    }

    #[test]
    fn empty_constraints_return_first_grid_point() {
        let corpus = fixtures::reference_corpus();
        let outcome = calibrate(&corpus, &[], &SearchSpace::from_defaults(0.05)).unwrap();
        let CalibrationOutcome::Found(found) = outcome else {
            panic!("expected a profile");
        };
        let l = found.profile.level_values;
        assert_eq!((l.low, l.medium, l.high), (0.0, 0.05, 0.1));
        assert_eq!(found.profile.imp_values.time_wasting, 0.0);
        assert!(found.detector.f_scores.values().all(|v| *v == 0.0));
    }

    #[test]
    fn unknown_case_in_constraints() {
        let corpus = fixtures::reference_corpus();
        let constraints = vec![CalibrationConstraint::band("zz-99", Mode::WithChallenger, Band::Low)];
        let err = calibrate(&corpus, &constraints, &SearchSpace::from_defaults(0.05)).unwrap_err();
        assert_eq!(err.code(), "unknown_case_id");
    }

    #[test]
    fn bad_step_rejected() {
        let corpus = fixtures::reference_corpus();
        for step in [0.0, -0.1, 1.5] {
            assert!(calibrate(&corpus, &[], &SearchSpace::from_defaults(step)).is_err());
        }
    }
}
