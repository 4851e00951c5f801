//! Monte Carlo estimation of the watchdog's detection probability and the
//! adversary's advantage, and the resistance verdict built on them.
//!
//! Trial `i` draws only from a ChaCha stream derived from the master seed,
//! the estimator, and `i`. Results are counts, so serial and parallel
//! execution agree bit for bit.

use std::collections::BTreeMap;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::scheme::{Oracle, Scheme, SubvertedImplementation, Trace};
use crate::error::{Error, Result};

pub const DEFAULT_STEP_CAP: usize = 10_000;

const STREAM_WATCHDOG_IMPL: u64 = 1;
const STREAM_WATCHDOG_SPEC: u64 = 2;
const STREAM_CHALLENGE: u64 = 3;

/// Random stream for one trial.
pub fn trial_rng(seed: u64, purpose: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ purpose.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    rng.set_stream(trial);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueryDistribution {
    Uniform,
    /// Probability per query, keyed by functionality id. Functionalities not
    /// listed are queried uniformly.
    Weighted(BTreeMap<String, Vec<f64>>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecisionRule {
    /// Output 1 iff every queried response matches the reference scheme.
    AllMatch,
    /// Ignore the responses.
    Constant(bool),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WatchdogStrategy {
    pub queries_per_functionality: u32,
    pub distribution: QueryDistribution,
    pub decision_rule: DecisionRule,
}

impl WatchdogStrategy {
    pub fn uniform(queries_per_functionality: u32) -> Self {
        Self {
            queries_per_functionality,
            distribution: QueryDistribution::Uniform,
            decision_rule: DecisionRule::AllMatch,
        }
    }
}

enum Sampler {
    Uniform(usize),
    Weighted(WeightedIndex<f64>),
}

impl Sampler {
    fn sample(&self, rng: &mut ChaCha8Rng) -> usize {
        match self {
            Sampler::Uniform(n) => rng.random_range(0..*n),
            Sampler::Weighted(w) => w.sample(rng),
        }
    }
}

/// A strategy checked against a reference scheme and ready to run.
pub struct Watchdog<'a> {
    spec: &'a Scheme,
    queries: u32,
    rule: DecisionRule,
    samplers: Vec<Sampler>,
}

impl<'a> Watchdog<'a> {
    pub fn new(strategy: &WatchdogStrategy, spec: &'a Scheme) -> Result<Self> {
        if strategy.queries_per_functionality < 1 {
            return Err(Error::InvalidStrategy("query budget must be at least 1".into()));
        }
        let weights = match &strategy.distribution {
            QueryDistribution::Uniform => BTreeMap::new(),
            QueryDistribution::Weighted(w) => w.clone(),
        };
        for id in weights.keys() {
            if spec.index_of(id).is_none() {
                return Err(Error::InvalidStrategy(format!("weights for unknown functionality {id}")));
            }
        }
        let mut samplers = Vec::with_capacity(spec.len());
        for (f, functionality) in spec.functionalities().iter().enumerate() {
            let n = spec.domain_size(f);
            let sampler = match weights.get(&functionality.id) {
                None => Sampler::Uniform(n),
                Some(w) => {
                    if w.len() != n {
                        return Err(Error::InvalidStrategy(format!(
                            "{}: {} weights for a domain of {n}",
                            functionality.id,
                            w.len()
                        )));
                    }
                    if w.iter().any(|x| !x.is_finite() || *x < 0.0) {
                        return Err(Error::InvalidStrategy(format!("{}: negative weight", functionality.id)));
                    }
                    let total: f64 = w.iter().sum();
                    if (total - 1.0).abs() > 1e-9 {
                        return Err(Error::InvalidStrategy(format!(
                            "{}: distribution sums to {total}",
                            functionality.id
                        )));
                    }
                    Sampler::Weighted(
                        WeightedIndex::new(w.iter().copied())
                            .map_err(|e| Error::InvalidStrategy(e.to_string()))?,
                    )
                }
            };
            samplers.push(sampler);
        }
        Ok(Self {
            spec,
            queries: strategy.queries_per_functionality,
            rule: strategy.decision_rule,
            samplers,
        })
    }

    /// One interrogation of `target`. Returns the watchdog's output bit.
    pub fn run_trial(&self, target: &dyn Oracle, rng: &mut ChaCha8Rng) -> bool {
        if let DecisionRule::Constant(bit) = self.rule {
            return bit;
        }
        for (f, sampler) in self.samplers.iter().enumerate() {
            for _ in 0..self.queries {
                let q = sampler.sample(rng);
                if target.respond(f, q) != self.spec.respond(f, q) {
                    return false;
                }
            }
        }
        true
    }
}

pub fn run_watchdog_trial(
    strategy: &WatchdogStrategy,
    spec: &Scheme,
    target: &dyn Oracle,
    rng: &mut ChaCha8Rng,
) -> Result<bool> {
    check_same_scheme(spec, target)?;
    Ok(Watchdog::new(strategy, spec)?.run_trial(target, rng))
}

fn check_same_scheme(spec: &Scheme, target: &dyn Oracle) -> Result<()> {
    if target.scheme() != spec {
        return Err(Error::InvalidScenario(
            "target does not implement the given reference scheme".into(),
        ));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Execution {
    Serial,
    #[default]
    Parallel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialPlan {
    pub trials: u64,
    pub seed: u64,
    pub execution: Execution,
    pub step_cap: usize,
}

impl TrialPlan {
    pub fn new(trials: u64, seed: u64) -> Self {
        Self {
            trials,
            seed,
            execution: Execution::default(),
            step_cap: DEFAULT_STEP_CAP,
        }
    }

    pub fn serial(self) -> Self {
        Self {
            execution: Execution::Serial,
            ..self
        }
    }

    pub fn parallel(self) -> Self {
        Self {
            execution: Execution::Parallel,
            ..self
        }
    }

    fn check(&self) -> Result<()> {
        if self.trials < 1 {
            return Err(Error::InvalidStrategy("trials must be at least 1".into()));
        }
        Ok(())
    }

    /// Number of trials for which `trial` returns true.
    fn count<F>(&self, trial: F) -> Result<u64>
    where
        F: Fn(u64) -> Result<bool> + Sync,
    {
        match self.execution {
            Execution::Serial => {
                let mut hits = 0;
                for i in 0..self.trials {
                    hits += trial(i)? as u64;
                }
                Ok(hits)
            }
            Execution::Parallel => (0..self.trials)
                .into_par_iter()
                .map(|i| trial(i).map(u64::from))
                .try_reduce(|| 0, |a, b| Ok(a + b)),
        }
    }
}

/// Empirical probability with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub trials: u64,
    pub std_error: f64,
    pub seed: u64,
}

/// |Pr[W(impl) = 1] - Pr[W(spec) = 1]| estimated from `plan.trials` runs on
/// each side. The standard error combines the two independent samples.
pub fn estimate_det(
    strategy: &WatchdogStrategy,
    spec: &Scheme,
    target: &dyn Oracle,
    plan: &TrialPlan,
) -> Result<Estimate> {
    plan.check()?;
    check_same_scheme(spec, target)?;
    let watchdog = Watchdog::new(strategy, spec)?;
    let seed = plan.seed;
    let on_target = plan.count(|i| {
        let mut rng = trial_rng(seed, STREAM_WATCHDOG_IMPL, i);
        Ok(watchdog.run_trial(target, &mut rng))
    })?;
    let on_spec = plan.count(|i| {
        let mut rng = trial_rng(seed, STREAM_WATCHDOG_SPEC, i);
        Ok(watchdog.run_trial(spec, &mut rng))
    })?;
    let n = plan.trials as f64;
    let p_target = on_target as f64 / n;
    let p_spec = on_spec as f64 / n;
    let variance = p_target * (1.0 - p_target) / n + p_spec * (1.0 - p_spec) / n;
    Ok(Estimate {
        value: (p_target - p_spec).abs(),
        trials: plan.trials,
        std_error: variance.sqrt(),
        seed,
    })
}

/// How the simulated user picks actions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChallengerPolicy {
    /// Uniform choice among the available actions.
    RandomClick,
    /// Each cued action is recognized (and avoided) with the sensitivity of
    /// its cue class; the choice is then uniform among the rest. If every
    /// action is recognized the user still has to pick one of them.
    Heuristic { sensitivities: BTreeMap<String, f64> },
}

impl ChallengerPolicy {
    pub fn heuristic<const N: usize>(pairs: [(&str, f64); N]) -> Self {
        ChallengerPolicy::Heuristic {
            sensitivities: pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        }
    }

    fn validate(&self) -> Result<()> {
        if let ChallengerPolicy::Heuristic { sensitivities } = self {
            for (cue, s) in sensitivities {
                if !(0.0..=1.0).contains(s) {
                    return Err(Error::InvalidPolicy(format!("sensitivity for {cue} outside [0,1]: {s}")));
                }
            }
        }
        Ok(())
    }
}

fn play(
    policy: &ChallengerPolicy,
    implementation: &SubvertedImplementation,
    rng: &mut ChaCha8Rng,
    step_cap: usize,
    mut record: Option<&mut Vec<(usize, usize)>>,
) -> Result<(bool, usize)> {
    let (machine, cm, interaction) = implementation
        .machine()
        .ok_or_else(|| Error::InvalidScenario("implementation has no interaction machine".into()))?;
    let mut state = cm.start;
    let mut goal_action = false;
    let mut candidates: Vec<usize> = Vec::new();
    for _ in 0..step_cap {
        let actions = &machine.states[state].actions;
        if actions.is_empty() {
            return Ok((goal_action || interaction.goal_state[state], state));
        }
        let choice = match policy {
            ChallengerPolicy::RandomClick => rng.random_range(0..actions.len()),
            ChallengerPolicy::Heuristic { sensitivities } => {
                candidates.clear();
                for (i, a) in actions.iter().enumerate() {
                    let recognized = match &a.cue {
                        Some(cue) => {
                            let s = sensitivities.get(cue).copied().unwrap_or(0.0);
                            rng.random::<f64>() < s
                        }
                        None => false,
                    };
                    if !recognized {
                        candidates.push(i);
                    }
                }
                if candidates.is_empty() {
                    rng.random_range(0..actions.len())
                } else {
                    candidates[rng.random_range(0..candidates.len())]
                }
            }
        };
        let q = cm.query(state, choice);
        goal_action |= interaction.goal_query[q];
        if let Some(steps) = record.as_deref_mut() {
            steps.push((state, choice));
        }
        state = interaction.targets[q];
    }
    Err(Error::NonTerminating(step_cap))
}

/// One interaction between the challenger and the implementation. Returns 1
/// iff the adversary's goal holds on the resulting trace.
pub fn run_challenge_trial(
    policy: &ChallengerPolicy,
    implementation: &SubvertedImplementation,
    rng: &mut ChaCha8Rng,
) -> Result<bool> {
    policy.validate()?;
    play(policy, implementation, rng, DEFAULT_STEP_CAP, None).map(|(bit, _)| bit)
}

/// Like [`run_challenge_trial`] but returns the full trace.
pub fn run_interaction(
    policy: &ChallengerPolicy,
    implementation: &SubvertedImplementation,
    rng: &mut ChaCha8Rng,
    step_cap: usize,
) -> Result<Trace> {
    policy.validate()?;
    let mut steps = Vec::new();
    let (_, terminal) = play(policy, implementation, rng, step_cap, Some(&mut steps))?;
    let (machine, _, _) = implementation.machine().expect("checked by play");
    Ok(Trace {
        steps: steps
            .into_iter()
            .map(|(s, a)| {
                let state = &machine.states[s];
                (state.id.clone(), state.actions[a].id.clone())
            })
            .collect(),
        terminal: machine.states[terminal].id.clone(),
    })
}

/// Fraction of interactions the adversary wins.
pub fn estimate_adv(
    policy: &ChallengerPolicy,
    implementation: &SubvertedImplementation,
    plan: &TrialPlan,
) -> Result<Estimate> {
    plan.check()?;
    policy.validate()?;
    if implementation.machine().is_none() {
        return Err(Error::InvalidScenario("implementation has no interaction machine".into()));
    }
    let seed = plan.seed;
    let hits = plan.count(|i| {
        let mut rng = trial_rng(seed, STREAM_CHALLENGE, i);
        play(policy, implementation, &mut rng, plan.step_cap, None).map(|(bit, _)| bit)
    })?;
    let n = plan.trials as f64;
    let p = hits as f64 / n;
    Ok(Estimate {
        value: p,
        trials: plan.trials,
        std_error: (p * (1.0 - p) / n).sqrt(),
        seed,
    })
}

/// Explicit stand-ins for "non-negligible" detection and "negligible"
/// advantage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResistanceThresholds {
    pub epsilon_det: f64,
    pub delta_adv: f64,
}

impl ResistanceThresholds {
    pub fn new(epsilon_det: f64, delta_adv: f64) -> Result<Self> {
        for (name, v) in [("epsilon_det", epsilon_det), ("delta_adv", delta_adv)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::InvalidThresholds(format!("{name} must be in (0,1), got {v}")));
            }
        }
        Ok(Self {
            epsilon_det,
            delta_adv,
        })
    }

    /// Trials needed before the thresholds can be resolved.
    pub fn required_trials(&self) -> u64 {
        let m = self.epsilon_det.min(self.delta_adv);
        (1.0 / (m * m)).ceil() as u64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResistanceVerdict {
    pub resistant: bool,
    pub via_detection: bool,
    pub via_advantage: bool,
    /// det - epsilon_det; nonnegative when the detection branch holds.
    pub detection_margin: f64,
    /// delta_adv - adv; nonnegative when the advantage branch holds.
    pub advantage_margin: f64,
}

/// Resistance for this particular watchdog and challenger. Says nothing about
/// whether some other watchdog would succeed.
pub fn check_resistance(
    det: &Estimate,
    adv: &Estimate,
    thresholds: &ResistanceThresholds,
) -> Result<ResistanceVerdict> {
    let checked = ResistanceThresholds::new(thresholds.epsilon_det, thresholds.delta_adv)?;
    let required = checked.required_trials();
    let actual = det.trials.min(adv.trials);
    if actual < required {
        return Err(Error::InsufficientTrials { required, actual });
    }
    let via_detection = det.value >= checked.epsilon_det;
    let via_advantage = adv.value <= checked.delta_adv;
    Ok(ResistanceVerdict {
        resistant: via_detection || via_advantage,
        via_detection,
        via_advantage,
        detection_margin: det.value - checked.epsilon_det,
        advantage_margin: checked.delta_adv - adv.value,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectionProvenance {
    Simulated,
}

/// A DET value ready for the scoring pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DetectionFactor {
    pub value: f64,
    pub provenance: DetectionProvenance,
}

/// Passes a simulated DET estimate into scoring unchanged. Use the value as
/// a case's `detector_override`.
pub fn det_to_factor(estimate: &Estimate) -> DetectionFactor {
    DetectionFactor {
        value: estimate.value,
        provenance: DetectionProvenance::Simulated,
    }
}
