//! Scenario files: a reference scheme, the overrides that subvert it, and the
//! adversary's goal.
//!
//! ```json
//! {
//!   "name": "fullscreen-ad",
//!   "description": "...",
//!   "functionalities": [{"id": "ad-screen", "behavior": {"machine": {...}}}],
//!   "overrides": [{"functionality": "ad-screen", "state": "ad", "action": "close", "target": "store"}],
//!   "interaction": "ad-screen",
//!   "goal": {"terminal_states": [], "actions": ["install"]},
//!   "queries_per_functionality": 4
//! }
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::scheme::{Functionality, GoalPredicate, Override, Scheme, SubvertedImplementation};
use crate::error::{Error, Result};
use crate::files;

pub const BUILTIN_PREFIX: &str = "builtin:";

const BUILTINS: &[(&str, &str)] = &[
    ("one-divergent-input", include_str!("../../fixtures/scenarios/one-divergent-input.json")),
    ("binary-choice", include_str!("../../fixtures/scenarios/binary-choice.json")),
    ("trap-chain", include_str!("../../fixtures/scenarios/trap-chain.json")),
    ("forced-cookie-banner", include_str!("../../fixtures/scenarios/forced-cookie-banner.json")),
    ("rating-popup", include_str!("../../fixtures/scenarios/rating-popup.json")),
    ("fullscreen-ad", include_str!("../../fixtures/scenarios/fullscreen-ad.json")),
    ("cancellation-trap", include_str!("../../fixtures/scenarios/cancellation-trap.json")),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub functionalities: Vec<Functionality>,
    #[serde(default)]
    pub overrides: Vec<Override>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interaction: Option<String>,
    #[serde(default)]
    pub goal: GoalPredicate,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub queries_per_functionality: Option<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub description: String,
    pub spec: Scheme,
    pub implementation: SubvertedImplementation,
    /// Suggested watchdog budget.
    pub queries_per_functionality: Option<u32>,
}

impl Scenario {
    pub fn from_file(file: ScenarioFile) -> Result<Self> {
        let spec = Scheme::new(file.functionalities)?;
        if file.interaction.is_none() && !(file.goal.terminal_states.is_empty() && file.goal.actions.is_empty()) {
            return Err(Error::InvalidScenario("goal given without an interaction functionality".into()));
        }
        if file.queries_per_functionality == Some(0) {
            return Err(Error::InvalidScenario("queries_per_functionality must be at least 1".into()));
        }
        let implementation = SubvertedImplementation::new(spec.clone(), file.overrides, file.goal, file.interaction)?;
        Ok(Self {
            name: file.name,
            description: file.description,
            spec,
            implementation,
            queries_per_functionality: file.queries_per_functionality,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ScenarioFile = files::parse_json(text)?;
        Self::from_file(file)
    }

    pub fn has_interaction(&self) -> bool {
        self.implementation.interaction_id().is_some()
    }
}

pub fn builtin_names() -> impl Iterator<Item = &'static str> {
    BUILTINS.iter().map(|(n, _)| *n)
}

pub fn builtin(name: &str) -> Result<Scenario> {
    let (_, text) = BUILTINS
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| Error::InvalidScenario(format!("unknown built-in scenario {name}")))?;
    Scenario::from_json(text)
}

/// Loads `builtin:NAME` or a scenario file.
pub fn load_scenario(source: &str) -> Result<Scenario> {
    match source.strip_prefix(BUILTIN_PREFIX) {
        Some(name) => builtin(name),
        None => {
            let text = files::read_text(Path::new(source))?;
            Scenario::from_json(&text)
        }
    }
}
