//! Executable schemes: a reference scheme and an implementation that may
//! diverge from it on chosen inputs or transitions.

use std::collections::{BTreeSet, HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MappingEntry {
    pub input: String,
    pub output: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Action {
    pub id: String,
    pub target: String,
    /// Cue class that marks this action as a lure (e.g. "ui_feature",
    /// "knowledge"). A heuristic challenger may recognize and avoid it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cue: Option<String>,
}

/// A screen of the interaction. States without actions are terminal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct State {
    pub id: String,
    #[serde(default)]
    pub observation: String,
    #[serde(default)]
    pub actions: Vec<Action>,
}

impl State {
    pub fn is_terminal(&self) -> bool {
        self.actions.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InteractionMachine {
    pub start: String,
    pub states: Vec<State>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Behavior {
    /// Deterministic lookup over a finite input domain.
    Mapping(Vec<MappingEntry>),
    /// Finite-state interaction with the user.
    Machine(InteractionMachine),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Functionality {
    pub id: String,
    pub behavior: Behavior,
}

/// Index structures for one functionality. Queries are numbered in
/// declaration order: mapping entries, or (state, action) pairs state by
/// state.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Compiled {
    /// Spec response for each query.
    pub responses: Vec<String>,
    pub machine: Option<CompiledMachine>,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct CompiledMachine {
    pub start: usize,
    pub state_index: HashMap<String, usize>,
    /// First query number of each state's actions.
    pub action_offset: Vec<usize>,
    /// Target state index for each query.
    pub targets: Vec<usize>,
}

impl CompiledMachine {
    pub fn query(&self, state: usize, action: usize) -> usize {
        self.action_offset[state] + action
    }
}

/// An ordered list of functionalities with unique ids.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scheme {
    functionalities: Vec<Functionality>,
    #[serde(skip)]
    compiled: Vec<Compiled>,
}

impl<'de> Deserialize<'de> for Scheme {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            functionalities: Vec<Functionality>,
        }
        let raw = Raw::deserialize(deserializer)?;
        Scheme::new(raw.functionalities).map_err(serde::de::Error::custom)
    }
}

fn compile(f: &Functionality) -> Result<Compiled> {
    let bad = |msg: String| Error::InvalidScenario(format!("functionality {}: {msg}", f.id));
    match &f.behavior {
        Behavior::Mapping(entries) => {
            if entries.is_empty() {
                return Err(bad("empty input domain".into()));
            }
            let mut seen = BTreeSet::new();
            for e in entries {
                if !seen.insert(e.input.as_str()) {
                    return Err(bad(format!("duplicate input {}", e.input)));
                }
            }
            Ok(Compiled {
                responses: entries.iter().map(|e| e.output.clone()).collect(),
                machine: None,
            })
        }
        Behavior::Machine(m) => {
            let mut state_index = HashMap::new();
            for (i, s) in m.states.iter().enumerate() {
                if state_index.insert(s.id.clone(), i).is_some() {
                    return Err(bad(format!("duplicate state {}", s.id)));
                }
            }
            let start = *state_index
                .get(&m.start)
                .ok_or_else(|| bad(format!("unknown start state {}", m.start)))?;
            if !m.states.iter().any(State::is_terminal) {
                return Err(bad("no terminal state".into()));
            }
            let mut responses = Vec::new();
            let mut targets = Vec::new();
            let mut action_offset = Vec::with_capacity(m.states.len());
            for s in &m.states {
                action_offset.push(targets.len());
                let mut seen = BTreeSet::new();
                for a in &s.actions {
                    if !seen.insert(a.id.as_str()) {
                        return Err(bad(format!("duplicate action {} in state {}", a.id, s.id)));
                    }
                    let t = *state_index.get(&a.target).ok_or_else(|| {
                        bad(format!("action {}/{} targets unknown state {}", s.id, a.id, a.target))
                    })?;
                    responses.push(a.target.clone());
                    targets.push(t);
                }
            }
            if targets.is_empty() {
                return Err(bad("machine has no actions".into()));
            }
            Ok(Compiled {
                responses,
                machine: Some(CompiledMachine {
                    start,
                    state_index,
                    action_offset,
                    targets,
                }),
            })
        }
    }
}

impl Scheme {
    pub fn new(functionalities: Vec<Functionality>) -> Result<Self> {
        if functionalities.is_empty() {
            return Err(Error::InvalidScenario("scheme has no functionalities".into()));
        }
        let mut seen = BTreeSet::new();
        for f in &functionalities {
            if !seen.insert(f.id.as_str()) {
                return Err(Error::InvalidScenario(format!("duplicate functionality {}", f.id)));
            }
        }
        let compiled = functionalities.iter().map(compile).collect::<Result<Vec<_>>>()?;
        Ok(Self {
            functionalities,
            compiled,
        })
    }

    pub fn functionalities(&self) -> &[Functionality] {
        &self.functionalities
    }

    pub fn len(&self) -> usize {
        self.functionalities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functionalities.is_empty()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.functionalities.iter().position(|f| f.id == id)
    }

    /// Number of distinct queries a watchdog can make to functionality `f`.
    pub fn domain_size(&self, f: usize) -> usize {
        self.compiled[f].responses.len()
    }

    fn machine(&self, f: usize) -> Option<(&InteractionMachine, &CompiledMachine)> {
        match (&self.functionalities[f].behavior, &self.compiled[f].machine) {
            (Behavior::Machine(m), Some(c)) => Some((m, c)),
            _ => None,
        }
    }
}

/// Something a watchdog can interrogate: the reference scheme itself or an
/// implementation of it.
pub trait Oracle: Sync {
    fn scheme(&self) -> &Scheme;
    fn respond(&self, functionality: usize, query: usize) -> &str;
}

impl Oracle for Scheme {
    fn scheme(&self) -> &Scheme {
        self
    }

    fn respond(&self, functionality: usize, query: usize) -> &str {
        &self.compiled[functionality].responses[query]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputOverride {
    pub functionality: String,
    pub input: String,
    pub output: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionOverride {
    pub functionality: String,
    pub state: String,
    pub action: String,
    pub target: String,
}

/// A single divergence from the reference scheme.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Override {
    Output(OutputOverride),
    Transition(TransitionOverride),
}

/// Marks the outcomes the adversary wants: reaching one of the listed
/// terminal states, or taking one of the listed actions anywhere.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoalPredicate {
    #[serde(default)]
    pub terminal_states: BTreeSet<String>,
    #[serde(default)]
    pub actions: BTreeSet<String>,
}

impl GoalPredicate {
    pub fn holds(&self, trace: &Trace) -> bool {
        self.terminal_states.contains(&trace.terminal)
            || trace.steps.iter().any(|(_, a)| self.actions.contains(a))
    }
}

/// One complete walk through an interaction machine.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Trace {
    /// (state, action) pairs in order.
    pub steps: Vec<(String, String)>,
    pub terminal: String,
}

/// Interaction machine of an implementation with overrides applied and goal
/// flags precomputed.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Interaction {
    pub functionality: usize,
    pub targets: Vec<usize>,
    pub goal_state: Vec<bool>,
    pub goal_query: Vec<bool>,
}

/// A possibly subverted implementation of a scheme. With no overrides it
/// behaves exactly like the reference scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct SubvertedImplementation {
    base: Scheme,
    overrides: Vec<Override>,
    goal: GoalPredicate,
    interaction_id: Option<String>,
    responses: HashMap<(usize, usize), String>,
    interaction: Option<Interaction>,
}

impl SubvertedImplementation {
    pub fn new(
        base: Scheme,
        overrides: Vec<Override>,
        goal: GoalPredicate,
        interaction: Option<String>,
    ) -> Result<Self> {
        let mut responses = HashMap::new();
        let mut transition_targets: HashMap<(usize, usize), usize> = HashMap::new();
        for o in &overrides {
            let (f_id, key) = match o {
                Override::Output(o) => (&o.functionality, o.input.clone()),
                Override::Transition(t) => (&t.functionality, format!("{}/{}", t.state, t.action)),
            };
            let bad = |msg: &str| Error::InvalidScenario(format!("override {f_id}:{key}: {msg}"));
            let f = base.index_of(f_id).ok_or_else(|| bad("unknown functionality"))?;
            let (query, response) = match (o, &base.functionalities[f].behavior) {
                (Override::Output(o), Behavior::Mapping(entries)) => {
                    let q = entries
                        .iter()
                        .position(|e| e.input == o.input)
                        .ok_or_else(|| bad("unknown input"))?;
                    (q, o.output.clone())
                }
                (Override::Transition(t), Behavior::Machine(m)) => {
                    let (_, cm) = base.machine(f).expect("machine compiled");
                    let s = *cm.state_index.get(&t.state).ok_or_else(|| bad("unknown state"))?;
                    let a = m.states[s]
                        .actions
                        .iter()
                        .position(|a| a.id == t.action)
                        .ok_or_else(|| bad("unknown action"))?;
                    let target = *cm.state_index.get(&t.target).ok_or_else(|| bad("unknown target state"))?;
                    let q = cm.query(s, a);
                    transition_targets.insert((f, q), target);
                    (q, t.target.clone())
                }
                (Override::Output(_), _) => return Err(bad("output override on an interaction machine")),
                (Override::Transition(_), _) => return Err(bad("transition override on a mapping")),
            };
            if responses.insert((f, query), response).is_some() {
                return Err(bad("duplicate override"));
            }
        }

        let compiled_interaction = match &interaction {
            None => None,
            Some(id) => {
                let f = base
                    .index_of(id)
                    .ok_or_else(|| Error::InvalidScenario(format!("unknown interaction functionality {id}")))?;
                let (machine, cm) = base
                    .machine(f)
                    .ok_or_else(|| Error::InvalidScenario(format!("interaction functionality {id} is not a machine")))?;
                for s in &goal.terminal_states {
                    match cm.state_index.get(s) {
                        Some(&i) if machine.states[i].is_terminal() => {}
                        Some(_) => {
                            return Err(Error::InvalidScenario(format!("goal state {s} is not terminal")))
                        }
                        None => return Err(Error::InvalidScenario(format!("unknown goal state {s}"))),
                    }
                }
                for a in &goal.actions {
                    if !machine.states.iter().any(|s| s.actions.iter().any(|x| &x.id == a)) {
                        return Err(Error::InvalidScenario(format!("unknown goal action {a}")));
                    }
                }
                let mut targets = cm.targets.clone();
                for (&(ff, q), &t) in &transition_targets {
                    if ff == f {
                        targets[q] = t;
                    }
                }
                let goal_state = machine.states.iter().map(|s| goal.terminal_states.contains(&s.id)).collect();
                let goal_query = machine
                    .states
                    .iter()
                    .flat_map(|s| s.actions.iter().map(|a| goal.actions.contains(&a.id)))
                    .collect();
                let interaction = Interaction {
                    functionality: f,
                    targets,
                    goal_state,
                    goal_query,
                };
                if !terminal_reachable(machine, cm, &interaction.targets) {
                    return Err(Error::InvalidScenario(format!(
                        "no terminal state reachable from {} in the implementation",
                        machine.start
                    )));
                }
                Some(interaction)
            }
        };

        Ok(Self {
            base,
            overrides,
            goal,
            interaction_id: interaction,
            responses,
            interaction: compiled_interaction,
        })
    }

    /// The reference scheme implemented faithfully.
    pub fn honest(spec: Scheme) -> Self {
        Self::new(spec, Vec::new(), GoalPredicate::default(), None).expect("no overrides to validate")
    }

    pub fn base(&self) -> &Scheme {
        &self.base
    }

    pub fn overrides(&self) -> &[Override] {
        &self.overrides
    }

    pub fn goal(&self) -> &GoalPredicate {
        &self.goal
    }

    pub fn interaction_id(&self) -> Option<&str> {
        self.interaction_id.as_deref()
    }

    pub fn is_honest(&self) -> bool {
        self.overrides.is_empty()
    }

    #[cfg(test)]
    pub(crate) fn interaction(&self) -> Option<&Interaction> {
        self.interaction.as_ref()
    }

    /// The interaction machine as the user sees it (overrides applied).
    pub(crate) fn machine(&self) -> Option<(&InteractionMachine, &CompiledMachine, &Interaction)> {
        let i = self.interaction.as_ref()?;
        let (m, c) = self.base.machine(i.functionality)?;
        Some((m, c, i))
    }
}

impl Oracle for SubvertedImplementation {
    fn scheme(&self) -> &Scheme {
        &self.base
    }

    fn respond(&self, functionality: usize, query: usize) -> &str {
        match self.responses.get(&(functionality, query)) {
            Some(r) => r,
            None => self.base.respond(functionality, query),
        }
    }
}

fn terminal_reachable(machine: &InteractionMachine, cm: &CompiledMachine, targets: &[usize]) -> bool {
    let mut seen = vec![false; machine.states.len()];
    let mut queue = VecDeque::from([cm.start]);
    seen[cm.start] = true;
    while let Some(s) = queue.pop_front() {
        if machine.states[s].is_terminal() {
            return true;
        }
        for a in 0..machine.states[s].actions.len() {
            let t = targets[cm.query(s, a)];
            if !seen[t] {
                seen[t] = true;
                queue.push_back(t);
            }
        }
    }
    false
}
