//! Executable detection/advantage game over toy schemes.

mod play;
mod scenario;
mod scheme;

pub use play::*;
pub use scenario::{builtin, builtin_names, load_scenario, Scenario, ScenarioFile, BUILTIN_PREFIX};
pub use scheme::{
    Action, Behavior, Functionality, GoalPredicate, InteractionMachine, MappingEntry, Oracle, OutputOverride,
    Override, Scheme, State, SubvertedImplementation, Trace, TransitionOverride,
};
