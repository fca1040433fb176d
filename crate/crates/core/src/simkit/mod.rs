//! Scenario loading, deterministic simulation, event logging and the live
//! service bridge.

mod agent;
mod engine;
mod scenario;
pub mod service;

pub use agent::{following_handlers, Agent, TargetStatus};
pub use engine::{run, RunSummary, Simulation, TimelineEvent};
pub use scenario::{
    bundled, bundled_scenario, load_scenario, AgentConfig, AlgorithmConfig, ClothesSpec, MapSpec, PersonSpec, RobotSpec,
    Scenario, Waypoint, HOUSE, OPEN_ROOM,
};

use crate::behavior::BehaviorError;
use crate::world::WorldError;

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("invalid scenario at `{path}`: {message}")]
    Scenario { path: String, message: String },
    #[error(transparent)]
    World(#[from] WorldError),
    #[error(transparent)]
    Behavior(#[from] BehaviorError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("service error: {0}")]
    Service(String),
}
