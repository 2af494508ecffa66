//! Synthetic worlds, scripted trajectories and sensor logs.

mod dataset;
mod log;
mod world;

use thiserror::Error;

pub use dataset::{default_script, generate_dataset, simulate_step, Dataset, SensorTruthConfig, TrajectoryScript};
pub use log::{log_to_string, parse_log, read_log, resolve_log, write_log, LogBeam, LogRecord};
pub use world::{
    generate_world, synthetic_library, Layout, LibrarySource, MaterialAssignment, WorldSpec, WALL_SEGMENT_CELLS,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("infeasible world spec: {0}")]
    InfeasibleSpec(String),
    #[error("invalid pose: {0}")]
    InvalidPose(String),
    #[error("invalid trajectory script: {0}")]
    InvalidScript(String),
}

impl SimError {
    pub fn name(&self) -> &'static str {
        match self {
            SimError::InfeasibleSpec(_) => "InfeasibleSpec",
            SimError::InvalidPose(_) => "InvalidPose",
            SimError::InvalidScript(_) => "InvalidScript",
        }
    }
}
