//! Trajectory evaluation: timestamp association, rigid alignment, absolute
//! trajectory error and relative pose error.

mod ate;
mod stats;
mod trajectory;

use thiserror::Error;

pub use ate::{
    align_rigid, apply_transform, associate, compute_ate, compute_ate_with, compute_rpe, AteOptions,
    Pair, RpeStats,
};
pub use stats::ErrorStats;
pub use trajectory::{TrajectoryLog, TumRecord};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("no timestamp pairs within {max_dt} s")]
    NoOverlap { max_dt: f64 },
    #[error("alignment needs at least two distinct positions")]
    DegenerateGeometry,
    #[error("need at least {needed} pairs, have {have}")]
    InsufficientData { needed: usize, have: usize },
    #[error("timestamps must be strictly increasing (sample {index})")]
    NonMonotonic { index: usize },
}

impl EvalError {
    pub fn name(&self) -> &'static str {
        match self {
            EvalError::NoOverlap { .. } => "NoOverlap",
            EvalError::DegenerateGeometry => "DegenerateGeometry",
            EvalError::InsufficientData { .. } => "InsufficientData",
            EvalError::NonMonotonic { .. } => "NonMonotonic",
        }
    }
}
