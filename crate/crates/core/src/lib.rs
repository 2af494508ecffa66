//! Material-aware Monte-Carlo localisation.
//!
//! Pose hypotheses are weighted by how well Raman spectra observed along a
//! rotating probe's bearings match the spectra embedded in a material
//! floorplan. The crate also ships a kinematic simulator that produces
//! synthetic worlds and sensor logs, and an ATE/RPE trajectory evaluator.
//!
//! Module map:
//!
//! - [`spectral`]: spectra, preprocessing, noise synthesis, similarity metrics
//! - [`worldmap`]: material maps, chamfer fields, raycasting
//! - [`motion`]: SE(2) algebra and the odometry motion model
//! - [`sensing`]: beam and likelihood-field sensor models
//! - [`filter`]: the particle filter
//! - [`sim`]: synthetic worlds, trajectories and logs
//! - [`eval`]: trajectory association, alignment, ATE and RPE
//! - [`pipeline`]: end-to-end runs and parameter sweeps used by the CLI

pub mod error;
pub mod eval;
pub mod filter;
pub mod motion;
pub mod pipeline;
pub mod sensing;
pub mod sim;
pub mod spectral;
pub mod worldmap;

pub mod rng;

pub use error::Error;
pub use motion::{OdometryDelta, Pose2};
pub use spectral::Spectrum;
pub use worldmap::MaterialMap;
