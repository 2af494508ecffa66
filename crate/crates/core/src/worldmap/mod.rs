//! Material floorplans: occupancy plus a per-cell library spectrum,
//! chamfer cost fields derived from them, and grid raycasting.

mod chamfer;
mod io;
mod map;
mod raycast;

use thiserror::Error;

pub use chamfer::{
    build_range_chamfer, build_seeded_chamfer, build_spectral_chamfer, chamfer_transform, ChamferCosts,
    ChamferField, FieldSource,
};
pub use io::{load_map, MapFiles, OccupancyThresholds};
pub use map::{MaterialMap, Occupancy};
pub use raycast::RayHit;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MapError {
    #[error("map component mismatch: {0}")]
    MapMismatch(String),
    #[error("unknown material: {0}")]
    UnknownMaterial(String),
    #[error("map has no occupied cells")]
    EmptyMap,
    #[error("pose ({x:.3}, {y:.3}) lies outside the map")]
    OutOfBounds { x: f64, y: f64 },
    #[error("invalid map: {0}")]
    InvalidMap(String),
}

impl MapError {
    pub fn name(&self) -> &'static str {
        match self {
            MapError::MapMismatch(_) => "MapMismatch",
            MapError::UnknownMaterial(_) => "UnknownMaterial",
            MapError::EmptyMap => "EmptyMap",
            MapError::OutOfBounds { .. } => "OutOfBounds",
            MapError::InvalidMap(_) => "InvalidMap",
        }
    }
}
