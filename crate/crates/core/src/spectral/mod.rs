//! Raman spectra and everything needed to compare them.
//!
//! Spectra live on a fixed wavenumber grid. Observed spectra are baseline
//! corrected ([`baseline_correct`]), then each metric normalises its operands
//! the way its formula expects (min-max for the spectral linear kernel,
//! unit-sum for the distribution metrics, none for the spectral angle).
//! A distance becomes a likelihood through [`distance_to_likelihood`], with
//! the scale `K` calibrated from the library by [`calibrate_scale`].

mod library;
mod metrics;
mod noise;
mod preprocess;
mod scale;
mod spectrum;

use thiserror::Error;

pub use library::SpectralLibrary;
pub use metrics::{
    dist_kl, dist_mod_l2, dist_sam, dist_slk, dist_wasserstein, MetricKind, SimilarityMetric,
    DEFAULT_SLK_WINDOW, KL_FLOOR,
};
pub use noise::{apply_sensor_noise, NoiseConfig};
pub use preprocess::{baseline_correct, DEFAULT_BASELINE_ORDER};
pub use scale::{calibrate_scale, distance_to_likelihood, median};
pub use spectrum::{SpectralGrid, Spectrum};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectralError {
    #[error("spectrum has no usable intensity range (all zero or constant)")]
    ZeroSpectrum,
    #[error("spectra are on different wavenumber grids")]
    GridMismatch,
    #[error("modified L2 weight undefined for peak intensity {0}")]
    DegenerateWeight(f64),
    #[error("likelihood scale must be positive, got {0}")]
    InvalidScale(f64),
    #[error("need at least two distinct library spectra, got {0}")]
    InsufficientLibrary(usize),
    #[error("polynomial order {order} too high for {len} bins")]
    InvalidOrder { order: usize, len: usize },
    #[error("invalid spectrum: {0}")]
    InvalidSpectrum(String),
}

impl SpectralError {
    pub fn name(&self) -> &'static str {
        match self {
            SpectralError::ZeroSpectrum => "ZeroSpectrum",
            SpectralError::GridMismatch => "GridMismatch",
            SpectralError::DegenerateWeight(_) => "DegenerateWeight",
            SpectralError::InvalidScale(_) => "InvalidScale",
            SpectralError::InsufficientLibrary(_) => "InsufficientLibrary",
            SpectralError::InvalidOrder { .. } => "InvalidOrder",
            SpectralError::InvalidSpectrum(_) => "InvalidSpectrum",
        }
    }
}

pub type Result<T, E = SpectralError> = std::result::Result<T, E>;
