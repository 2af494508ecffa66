use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{Result, SpectralError};

/// Wavenumber axis shared by comparable spectra.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralGrid {
    /// First bin centre, cm⁻¹.
    pub start: f64,
    /// Bin spacing, cm⁻¹.
    pub step: f64,
    pub len: usize,
}

impl SpectralGrid {
    pub fn new(start: f64, step: f64, len: usize) -> Result<Self> {
        if !(step > 0.0) || !step.is_finite() || !start.is_finite() {
            return Err(SpectralError::InvalidSpectrum(format!(
                "grid step must be positive and finite, got {step}"
            )));
        }
        if len < 2 {
            return Err(SpectralError::InvalidSpectrum(format!(
                "need at least 2 bins, got {len}"
            )));
        }
        Ok(SpectralGrid { start, step, len })
    }

    /// 200–3000 cm⁻¹ in 512 bins, covering the Raman fingerprint region.
    pub fn default_raman() -> Self {
        SpectralGrid {
            start: 200.0,
            step: 2800.0 / 511.0,
            len: 512,
        }
    }

    pub fn wavenumber(&self, bin: usize) -> f64 {
        self.start + self.step * bin as f64
    }
}

impl Default for SpectralGrid {
    fn default() -> Self {
        SpectralGrid::default_raman()
    }
}

/// Non-negative intensities over a wavenumber grid.
///
/// Intensities are shared behind an `Arc` so library spectra can be handed
/// to many workers without copying.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    grid: SpectralGrid,
    intensities: Arc<[f64]>,
}

impl Spectrum {
    pub fn new(grid: SpectralGrid, intensities: Vec<f64>) -> Result<Self> {
        if intensities.len() != grid.len {
            return Err(SpectralError::InvalidSpectrum(format!(
                "grid has {} bins but {} intensities were given",
                grid.len,
                intensities.len()
            )));
        }
        if let Some(bad) = intensities.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(SpectralError::InvalidSpectrum(format!(
                "intensities must be finite and non-negative, found {bad}"
            )));
        }
        Ok(Spectrum {
            grid,
            intensities: intensities.into(),
        })
    }

    /// Spectrum on a unit grid starting at 0 cm⁻¹. Handy for small fixtures.
    pub fn from_values(intensities: &[f64]) -> Result<Self> {
        let grid = SpectralGrid::new(0.0, 1.0, intensities.len())?;
        Spectrum::new(grid, intensities.to_vec())
    }

    /// Caller guarantees the invariants; used after operations that
    /// preserve them by construction.
    pub(crate) fn from_parts_unchecked(grid: SpectralGrid, intensities: Vec<f64>) -> Self {
        debug_assert_eq!(grid.len, intensities.len());
        debug_assert!(intensities.iter().all(|v| *v >= 0.0 && v.is_finite()));
        Spectrum {
            grid,
            intensities: intensities.into(),
        }
    }

    pub fn grid(&self) -> SpectralGrid {
        self.grid
    }

    pub fn intensities(&self) -> &[f64] {
        &self.intensities
    }

    pub fn len(&self) -> usize {
        self.intensities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intensities.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.intensities.iter().sum()
    }

    pub fn max(&self) -> f64 {
        self.intensities.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.intensities.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn is_comparable(&self, other: &Spectrum) -> bool {
        self.grid == other.grid
    }

    pub fn ensure_comparable(&self, other: &Spectrum) -> Result<()> {
        if self.is_comparable(other) {
            Ok(())
        } else {
            Err(SpectralError::GridMismatch)
        }
    }

    /// Multiply every intensity by `factor` (must be non-negative).
    pub fn scaled(&self, factor: f64) -> Result<Spectrum> {
        Spectrum::new(
            self.grid,
            self.intensities.iter().map(|v| v * factor).collect(),
        )
    }

    /// Rescale so intensities sum to one.
    pub fn normalize_unit_sum(&self) -> Result<Spectrum> {
        let total = self.sum();
        if !(total > 0.0) {
            return Err(SpectralError::ZeroSpectrum);
        }
        Ok(Spectrum::from_parts_unchecked(
            self.grid,
            self.intensities.iter().map(|v| v / total).collect(),
        ))
    }

    /// Affine map onto exactly `[0, 1]`.
    pub fn normalize_minmax(&self) -> Result<Spectrum> {
        let (lo, hi) = (self.min(), self.max());
        if !(hi > lo) {
            return Err(SpectralError::ZeroSpectrum);
        }
        let span = hi - lo;
        let values = self
            .intensities
            .iter()
            .map(|&v| {
                // Pin the extremes so the range is exactly [0, 1].
                if v == hi {
                    1.0
                } else {
                    ((v - lo) / span).clamp(0.0, 1.0)
                }
            })
            .collect();
        Ok(Spectrum::from_parts_unchecked(self.grid, values))
    }
}
