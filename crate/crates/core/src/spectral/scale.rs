use std::f64::consts::LN_2;

use super::{MetricKind, Result, SpectralError, Spectrum};

/// Squared-exponential map from spectral distance to likelihood:
/// `exp(-d² / K)`.
pub fn distance_to_likelihood(d: f64, scale: f64) -> Result<f64> {
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(SpectralError::InvalidScale(scale));
    }
    Ok((-(d * d) / scale).exp())
}

/// Median of a non-empty slice (mean of the two middle values for even
/// lengths). NaNs sort last.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    })
}

/// Likelihood scale for `kind` such that the median distance between
/// distinct library spectra maps to likelihood 0.5:
/// `K = median² / ln 2`.
///
/// All ordered pairs are used so directional metrics contribute both
/// directions. Spectra that cannot be normalised for `kind` are an error.
pub fn calibrate_scale(library: &[Spectrum], kind: MetricKind, window: usize) -> Result<f64> {
    let prepared = library
        .iter()
        .map(|s| kind.prepare(s))
        .collect::<Result<Vec<_>>>()?;
    let mut distances = Vec::new();
    for (i, a) in prepared.iter().enumerate() {
        for (j, b) in prepared.iter().enumerate() {
            if i == j || library[i] == library[j] {
                continue;
            }
            distances.push(kind.distance_prepared(a, b, window)?);
        }
    }
    let med = match median(&distances) {
        Some(m) if m > 0.0 => m,
        _ => return Err(SpectralError::InsufficientLibrary(library.len())),
    };
    Ok(med * med / LN_2)
}
