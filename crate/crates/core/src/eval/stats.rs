use serde::{Deserialize, Serialize};

use crate::spectral::median;

/// Summary statistics of a set of non-negative error samples.
///
/// `sd` is the sample standard deviation (n − 1 denominator, 0 for a
/// single sample), so `rmse² = mean² + sd²·(n − 1)/n`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ErrorStats {
    pub rmse: f64,
    pub mean: f64,
    pub median: f64,
    pub sd: f64,
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl ErrorStats {
    pub fn from_samples(samples: &[f64]) -> ErrorStats {
        if samples.is_empty() {
            return ErrorStats::default();
        }
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let mean_sq = samples.iter().map(|v| v * v).sum::<f64>() / n;
        let sd = if samples.len() > 1 {
            (samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        ErrorStats {
            rmse: mean_sq.sqrt(),
            mean,
            median: median(samples).unwrap_or(0.0),
            sd,
            min: samples.iter().copied().fold(f64::INFINITY, f64::min),
            max: samples.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            count: samples.len(),
        }
    }
}
