use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use super::preprocess::bin_coordinate;
use super::{Result, SpectralError, Spectrum};
use crate::rng::rng_from_seed;

/// Order of the random baseline drift polynomial.
const BASELINE_DRIFT_ORDER: usize = 3;

/// Raman probe noise: photon shot noise, read noise and baseline drift.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    /// Expected photon count per unit intensity. Zero disables shot noise.
    pub shot_scale: f64,
    /// Additive Gaussian read noise, intensity units.
    pub read_sigma: f64,
    /// Standard deviation of each coefficient of a cubic baseline over the
    /// normalised bin axis [-1, 1].
    pub baseline_coeffs_sigma: f64,
    pub rng_seed: u64,
}

impl NoiseConfig {
    pub fn noiseless() -> Self {
        NoiseConfig {
            shot_scale: 0.0,
            read_sigma: 0.0,
            baseline_coeffs_sigma: 0.0,
            rng_seed: 0,
        }
    }

    pub fn with_seed(self, rng_seed: u64) -> Self {
        NoiseConfig { rng_seed, ..self }
    }

    pub fn is_noiseless(&self) -> bool {
        self.shot_scale == 0.0 && self.read_sigma == 0.0 && self.baseline_coeffs_sigma == 0.0
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v >= 0.0 && v.is_finite();
        if ok(self.shot_scale) && ok(self.read_sigma) && ok(self.baseline_coeffs_sigma) {
            Ok(())
        } else {
            Err(SpectralError::InvalidSpectrum(format!(
                "noise parameters must be finite and non-negative: {self:?}"
            )))
        }
    }
}

impl Default for NoiseConfig {
    /// Peak intensities of library spectra sit near 1.0, so a shot scale of
    /// 400 means ~400 photons at the strongest peak (5% relative noise).
    fn default() -> Self {
        NoiseConfig {
            shot_scale: 400.0,
            read_sigma: 0.01,
            baseline_coeffs_sigma: 0.05,
            rng_seed: 0,
        }
    }
}

/// Draw a noisy observation of `s`. Deterministic for a fixed seed.
pub fn apply_sensor_noise(s: &Spectrum, cfg: &NoiseConfig) -> Result<Spectrum> {
    cfg.validate()?;
    if cfg.is_noiseless() {
        return Ok(s.clone());
    }
    let mut rng = rng_from_seed(cfg.rng_seed);
    let n = s.len();

    let mut out: Vec<f64> = if cfg.shot_scale > 0.0 {
        s.intensities()
            .iter()
            .map(|&i| {
                let lambda = cfg.shot_scale * i;
                if lambda > 0.0 {
                    // λ is finite and positive here, so construction cannot fail.
                    let counts: f64 = Poisson::new(lambda).expect("valid rate").sample(&mut rng);
                    counts / cfg.shot_scale
                } else {
                    0.0
                }
            })
            .collect()
    } else {
        s.intensities().to_vec()
    };

    if cfg.read_sigma > 0.0 {
        let read = Normal::new(0.0, cfg.read_sigma).expect("finite sigma");
        for v in out.iter_mut() {
            *v += read.sample(&mut rng);
        }
    }

    if cfg.baseline_coeffs_sigma > 0.0 {
        let coeff = Normal::new(0.0, cfg.baseline_coeffs_sigma).expect("finite sigma");
        let coeffs: Vec<f64> = (0..=BASELINE_DRIFT_ORDER).map(|_| coeff.sample(&mut rng)).collect();
        for (bin, v) in out.iter_mut().enumerate() {
            let x = bin_coordinate(bin, n);
            *v += coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c);
        }
    }

    for v in out.iter_mut() {
        *v = v.max(0.0);
    }
    Ok(Spectrum::from_parts_unchecked(s.grid(), out))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat(v: f64, n: usize) -> Spectrum {
        Spectrum::from_values(&vec![v; n]).unwrap()
    }

    #[test]
    fn zero_noise_is_identity() {
        let s = Spectrum::from_values(&[0.1, 0.5, 0.9, 0.0]).unwrap();
        assert_eq!(apply_sensor_noise(&s, &NoiseConfig::noiseless()).unwrap(), s);
    }

    #[test]
    fn same_seed_same_output() {
        let s = flat(0.7, 64);
        let cfg = NoiseConfig::default().with_seed(99);
        let a = apply_sensor_noise(&s, &cfg).unwrap();
        let b = apply_sensor_noise(&s, &cfg).unwrap();
        assert_eq!(a, b);
        let c = apply_sensor_noise(&s, &cfg.with_seed(100)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn zero_input_yields_noise_only() {
        let s = flat(0.0, 32);
        let out = apply_sensor_noise(&s, &NoiseConfig::default().with_seed(3)).unwrap();
        assert!(out.intensities().iter().all(|v| *v >= 0.0));
        assert!(out.sum() > 0.0);
    }

    #[test]
    fn poisson_moments() {
        // 10^5 draws at intensity 1.0 with shot_scale 1e4: mean 1 ± 3·σ/√N,
        // variance ≈ 1/shot_scale.
        let shot_scale = 1e4;
        let s = flat(1.0, 100_000);
        let cfg = NoiseConfig {
            shot_scale,
            read_sigma: 0.0,
            baseline_coeffs_sigma: 0.0,
            rng_seed: 11,
        };
        let out = apply_sensor_noise(&s, &cfg).unwrap();
        let n = out.len() as f64;
        let mean = out.sum() / n;
        let var = out.intensities().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((mean - 1.0).abs() < 3.0 * (1e-2 / n.sqrt()), "mean {mean}");
        // Sample variance of N draws has relative SE √(2/N) ≈ 0.45%; allow 3%.
        assert!((var * shot_scale - 1.0).abs() < 0.03, "var {var}");
    }

    #[test]
    fn rejects_negative_sigma() {
        let cfg = NoiseConfig {
            read_sigma: -1.0,
            ..NoiseConfig::default()
        };
        assert!(apply_sensor_noise(&flat(1.0, 4), &cfg).is_err());
    }
}
