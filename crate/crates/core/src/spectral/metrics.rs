use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{distance_to_likelihood, Result, SpectralError, Spectrum};

/// Floor added to every bin before the KL sum so empty bins stay finite.
pub const KL_FLOOR: f64 = 1e-9;

/// Half-width of the difference window of the spectral linear kernel.
pub const DEFAULT_SLK_WINDOW: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricKind {
    Slk,
    ModL2,
    Wasserstein,
    Kl,
    Sam,
}

impl MetricKind {
    pub const ALL: [MetricKind; 5] = [
        MetricKind::Slk,
        MetricKind::ModL2,
        MetricKind::Wasserstein,
        MetricKind::Kl,
        MetricKind::Sam,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            MetricKind::Slk => "slk",
            MetricKind::ModL2 => "mod-l2",
            MetricKind::Wasserstein => "wasserstein",
            MetricKind::Kl => "kl",
            MetricKind::Sam => "sam",
        }
    }

    /// Symmetric metrics satisfy d(a, b) = d(b, a).
    pub fn is_symmetric(&self) -> bool {
        !matches!(self, MetricKind::Kl | MetricKind::ModL2)
    }

    /// Normalise a spectrum into the form this metric's formula expects.
    pub fn prepare(&self, s: &Spectrum) -> Result<Spectrum> {
        match self {
            MetricKind::Slk => s.normalize_minmax(),
            MetricKind::ModL2 | MetricKind::Wasserstein | MetricKind::Kl => s.normalize_unit_sum(),
            MetricKind::Sam => {
                if s.max() > 0.0 {
                    Ok(s.clone())
                } else {
                    Err(SpectralError::ZeroSpectrum)
                }
            }
        }
    }

    /// Distance between spectra already passed through [`MetricKind::prepare`].
    /// `observed` is the probe reading, `reference` the map spectrum.
    pub fn distance_prepared(&self, observed: &Spectrum, reference: &Spectrum, window: usize) -> Result<f64> {
        match self {
            MetricKind::Slk => dist_slk(observed, reference, window),
            MetricKind::ModL2 => dist_mod_l2(observed, reference),
            MetricKind::Wasserstein => dist_wasserstein(observed, reference),
            MetricKind::Kl => dist_kl(observed, reference),
            MetricKind::Sam => dist_sam(observed, reference),
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MetricKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "slk" => Ok(MetricKind::Slk),
            "mod-l2" | "modl2" | "mod_l2" => Ok(MetricKind::ModL2),
            "wasserstein" | "emd" => Ok(MetricKind::Wasserstein),
            "kl" => Ok(MetricKind::Kl),
            "sam" => Ok(MetricKind::Sam),
            other => Err(format!(
                "unknown metric `{other}` (expected slk, mod-l2, wasserstein, kl or sam)"
            )),
        }
    }
}

/// A metric together with its window (SLK only) and likelihood scale `K`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityMetric {
    pub kind: MetricKind,
    pub window: usize,
    pub scale: f64,
}

impl SimilarityMetric {
    pub fn new(kind: MetricKind, window: usize, scale: f64) -> Result<Self> {
        if window == 0 {
            return Err(SpectralError::InvalidSpectrum("SLK window must be >= 1".into()));
        }
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(SpectralError::InvalidScale(scale));
        }
        Ok(SimilarityMetric { kind, window, scale })
    }

    /// Normalise both operands, then measure.
    pub fn distance(&self, observed: &Spectrum, reference: &Spectrum) -> Result<f64> {
        observed.ensure_comparable(reference)?;
        let a = self.kind.prepare(observed)?;
        let b = self.kind.prepare(reference)?;
        self.kind.distance_prepared(&a, &b, self.window)
    }

    pub fn likelihood(&self, observed: &Spectrum, reference: &Spectrum) -> Result<f64> {
        distance_to_likelihood(self.distance(observed, reference)?, self.scale)
    }
}

/// Kernel-induced squared distance `k(a,a) + k(b,b) - 2 k(a,b)` of the
/// spectral linear kernel with difference window `±window`.
///
/// The kernel is bilinear, so the distance equals `k(c, c)` for `c = a - b`:
/// the squared L2 norm of `c` plus the squared windowed differences of `c`.
/// Window indices falling off either end are clamped to the edge bin.
pub fn dist_slk(a: &Spectrum, b: &Spectrum, window: usize) -> Result<f64> {
    a.ensure_comparable(b)?;
    if window == 0 {
        return Err(SpectralError::InvalidSpectrum("SLK window must be >= 1".into()));
    }
    let c: Vec<f64> = a
        .intensities()
        .iter()
        .zip(b.intensities())
        .map(|(x, y)| x - y)
        .collect();
    let last = c.len() as isize - 1;
    let w = window as isize;
    let mut total = 0.0;
    for n in 0..c.len() {
        let cn = c[n];
        let mut term = cn * cn;
        for off in -w..=w {
            let j = (n as isize + off).clamp(0, last) as usize;
            let diff = cn - c[j];
            term += diff * diff;
        }
        total += term;
    }
    Ok(total)
}

/// Modified Euclidean distance with the peak-dependent reward/penalty
/// weight. `observed` and `reference` must both be unit-sum.
///
/// Per bin, with `x` the reference intensity and `z` the observed one:
/// `D/w` when `x != 0 && z > x`, `w·D` when `x == 0 && z > x`, `D`
/// otherwise, where `D = (z - x)²`. `w = m / (1 - m)` for `m = max(observed)`,
/// inverted when `m <= 0.5`. Returns the square root of the sum.
pub fn dist_mod_l2(observed: &Spectrum, reference: &Spectrum) -> Result<f64> {
    observed.ensure_comparable(reference)?;
    let m = observed.max();
    if !(m > 0.0) || m >= 1.0 {
        return Err(SpectralError::DegenerateWeight(m));
    }
    let w = if m <= 0.5 { (1.0 - m) / m } else { m / (1.0 - m) };
    let sum: f64 = observed
        .intensities()
        .iter()
        .zip(reference.intensities())
        .map(|(&z, &x)| {
            let d = (z - x) * (z - x);
            if z > x {
                if x != 0.0 {
                    d / w
                } else {
                    w * d
                }
            } else {
                d
            }
        })
        .sum();
    Ok(sum.sqrt())
}

/// First Wasserstein distance on the bin axis, in bins: `Σ |CDF_a - CDF_b|`.
pub fn dist_wasserstein(a: &Spectrum, b: &Spectrum) -> Result<f64> {
    a.ensure_comparable(b)?;
    let mut cdf_gap = 0.0;
    let mut total = 0.0;
    let n = a.len();
    for (i, (x, y)) in a.intensities().iter().zip(b.intensities()).enumerate() {
        cdf_gap += x - y;
        // The final CDF difference is zero for unit-sum inputs.
        if i + 1 < n {
            total += cdf_gap.abs();
        }
    }
    Ok(total)
}

/// `KL(observed ‖ reference)` in nats after adding [`KL_FLOOR`] to every
/// bin of both operands and renormalising.
pub fn dist_kl(observed: &Spectrum, reference: &Spectrum) -> Result<f64> {
    observed.ensure_comparable(reference)?;
    let n = observed.len() as f64;
    let za = observed.sum() + KL_FLOOR * n;
    let zb = reference.sum() + KL_FLOOR * n;
    if !(za > 0.0) || !(zb > 0.0) {
        return Err(SpectralError::ZeroSpectrum);
    }
    let kl: f64 = observed
        .intensities()
        .iter()
        .zip(reference.intensities())
        .map(|(&a, &b)| {
            let p = (a + KL_FLOOR) / za;
            let q = (b + KL_FLOOR) / zb;
            p * (p / q).ln()
        })
        .sum();
    Ok(kl.max(0.0))
}

/// Spectral angle in radians.
///
/// Evaluated as `2·atan2(|â - b̂|, |â + b̂|)` on the unit vectors, which is the
/// arccosine of the clamped cosine similarity but without the loss of
/// precision arccos suffers near 0.
pub fn dist_sam(a: &Spectrum, b: &Spectrum) -> Result<f64> {
    a.ensure_comparable(b)?;
    let na = a.intensities().iter().map(|v| v * v).sum::<f64>().sqrt();
    let nb = b.intensities().iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(na > 0.0) || !(nb > 0.0) {
        return Err(SpectralError::ZeroSpectrum);
    }
    let (mut diff, mut sum) = (0.0, 0.0);
    for (x, y) in a.intensities().iter().zip(b.intensities()) {
        let (u, v) = (x / na, y / nb);
        diff += (u - v) * (u - v);
        sum += (u + v) * (u + v);
    }
    Ok((2.0 * diff.sqrt().atan2(sum.sqrt())).clamp(0.0, PI))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, LN_2};

    fn spec(v: &[f64]) -> Spectrum {
        Spectrum::from_values(v).unwrap()
    }

    /// k(a, b) summed literally, with clamped window indices.
    fn slk_kernel(a: &[f64], b: &[f64], w: usize) -> f64 {
        let last = a.len() as isize - 1;
        let mut k = 0.0;
        for n in 0..a.len() {
            k += a[n] * b[n];
            for j in (n as isize - w as isize)..=(n as isize + w as isize) {
                let j = j.clamp(0, last) as usize;
                k += (a[n] - a[j]) * (b[n] - b[j]);
            }
        }
        k
    }

    #[test]
    fn slk_identity_and_direct_sum() {
        let a = spec(&[0.0, 1.0, 0.0]);
        assert_eq!(dist_slk(&a, &a, 2).unwrap(), 0.0);
        let zero = spec(&[0.0, 0.0, 0.0]);
        let d = dist_slk(&a, &zero, 1).unwrap();
        // k(a,a) = 1 (n=0) + 3 (n=1) + 1 (n=2)
        assert_eq!(slk_kernel(a.intensities(), a.intensities(), 1), 5.0);
        assert!((d - 5.0).abs() < 1e-12);
    }

    #[test]
    fn slk_grid_mismatch() {
        let a = spec(&[0.0, 1.0, 0.0]);
        let b = spec(&[0.0, 1.0]);
        assert_eq!(dist_slk(&a, &b, 1), Err(SpectralError::GridMismatch));
    }

    #[test]
    fn mod_l2_hand_case() {
        let a = spec(&[0.6, 0.4, 0.0]);
        let b = spec(&[0.4, 0.4, 0.2]);
        // w = 0.6 / 0.4 = 1.5
        // bin0: x=0.4≠0, z=0.6>x → 0.04/1.5 ; bin1: equal → 0 ; bin2: z<x → 0.04
        let expected = (0.04 / 1.5 + 0.04f64).sqrt();
        assert!((dist_mod_l2(&a, &b).unwrap() - expected).abs() < 1e-12);
        assert_eq!(dist_mod_l2(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn mod_l2_degenerate_weight() {
        assert!(matches!(
            dist_mod_l2(&spec(&[1.0, 0.0]), &spec(&[0.5, 0.5])),
            Err(SpectralError::DegenerateWeight(_))
        ));
        assert!(matches!(
            dist_mod_l2(&spec(&[0.0, 0.0]), &spec(&[0.5, 0.5])),
            Err(SpectralError::DegenerateWeight(_))
        ));
    }

    #[test]
    fn mod_l2_may_be_asymmetric() {
        let a = spec(&[0.6, 0.4, 0.0]);
        let b = spec(&[0.4, 0.4, 0.2]);
        let ab = dist_mod_l2(&a, &b).unwrap();
        let ba = dist_mod_l2(&b, &a).unwrap();
        // Directional by construction; both orders are valid distances.
        assert!(ab >= 0.0 && ba >= 0.0);
        assert!((ab - ba).abs() > 1e-6);
    }

    #[test]
    fn wasserstein_examples() {
        let a = spec(&[1.0, 0.0, 0.0]);
        let b = spec(&[0.0, 0.0, 1.0]);
        assert_eq!(dist_wasserstein(&a, &b).unwrap(), 2.0);
        assert_eq!(dist_wasserstein(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn kl_examples() {
        let a = spec(&[0.5, 0.5]);
        assert!(dist_kl(&a, &a).unwrap().abs() < 1e-6);
        let b = spec(&[0.25, 0.75]);
        let exact = 0.5 * LN_2 + 0.5 * (2.0f64 / 3.0).ln();
        assert!((exact - 0.1438).abs() < 1e-4);
        assert!((dist_kl(&a, &b).unwrap() - exact).abs() < 1e-6);
        let far = dist_kl(&spec(&[1.0, 0.0]), &spec(&[0.0, 1.0])).unwrap();
        assert!(far > 10.0 && far.is_finite());
    }

    #[test]
    fn kl_is_directional() {
        let a = spec(&[0.7, 0.2, 0.1]);
        let b = spec(&[0.2, 0.3, 0.5]);
        let (ab, ba) = (dist_kl(&a, &b).unwrap(), dist_kl(&b, &a).unwrap());
        assert!(ab > 0.0 && ba > 0.0);
        assert!((ab - ba).abs() > 1e-6);
    }

    #[test]
    fn sam_analytic() {
        let a = spec(&[1.0, 0.0]);
        let b = spec(&[0.0, 1.0]);
        let c = spec(&[1.0, 1.0]);
        assert_eq!(dist_sam(&a, &a).unwrap(), 0.0);
        assert!((dist_sam(&a, &b).unwrap() - FRAC_PI_2).abs() < 1e-12);
        assert!((dist_sam(&c, &a).unwrap() - FRAC_PI_4).abs() < 1e-12);
        assert_eq!(dist_sam(&a, &spec(&[0.0, 0.0])), Err(SpectralError::ZeroSpectrum));
    }

    #[test]
    fn metric_kind_parse_roundtrip() {
        for k in MetricKind::ALL {
            assert_eq!(k.as_str().parse::<MetricKind>().unwrap(), k);
        }
        assert!("cosine".parse::<MetricKind>().is_err());
    }

    #[test]
    fn similarity_metric_validates() {
        assert!(SimilarityMetric::new(MetricKind::Slk, 0, 1.0).is_err());
        assert_eq!(
            SimilarityMetric::new(MetricKind::Sam, 1, 0.0),
            Err(SpectralError::InvalidScale(0.0))
        );
        let m = SimilarityMetric::new(MetricKind::Sam, 1, 1.0).unwrap();
        let a = spec(&[1.0, 2.0, 3.0]);
        assert_eq!(m.likelihood(&a, &a).unwrap(), 1.0);
    }
}
