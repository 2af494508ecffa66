use nalgebra::{DMatrix, DVector};

use super::{Result, SpectralError, Spectrum};

/// Polynomial order used when preprocessing observed and library spectra.
pub const DEFAULT_BASELINE_ORDER: usize = 3;

/// Map bin index onto [-1, 1] so the Vandermonde system stays well
/// conditioned for any spectrum length.
pub(crate) fn bin_coordinate(bin: usize, len: usize) -> f64 {
    if len <= 1 {
        0.0
    } else {
        2.0 * bin as f64 / (len - 1) as f64 - 1.0
    }
}

/// Subtract the least-squares polynomial of order `poly_order` fitted over
/// all bins, clipping negative residuals to zero.
pub fn baseline_correct(s: &Spectrum, poly_order: usize) -> Result<Spectrum> {
    let n = s.len();
    if poly_order + 1 >= n {
        return Err(SpectralError::InvalidOrder {
            order: poly_order,
            len: n,
        });
    }
    let cols = poly_order + 1;
    let vander = DMatrix::from_fn(n, cols, |row, col| bin_coordinate(row, n).powi(col as i32));
    let y = DVector::from_column_slice(s.intensities());
    let coeffs = vander
        .clone()
        .svd(true, true)
        .solve(&y, 1e-14)
        .map_err(|e| SpectralError::InvalidSpectrum(format!("baseline fit failed: {e}")))?;
    let fitted = vander * coeffs;
    let corrected = s
        .intensities()
        .iter()
        .zip(fitted.iter())
        .map(|(v, b)| {
            let r = v - b;
            // Round-off on an exactly representable baseline leaves ~1e-15 noise.
            if r > 1e-12 * (1.0 + v.abs()) {
                r
            } else {
                0.0
            }
        })
        .collect();
    Ok(Spectrum::from_parts_unchecked(s.grid(), corrected))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(v: &[f64]) -> Spectrum {
        Spectrum::from_values(v).unwrap()
    }

    /// Closed-form simple linear regression: slope = Sxy/Sxx.
    fn linear_fit_residual(y: &[f64]) -> Vec<f64> {
        let n = y.len() as f64;
        let xs: Vec<f64> = (0..y.len()).map(|i| i as f64).collect();
        let mx = xs.iter().sum::<f64>() / n;
        let my = y.iter().sum::<f64>() / n;
        let sxy: f64 = xs.iter().zip(y).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        let slope = sxy / sxx;
        let icpt = my - slope * mx;
        xs.iter().zip(y).map(|(x, y)| (y - (icpt + slope * x)).max(0.0)).collect()
    }

    #[test]
    fn flat_spectrum_order_zero() {
        let out = baseline_correct(&spec(&[3.0, 3.0, 3.0, 3.0]), 0).unwrap();
        assert_eq!(out.intensities(), &[0.0; 4]);
    }

    #[test]
    fn ramp_order_one() {
        let out = baseline_correct(&spec(&[0.0, 1.0, 2.0, 3.0]), 1).unwrap();
        assert_eq!(out.intensities(), &[0.0; 4]);
    }

    #[test]
    fn peak_on_ramp_matches_closed_form() {
        let y = [0.0, 1.0, 5.0, 3.0];
        let expected = linear_fit_residual(&y);
        // slope 1.3, intercept 0.3: residuals (-0.3, -0.6, 2.1, -1.2)
        assert!((expected[2] - 2.1).abs() < 1e-12);
        let out = baseline_correct(&spec(&y), 1).unwrap();
        for (o, e) in out.intensities().iter().zip(&expected) {
            assert!((o - e).abs() < 1e-12, "{o} vs {e}");
        }
        let positive: Vec<usize> = (0..4).filter(|&i| out.intensities()[i] > 0.0).collect();
        assert_eq!(positive, vec![2]);
    }

    #[test]
    fn order_too_high() {
        let s = spec(&[1.0, 2.0, 3.0]);
        assert!(matches!(baseline_correct(&s, 2), Err(SpectralError::InvalidOrder { .. })));
        assert!(baseline_correct(&s, 1).is_ok());
    }

    #[test]
    fn removes_added_cubic_baseline() {
        let n = 128;
        let peak: Vec<f64> = (0..n)
            .map(|i| 0.2 + (-((i as f64 - 60.0) / 3.0).powi(2)).exp())
            .collect();
        let drift: Vec<f64> = (0..n)
            .map(|i| {
                let x = bin_coordinate(i, n);
                0.3 + 0.1 * x - 0.05 * x * x + 0.02 * x * x * x
            })
            .collect();
        let clean = baseline_correct(&spec(&peak), 3).unwrap();
        let summed: Vec<f64> = peak.iter().zip(&drift).map(|(a, b)| a + b).collect();
        let drifted = baseline_correct(&spec(&summed), 3).unwrap();
        for (a, b) in clean.intensities().iter().zip(drifted.intensities()) {
            assert!((a - b).abs() < 1e-9);
        }
    }
}
