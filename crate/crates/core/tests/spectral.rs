use std::f64::consts::LN_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use spectral_mcl::spectral::{
    calibrate_scale, dist_slk, dist_wasserstein, distance_to_likelihood, MetricKind, SimilarityMetric,
    DEFAULT_SLK_WINDOW,
};
use spectral_mcl::Spectrum;

fn random_spectrum(rng: &mut ChaCha8Rng, n: usize) -> Spectrum {
    let v: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..1.0)).collect();
    Spectrum::from_values(&v).unwrap()
}

fn sam_oracle(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    (dot / (na * nb)).clamp(-1.0, 1.0).acos()
}

fn median_oracle(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[test]
fn scale_matches_pairwise_median() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..5 {
        let lib: Vec<Spectrum> = (0..5).map(|_| random_spectrum(&mut rng, 32)).collect();
        let mut d = Vec::new();
        for (i, a) in lib.iter().enumerate() {
            for (j, b) in lib.iter().enumerate() {
                if i != j {
                    d.push(sam_oracle(a.intensities(), b.intensities()));
                }
            }
        }
        let m = median_oracle(d);
        let k = calibrate_scale(&lib, MetricKind::Sam, DEFAULT_SLK_WINDOW).unwrap();
        assert!((k - m * m / LN_2).abs() <= 1e-9 * k, "{k} vs {}", m * m / LN_2);
        assert!((distance_to_likelihood(m, k).unwrap() - 0.5).abs() < 1e-9);
    }
}

#[test]
fn slk_matches_naive_loop_on_sixteen_bins() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let w = 2;
    for _ in 0..100 {
        let (a, b) = (random_spectrum(&mut rng, 16), random_spectrum(&mut rng, 16));
        let k = |x: &[f64], y: &[f64]| {
            let mut s = 0.0;
            for n in 0..16isize {
                s += x[n as usize] * y[n as usize];
                for off in -(w as isize)..=w as isize {
                    let j = (n + off).clamp(0, 15) as usize;
                    s += (x[n as usize] - x[j]) * (y[n as usize] - y[j]);
                }
            }
            s
        };
        let (x, y) = (a.intensities(), b.intensities());
        let naive = k(x, x) + k(y, y) - 2.0 * k(x, y);
        assert!((dist_slk(&a, &b, w).unwrap() - naive).abs() < 1e-12);
    }
}

#[test]
fn wasserstein_matches_transport_plan() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..200 {
        let a = random_spectrum(&mut rng, 8).normalize_unit_sum().unwrap();
        let b = random_spectrum(&mut rng, 8).normalize_unit_sum().unwrap();
        // Mass moved across each bin boundary, walking left to right.
        let mut carried = 0.0;
        let mut cost = 0.0;
        for k in 0..8 {
            carried += a.intensities()[k] - b.intensities()[k];
            cost += carried.abs();
        }
        assert!((dist_wasserstein(&a, &b).unwrap() - cost).abs() < 1e-9);
    }
}

#[test]
fn every_metric_is_zero_on_identical_spectra() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for kind in MetricKind::ALL {
        let metric = SimilarityMetric::new(kind, DEFAULT_SLK_WINDOW, 1.0).unwrap();
        for _ in 0..20 {
            let s = random_spectrum(&mut rng, 64);
            let d = metric.distance(&s, &s).unwrap();
            assert!(d.abs() <= 1e-6, "{kind}: {d}");
        }
    }
}
