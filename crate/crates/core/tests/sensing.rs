mod common;

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use spectral_mcl::sensing::{
    beam_material_likelihood, SensorModel, SensorModelConfig, SensorModelKind, LIKELIHOOD_FLOOR,
};
use spectral_mcl::sim::{simulate_step, SensorTruthConfig};
use spectral_mcl::spectral::{apply_sensor_noise, MetricKind, NoiseConfig, SimilarityMetric};
use spectral_mcl::worldmap::Occupancy;
use spectral_mcl::{MaterialMap, Pose2};

fn field_config(eps_material: f64) -> SensorModelConfig {
    SensorModelConfig {
        model: SensorModelKind::LikelihoodField,
        ..SensorModelConfig::default()
    }
    .with_material_weight(eps_material)
}

#[test]
fn material_likelihood_composes_metric_and_squared_exponential() {
    let map = common::corridor(40, 9, 5, 5);
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let scale = 0.37;
    let metric = SimilarityMetric::new(MetricKind::ModL2, 3, scale).unwrap();
    let pose = Pose2::new(1.0, 0.2, PI / 2.0);
    for k in 0..50 {
        let bearing = rng.random_range(-0.5..0.5);
        let hit = map.raycast(&pose, bearing, 5.0).unwrap().unwrap();
        let reference = map.library().get(hit.material_id.unwrap()).unwrap();
        let observed = apply_sensor_noise(reference, &NoiseConfig::default().with_seed(k)).unwrap();
        // Unit-sum normalization, then the piecewise weighted L2.
        let norm = |v: &[f64]| {
            let s: f64 = v.iter().sum();
            v.iter().map(|x| x / s).collect::<Vec<f64>>()
        };
        let (z, x) = (norm(observed.intensities()), norm(reference.intensities()));
        let m = z.iter().copied().fold(f64::MIN, f64::max);
        let w = if m > 0.5 { m / (1.0 - m) } else { (1.0 - m) / m };
        let mut sum = 0.0;
        for (zi, xi) in z.iter().zip(&x) {
            let d2 = (zi - xi).powi(2);
            sum += if zi <= xi {
                d2
            } else if *xi == 0.0 {
                d2 * w
            } else {
                d2 / w
            };
        }
        let d = sum.sqrt();
        let expected = (-d * d / scale).exp();
        let got = beam_material_likelihood(&observed, &hit, &map, &metric).unwrap();
        assert!((got - expected).abs() < 1e-12, "{got} vs {expected}");
    }
}

/// Octile distance to the nearest occupied cell, the metric the 3×3
/// chamfer propagates.
fn octile_to_nearest(map: &MaterialMap, i: usize, j: usize) -> f64 {
    let mut best = f64::INFINITY;
    for b in 0..map.height() {
        for a in 0..map.width() {
            if map.occupancy(a, b) == Occupancy::Occupied {
                let dx = (a as f64 - i as f64).abs();
                let dy = (b as f64 - j as f64).abs();
                best = best.min(dx.max(dy) + (2f64.sqrt() - 1.0) * dx.min(dy));
            }
        }
    }
    best
}

#[test]
fn field_likelihood_ordering_follows_nearest_wall() {
    let map = common::world(spectral_mcl::sim::Layout::Rooms, 4, 3);
    let model = SensorModel::new(map.clone(), field_config(0.0)).unwrap();
    let scan = simulate_step(&map, &Pose2::new(1.0, 1.0, 0.0), &Pose2::new(1.0, 1.0, 0.0), 0.0, &SensorTruthConfig::default(), 3)
        .unwrap()
        .1;
    let prepared = model.prepare_scan(&scan);
    let entry = &prepared.entries[0];
    let r = entry.range.unwrap();
    let free = map.free_cells();
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    let mut samples = Vec::new();
    for _ in 0..300 {
        let (ci, cj) = free[rng.random_range(0..free.len())];
        let (x, y) = map.cell_center(ci, cj);
        let pose = Pose2::new(x, y, rng.random_range(-PI..PI));
        let reach = r + 1e-3 * map.resolution();
        let heading = pose.theta + entry.bearing;
        let Some((i, j)) = map.world_to_cell(x + heading.cos() * reach, y + heading.sin() * reach) else {
            continue;
        };
        samples.push((octile_to_nearest(&map, i, j), model.beam_likelihood(entry, &pose)));
    }
    assert!(samples.len() > 200);
    for (da, pa) in &samples {
        for (db, pb) in &samples {
            if da < db {
                assert!(pa >= pb, "d {da} -> {pa}, d {db} -> {pb}");
            }
            if da == db {
                assert_eq!(pa, pb);
            }
        }
    }
}

#[test]
fn true_pose_beats_a_pose_one_metre_along_the_corridor() {
    let map = Arc::new(common::corridor(80, 15, 6, 5));
    let truth = Pose2::new(1.5, 0.37, 0.1);
    let cfg = SensorTruthConfig::noiseless();
    let (_, scan) = simulate_step(&map, &truth, &truth, 0.0, &cfg, 5).unwrap();
    for model_kind in [SensorModelKind::Beam, SensorModelKind::LikelihoodField] {
        for eps_m in [1.0, 0.5] {
            let cfg = SensorModelConfig {
                model: model_kind,
                ..SensorModelConfig::default()
            }
            .with_material_weight(eps_m);
            let model = SensorModel::new(map.clone(), cfg).unwrap();
            let prepared = model.prepare_scan(&scan);
            let here = model.scan_likelihood(&prepared, &truth);
            let there = model.scan_likelihood(&prepared, &Pose2::new(2.5, 0.37, 0.1));
            assert!(here > there, "{model_kind} eps_m {eps_m}: {here} vs {there}");
        }
    }
}

#[test]
fn noise_free_true_pose_is_the_maximum_of_a_pose_grid() {
    let map = common::world(spectral_mcl::sim::Layout::Rooms, 5, 4);
    let free = map.free_cells();
    let mut rng = ChaCha8Rng::seed_from_u64(34);
    let (ci, cj) = free[rng.random_range(0..free.len())];
    let (x, y) = map.cell_center(ci, cj);
    let truth = Pose2::new(x, y, 0.4);
    let (_, scan) = simulate_step(&map, &truth, &truth, 0.0, &SensorTruthConfig::noiseless(), 4).unwrap();
    for model_kind in [SensorModelKind::Beam, SensorModelKind::LikelihoodField] {
        for eps_m in [0.0, 0.5, 1.0] {
            let cfg = SensorModelConfig {
                model: model_kind,
                ..SensorModelConfig::default()
            }
            .with_material_weight(eps_m);
            let model = SensorModel::new(map.clone(), cfg).unwrap();
            let prepared = model.prepare_scan(&scan);
            let best = model.scan_log_likelihood(&prepared, &truth);
            let res = map.resolution();
            for a in -10..=10 {
                for b in -10..=10 {
                    for t in 0..8 {
                        let p = Pose2::new(x + a as f64 * res, y + b as f64 * res, truth.theta + t as f64 * PI / 4.0);
                        assert!(model.scan_log_likelihood(&prepared, &p) <= best);
                    }
                }
            }
        }
    }
}

#[test]
fn per_beam_likelihoods_stay_in_range() {
    let map = common::world(spectral_mcl::sim::Layout::CorridorLoop, 5, 5);
    let mut rng = ChaCha8Rng::seed_from_u64(35);
    let free = map.free_cells();
    let (ci, cj) = free[0];
    let (x, y) = map.cell_center(ci, cj);
    let (_, scan) = simulate_step(&map, &Pose2::new(x, y, 0.0), &Pose2::new(x, y, 0.0), 0.0, &SensorTruthConfig::default(), 5).unwrap();
    for model_kind in [SensorModelKind::Beam, SensorModelKind::LikelihoodField] {
        let cfg = SensorModelConfig {
            model: model_kind,
            ..SensorModelConfig::default()
        }
        .with_material_weight(0.5);
        let model = SensorModel::new(map.clone(), cfg).unwrap();
        let prepared = model.prepare_scan(&scan);
        for _ in 0..500 {
            let (i, j) = free[rng.random_range(0..free.len())];
            let (px, py) = map.cell_center(i, j);
            let pose = Pose2::new(px, py, rng.random_range(-PI..PI));
            for e in &prepared.entries {
                let p = model.beam_likelihood(e, &pose);
                assert!((LIKELIHOOD_FLOOR..=1.0).contains(&p), "{p}");
            }
            let l = model.scan_likelihood(&prepared, &pose);
            assert!(l > 0.0 && l.is_finite());
        }
    }
}
