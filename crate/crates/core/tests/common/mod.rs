#![allow(dead_code)]

use std::sync::Arc;

use spectral_mcl::sensing::ScanTuple;
use spectral_mcl::sim::{default_script, generate_dataset, generate_world, Dataset, Layout, SensorTruthConfig, WorldSpec};
use spectral_mcl::spectral::{SpectralGrid, SpectralLibrary};
use spectral_mcl::worldmap::Occupancy;
use spectral_mcl::{MaterialMap, OdometryDelta, Pose2, Spectrum};

pub fn world(layout: Layout, materials: usize, seed: u64) -> Arc<MaterialMap> {
    Arc::new(generate_world(&WorldSpec::new(layout, materials, seed)).unwrap())
}

pub fn dataset(map: &MaterialMap, layout: Layout, cfg: &SensorTruthConfig, seed: u64) -> Dataset {
    generate_dataset(map, &default_script(layout, map), cfg, seed).unwrap()
}

pub fn steps(map: &MaterialMap, data: &Dataset) -> Vec<(OdometryDelta, ScanTuple)> {
    data.records
        .iter()
        .map(|r| (r.odom, r.to_scan(map.library()).unwrap()))
        .collect()
}

/// Straight corridor, `height` cells tall, walls on the top and bottom rows
/// cut into `run`-cell segments cycling through `materials` spectra.
pub fn corridor(width: usize, height: usize, run: usize, materials: usize) -> MaterialMap {
    let grid = SpectralGrid::new(0.0, 1.0, 16).unwrap();
    let mut lib = SpectralLibrary::new(grid);
    for m in 0..materials {
        let v: Vec<f64> = (0..16)
            .map(|k| 0.05 + (-((k as f64 - 3.0 * m as f64 - 1.5).powi(2)) / 2.0).exp())
            .collect();
        lib.push(format!("m{m}"), Spectrum::new(grid, v).unwrap()).unwrap();
    }
    let mut occ = vec![Occupancy::Free; width * height];
    let mut mats = vec![None; width * height];
    for j in [0, height - 1] {
        for i in 0..width {
            occ[j * width + i] = Occupancy::Occupied;
            mats[j * width + i] = Some((i / run + j) % materials);
        }
    }
    for j in 0..height {
        for i in [0, width - 1] {
            occ[j * width + i] = Occupancy::Occupied;
            mats[j * width + i] = Some(0);
        }
    }
    MaterialMap::new(width, height, 0.05, Pose2::identity(), occ, mats, lib).unwrap()
}
