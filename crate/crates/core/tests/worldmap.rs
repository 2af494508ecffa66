use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use spectral_mcl::sim::{generate_world, Layout, WorldSpec};
use spectral_mcl::spectral::{MetricKind, SimilarityMetric, SpectralGrid, SpectralLibrary};
use spectral_mcl::worldmap::{build_range_chamfer, build_spectral_chamfer, ChamferCosts, Occupancy};
use spectral_mcl::{MaterialMap, Pose2, Spectrum};

#[test]
fn saved_corridor_cell_counts_match_pixel_count() {
    let dir = tempfile::tempdir().unwrap();
    let map = generate_world(&WorldSpec::new(Layout::CorridorLoop, 4, 1)).unwrap();
    map.save(dir.path()).unwrap();
    let img = image::open(dir.path().join("occupancy.pgm")).unwrap().to_luma8();
    assert_eq!((img.width(), img.height()), (64, 64));
    let max = 255.0;
    let (mut occupied, mut free, mut unknown) = (0, 0, 0);
    for p in img.pixels() {
        let v = p.0[0] as f64;
        if v < 0.196 * max {
            occupied += 1;
        } else if v > 0.65 * max {
            free += 1;
        } else {
            unknown += 1;
        }
    }
    let loaded = MaterialMap::load(dir.path()).unwrap();
    assert_eq!(loaded.count(Occupancy::Occupied), occupied);
    assert_eq!(loaded.count(Occupancy::Free), free);
    assert_eq!(loaded.count(Occupancy::Unknown), unknown);
    assert_eq!(occupied, map.count(Occupancy::Occupied));
}

fn random_map(rng: &mut ChaCha8Rng, n: usize, density: f64, materials: usize) -> MaterialMap {
    let grid = SpectralGrid::new(0.0, 1.0, 6).unwrap();
    let mut lib = SpectralLibrary::new(grid);
    for k in 0..materials {
        let v: Vec<f64> = (0..6).map(|_| rng.random_range(0.0..1.0)).collect();
        lib.push(format!("m{k}"), Spectrum::new(grid, v).unwrap()).unwrap();
    }
    let mut occ = vec![Occupancy::Free; n * n];
    let mut mats = vec![None; n * n];
    for c in 0..n * n {
        if rng.random_bool(density) {
            occ[c] = Occupancy::Occupied;
            mats[c] = Some(rng.random_range(0..materials));
        }
    }
    occ[0] = Occupancy::Occupied;
    mats[0] = Some(0);
    MaterialMap::new(n, n, 0.05, Pose2::identity(), occ, mats, lib).unwrap()
}

#[test]
fn range_chamfer_against_euclidean_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let n = 32;
    let map = random_map(&mut rng, n, 0.15, 1);
    let field = build_range_chamfer(&map).unwrap();
    let walls: Vec<(i64, i64)> = (0..n * n)
        .filter(|c| map.occupancy_grid()[*c] == Occupancy::Occupied)
        .map(|c| ((c % n) as i64, (c / n) as i64))
        .collect();
    let mut worst = 0.0f64;
    for j in 0..n as i64 {
        for i in 0..n as i64 {
            let nearest = walls
                .iter()
                .map(|(a, b)| (((a - i).pow(2) + (b - j).pow(2)) as f64).sqrt())
                .fold(f64::INFINITY, f64::min);
            let axial = walls.iter().any(|(a, b)| (*a == i || *b == j) && ((a - i).abs() + (b - j).abs()) as f64 == nearest);
            let got = field.get(i as usize, j as usize);
            if axial {
                assert_eq!(got, nearest, "cell ({i}, {j})");
            }
            if nearest > 0.0 {
                worst = worst.max((got - nearest).abs() / nearest);
            }
        }
    }
    assert!(worst <= 0.08, "max relative error {worst}");
}

#[test]
fn adding_an_occupied_cell_never_raises_spectral_cost() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let metric = SimilarityMetric::new(MetricKind::Wasserstein, 3, 1.0).unwrap();
    for _ in 0..20 {
        let map = random_map(&mut rng, 16, 0.1, 2);
        let observed = map.library().get(rng.random_range(0..2)).unwrap().clone();
        let before = build_spectral_chamfer(&map, &metric, &observed, ChamferCosts::cells()).unwrap();
        let free = map.free_cells();
        let (i, j) = free[rng.random_range(0..free.len())];
        let mut occ = map.occupancy_grid().to_vec();
        let mut mats = map.material_grid().to_vec();
        occ[j * 16 + i] = Occupancy::Occupied;
        mats[j * 16 + i] = Some(rng.random_range(0..2));
        let grown = MaterialMap::new(16, 16, 0.05, Pose2::identity(), occ, mats, map.library().clone()).unwrap();
        let after = build_spectral_chamfer(&grown, &metric, &observed, ChamferCosts::cells()).unwrap();
        for (a, b) in after.costs().iter().zip(before.costs()) {
            assert!(a <= b);
        }
    }
}
