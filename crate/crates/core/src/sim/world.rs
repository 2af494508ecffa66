use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::SimError;
use crate::error::Result;
use crate::motion::Pose2;
use crate::rng::child_rng;
use crate::spectral::{SpectralGrid, SpectralLibrary, Spectrum};
use crate::worldmap::{MaterialMap, Occupancy};

/// Side length, in cells, of the square tiles that split walls into
/// independently coloured segments.
pub const WALL_SEGMENT_CELLS: usize = 8;

/// Constant offset under every synthetic spectrum.
const PEAK_FLOOR: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layout {
    /// Square ring corridor around a solid core.
    CorridorLoop,
    /// Four rooms joined by doorways.
    Rooms,
    /// Two halves related by a 180° rotation, carrying different materials.
    SymmetricTwin,
}

impl std::str::FromStr for Layout {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.replace('-', "_").as_str() {
            "corridor_loop" => Ok(Layout::CorridorLoop),
            "rooms" => Ok(Layout::Rooms),
            "symmetric_twin" => Ok(Layout::SymmetricTwin),
            _ => Err(format!("unknown layout `{s}` (expected corridor_loop, rooms or symmetric_twin)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum MaterialAssignment {
    /// Walls cut into [`WALL_SEGMENT_CELLS`]-sized tiles, one material each.
    PerWallSegment,
    /// Nearest-seed patches around randomly placed material seeds.
    RandomPatches { seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum LibrarySource {
    SyntheticPeaks { seed: u64 },
    File { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldSpec {
    pub layout: Layout,
    /// Grid side length, cells.
    pub size: usize,
    pub resolution: f64,
    pub n_materials: usize,
    pub material_assignment: MaterialAssignment,
    pub library_source: LibrarySource,
    /// Seed for per-segment material draws.
    pub seed: u64,
}

impl WorldSpec {
    pub fn new(layout: Layout, n_materials: usize, seed: u64) -> Self {
        WorldSpec {
            layout,
            size: 64,
            resolution: 0.05,
            n_materials,
            material_assignment: MaterialAssignment::PerWallSegment,
            library_source: LibrarySource::SyntheticPeaks { seed },
            seed,
        }
    }
}

/// Build the map described by `spec`. Deterministic in the spec's seeds.
pub fn generate_world(spec: &WorldSpec) -> Result<MaterialMap> {
    let n = spec.size;
    if n < 16 {
        return Err(SimError::InfeasibleSpec(format!("size {n} too small (minimum 16)")).into());
    }
    if !(spec.resolution > 0.0) || !spec.resolution.is_finite() {
        return Err(SimError::InfeasibleSpec(format!("resolution {} must be positive", spec.resolution)).into());
    }
    if spec.n_materials == 0 {
        return Err(SimError::InfeasibleSpec("n_materials must be >= 1".into()).into());
    }
    if spec.layout == Layout::SymmetricTwin && spec.n_materials < 2 {
        return Err(SimError::InfeasibleSpec("symmetric_twin needs at least 2 materials".into()).into());
    }
    let occupied = layout_cells(spec.layout, n);
    let walls = occupied.iter().filter(|o| **o).count();
    if spec.n_materials > walls {
        return Err(SimError::InfeasibleSpec(format!(
            "{} materials but only {walls} wall cells",
            spec.n_materials
        ))
        .into());
    }
    let materials = match spec.material_assignment {
        MaterialAssignment::PerWallSegment => assign_segments(&occupied, n, spec),
        MaterialAssignment::RandomPatches { seed } => assign_patches(&occupied, n, spec.n_materials, seed),
    };
    let materials = if spec.layout == Layout::SymmetricTwin {
        break_symmetry(&occupied, materials, n, spec)
    } else {
        materials
    };
    let library = build_library(spec)?;
    let occupancy = occupied
        .iter()
        .map(|o| if *o { Occupancy::Occupied } else { Occupancy::Free })
        .collect();
    Ok(MaterialMap::new(
        n,
        n,
        spec.resolution,
        Pose2::identity(),
        occupancy,
        materials,
        library,
    )?)
}

/// Occupied mask, row-major with `j` (y) as the row index.
fn layout_cells(layout: Layout, n: usize) -> Vec<bool> {
    let mut occ = vec![false; n * n];
    let mut fill = |i0: usize, i1: usize, j0: usize, j1: usize| {
        for j in j0..j1.min(n) {
            for i in i0..i1.min(n) {
                occ[j * n + i] = true;
            }
        }
    };
    fill(0, n, 0, 1);
    fill(0, n, n - 1, n);
    fill(0, 1, 0, n);
    fill(n - 1, n, 0, n);
    let f = |x: f64| (x * n as f64).round() as usize;
    match layout {
        Layout::CorridorLoop => {
            let w = corridor_width(n);
            fill(1 + w, n - 1 - w, 1 + w, n - 1 - w);
        }
        Layout::Rooms => {
            let (a, b) = (n / 2 - 1, n / 2 + 1);
            let half = f(0.08).max(2);
            let (q1, q3) = (f(0.25), f(0.75));
            // Vertical wall with doors at q1 (lower) and q3 (upper); the
            // horizontal wall carries its doors at q1 (left) and q3 (right).
            fill(a, b, 0, q1 - half);
            fill(a, b, q1 + half, q3 - half);
            fill(a, b, q3 + half, n);
            fill(0, q1 - half, a, b);
            fill(q1 + half, q3 - half, a, b);
            fill(q3 + half, n, a, b);
        }
        Layout::SymmetricTwin => {
            let (a, b) = (n / 2 - 1, n / 2 + 1);
            fill(a, b, 0, f(0.125));
            fill(a, b, f(0.25), n);
            fill(f(0.16), f(0.25), f(0.62), f(0.72));
            fill(f(0.31), f(0.34), 1, f(0.22));
        }
    }
    if layout == Layout::SymmetricTwin {
        for j in 0..n {
            for i in 0..n {
                if occ[(n - 1 - j) * n + (n - 1 - i)] {
                    occ[j * n + i] = true;
                }
            }
        }
    }
    occ
}

pub(crate) fn corridor_width(n: usize) -> usize {
    ((n as f64 * 0.22).round() as usize).max(3)
}

fn tile_of(i: usize, j: usize) -> (usize, usize) {
    (i / WALL_SEGMENT_CELLS, j / WALL_SEGMENT_CELLS)
}

/// Every wall tile gets a material from a shuffled cycle over all ids, so
/// each id appears whenever there are at least as many tiles as materials.
fn assign_segments(occupied: &[bool], n: usize, spec: &WorldSpec) -> Vec<Option<usize>> {
    let tiles_per_side = n.div_ceil(WALL_SEGMENT_CELLS);
    let mut tile_used = vec![false; tiles_per_side * tiles_per_side];
    for j in 0..n {
        for i in 0..n {
            if occupied[j * n + i] {
                let (ti, tj) = tile_of(i, j);
                tile_used[tj * tiles_per_side + ti] = true;
            }
        }
    }
    let used: Vec<usize> = (0..tile_used.len()).filter(|t| tile_used[*t]).collect();
    let mut cycle: Vec<usize> = (0..used.len()).map(|k| k % spec.n_materials).collect();
    cycle.shuffle(&mut child_rng(spec.seed, &[0x5e6]));
    let mut tile_material = vec![0; tile_used.len()];
    for (t, m) in used.iter().zip(cycle) {
        tile_material[*t] = m;
    }
    let mut mats = vec![None; n * n];
    if used.len() < spec.n_materials {
        // Fewer tiles than materials: colour cells individually.
        let mut k = 0;
        for (c, o) in occupied.iter().enumerate() {
            if *o {
                mats[c] = Some(k % spec.n_materials);
                k += 1;
            }
        }
        return mats;
    }
    for j in 0..n {
        for i in 0..n {
            if occupied[j * n + i] {
                let (ti, tj) = tile_of(i, j);
                mats[j * n + i] = Some(tile_material[tj * tiles_per_side + ti]);
            }
        }
    }
    mats
}

fn assign_patches(occupied: &[bool], n: usize, n_materials: usize, seed: u64) -> Vec<Option<usize>> {
    let mut rng = child_rng(seed, &[0xa7c]);
    let mut walls: Vec<usize> = (0..occupied.len()).filter(|c| occupied[*c]).collect();
    walls.shuffle(&mut rng);
    let n_seeds = (3 * n_materials).min(walls.len());
    let seeds: Vec<(usize, usize)> = walls[..n_seeds]
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let m = if k < n_materials { k } else { rng.random_range(0..n_materials) };
            (*c, m)
        })
        .collect();
    let mut mats = vec![None; n * n];
    for c in (0..occupied.len()).filter(|c| occupied[*c]) {
        let (ci, cj) = ((c % n) as i64, (c / n) as i64);
        let nearest = seeds
            .iter()
            .min_by_key(|(s, _)| {
                let (si, sj) = ((s % n) as i64, (s / n) as i64);
                ((ci - si).pow(2) + (cj - sj).pow(2), *s)
            })
            .expect("at least one seed");
        mats[c] = Some(nearest.1);
    }
    mats
}

/// Recolour the cells of one half so each differs from its rotated twin.
fn break_symmetry(occupied: &[bool], mut mats: Vec<Option<usize>>, n: usize, spec: &WorldSpec) -> Vec<Option<usize>> {
    let k = spec.n_materials;
    let mut rng = child_rng(spec.seed, &[0x7a1]);
    let offsets: Vec<usize> = (0..n * n).map(|_| rng.random_range(1..k)).collect();
    let tiles_per_side = n.div_ceil(WALL_SEGMENT_CELLS);
    for c in 0..n * n {
        let twin = n * n - 1 - c;
        if occupied[c] && twin < c {
            let (i, j) = (c % n, c / n);
            let (ti, tj) = tile_of(i, j);
            let offset = offsets[tj * tiles_per_side + ti];
            mats[c] = mats[twin].map(|m| (m + offset) % k);
        }
    }
    mats
}

fn build_library(spec: &WorldSpec) -> Result<SpectralLibrary> {
    match &spec.library_source {
        LibrarySource::SyntheticPeaks { seed } => synthetic_library(spec.n_materials, SpectralGrid::default_raman(), *seed),
        LibrarySource::File { path } => {
            let full = SpectralLibrary::load(path)?;
            if full.len() < spec.n_materials {
                return Err(SimError::InfeasibleSpec(format!(
                    "library {} has {} spectra, need {}",
                    path.display(),
                    full.len(),
                    spec.n_materials
                ))
                .into());
            }
            let mut lib = SpectralLibrary::new(full.grid());
            for m in 0..spec.n_materials {
                lib.push(full.name(m).unwrap_or("material"), full.get(m).expect("checked length").clone())?;
            }
            Ok(lib)
        }
    }
}

/// `n` spectra, each a floor plus 3 to 8 Gaussian peaks. Peak centres fall in
/// disjoint sub-bands of the grid drawn without replacement, so no two
/// materials share a peak band.
pub fn synthetic_library(n: usize, grid: SpectralGrid, seed: u64) -> Result<SpectralLibrary> {
    let mut rng = child_rng(seed, &[0x11b]);
    let bands = (8 * n).max(64).min(grid.len / 2);
    let band_width = grid.len as f64 / bands as f64;
    let mut pool: Vec<usize> = (0..bands).collect();
    pool.shuffle(&mut rng);
    let mut lib = SpectralLibrary::new(grid);
    for m in 0..n {
        let peaks = rng.random_range(3..=8usize);
        if pool.len() < peaks {
            return Err(SimError::InfeasibleSpec(format!("grid too small for {n} distinct synthetic spectra")).into());
        }
        let mine: Vec<usize> = pool.split_off(pool.len() - peaks);
        let params: Vec<(f64, f64, f64)> = mine
            .iter()
            .map(|band| {
                let centre = (*band as f64 + rng.random_range(0.2..0.8)) * band_width;
                let amplitude = rng.random_range(0.3..1.0);
                let width = rng.random_range(1.5..4.0);
                (centre, amplitude, width)
            })
            .collect();
        let values: Vec<f64> = (0..grid.len)
            .map(|b| {
                PEAK_FLOOR
                    + params
                        .iter()
                        .map(|(c, a, w)| a * (-((b as f64 - c) / w).powi(2) / 2.0).exp())
                        .sum::<f64>()
            })
            .collect();
        lib.push(format!("material_{m}"), Spectrum::new(grid, values)?)?;
    }
    Ok(lib)
}
