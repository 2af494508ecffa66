use serde::{Deserialize, Serialize};

use super::MapError;
use crate::motion::Pose2;
use crate::spectral::{SpectralLibrary, Spectrum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Occupancy {
    Free,
    Occupied,
    Unknown,
}

/// Occupancy grid in which every occupied cell references a library
/// spectrum. Cell `(i, j)` spans `[i, i+1) × [j, j+1)` in grid units, with
/// `i` along the map x axis and `j` along y; `origin` is the world pose of
/// the grid's (0, 0) corner.
#[derive(Debug, Clone, PartialEq)]
pub struct MaterialMap {
    width: usize,
    height: usize,
    resolution: f64,
    origin: Pose2,
    occupancy: Vec<Occupancy>,
    materials: Vec<Option<usize>>,
    library: SpectralLibrary,
}

impl MaterialMap {
    pub fn new(
        width: usize,
        height: usize,
        resolution: f64,
        origin: Pose2,
        occupancy: Vec<Occupancy>,
        materials: Vec<Option<usize>>,
        library: SpectralLibrary,
    ) -> Result<Self, MapError> {
        if width == 0 || height == 0 {
            return Err(MapError::InvalidMap("map must have at least one cell".into()));
        }
        if !(resolution > 0.0) || !resolution.is_finite() {
            return Err(MapError::InvalidMap(format!("resolution must be positive, got {resolution}")));
        }
        if !origin.is_finite() {
            return Err(MapError::InvalidMap("origin must be finite".into()));
        }
        let n = width * height;
        if occupancy.len() != n || materials.len() != n {
            return Err(MapError::MapMismatch(format!(
                "expected {n} cells, occupancy has {} and materials {}",
                occupancy.len(),
                materials.len()
            )));
        }
        for (idx, (occ, mat)) in occupancy.iter().zip(&materials).enumerate() {
            let (i, j) = (idx % width, idx / width);
            match (occ, mat) {
                (Occupancy::Occupied, None) => {
                    return Err(MapError::UnknownMaterial(format!(
                        "occupied cell ({i}, {j}) has no material"
                    )))
                }
                (Occupancy::Occupied, Some(m)) if *m >= library.len() => {
                    return Err(MapError::UnknownMaterial(format!(
                        "cell ({i}, {j}) references material {m} but the library has {}",
                        library.len()
                    )))
                }
                (Occupancy::Free | Occupancy::Unknown, Some(m)) => {
                    return Err(MapError::MapMismatch(format!(
                        "non-occupied cell ({i}, {j}) carries material {m}"
                    )))
                }
                _ => {}
            }
        }
        Ok(MaterialMap {
            width,
            height,
            resolution,
            origin,
            occupancy,
            materials,
            library,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn origin(&self) -> Pose2 {
        self.origin
    }

    pub fn library(&self) -> &SpectralLibrary {
        &self.library
    }

    pub fn len(&self) -> usize {
        self.occupancy.len()
    }

    pub fn is_empty(&self) -> bool {
        self.occupancy.is_empty()
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.width + i
    }

    #[inline]
    pub fn in_bounds(&self, i: isize, j: isize) -> bool {
        i >= 0 && j >= 0 && (i as usize) < self.width && (j as usize) < self.height
    }

    pub fn occupancy(&self, i: usize, j: usize) -> Occupancy {
        self.occupancy[self.index(i, j)]
    }

    pub fn occupancy_grid(&self) -> &[Occupancy] {
        &self.occupancy
    }

    pub fn material(&self, i: usize, j: usize) -> Option<usize> {
        self.materials[self.index(i, j)]
    }

    pub fn material_grid(&self) -> &[Option<usize>] {
        &self.materials
    }

    pub fn spectrum_at(&self, i: usize, j: usize) -> Option<&Spectrum> {
        self.material(i, j).and_then(|m| self.library.get(m))
    }

    /// Occupied and unknown cells stop rays.
    #[inline]
    pub fn blocks_ray(&self, i: usize, j: usize) -> bool {
        self.occupancy(i, j) != Occupancy::Free
    }

    pub fn count(&self, kind: Occupancy) -> usize {
        self.occupancy.iter().filter(|o| **o == kind).count()
    }

    /// World coordinates to continuous grid coordinates.
    pub fn world_to_grid(&self, x: f64, y: f64) -> (f64, f64) {
        let local = self.origin.inverse().then(&Pose2::new(x, y, 0.0));
        (local.x / self.resolution, local.y / self.resolution)
    }

    pub fn grid_to_world(&self, gx: f64, gy: f64) -> (f64, f64) {
        self.origin.transform_point(gx * self.resolution, gy * self.resolution)
    }

    /// Cell containing the world point, if it lies inside the map.
    pub fn world_to_cell(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        let (gx, gy) = self.world_to_grid(x, y);
        let (i, j) = (gx.floor(), gy.floor());
        if i >= 0.0 && j >= 0.0 && i < self.width as f64 && j < self.height as f64 {
            Some((i as usize, j as usize))
        } else {
            None
        }
    }

    pub fn cell_center(&self, i: usize, j: usize) -> (f64, f64) {
        self.grid_to_world(i as f64 + 0.5, j as f64 + 0.5)
    }

    /// Heading of the grid x axis in the world frame.
    pub fn grid_heading(&self) -> f64 {
        self.origin.theta
    }

    pub fn is_free_at(&self, x: f64, y: f64) -> bool {
        matches!(self.world_to_cell(x, y), Some((i, j)) if self.occupancy(i, j) == Occupancy::Free)
    }

    pub fn free_cells(&self) -> Vec<(usize, usize)> {
        (0..self.len())
            .filter(|&k| self.occupancy[k] == Occupancy::Free)
            .map(|k| (k % self.width, k / self.width))
            .collect()
    }

    /// Lengths of the map sides in meters.
    pub fn extent(&self) -> (f64, f64) {
        (self.width as f64 * self.resolution, self.height as f64 * self.resolution)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::SpectralGrid;

    fn library(n: usize) -> SpectralLibrary {
        let grid = SpectralGrid::new(0.0, 1.0, 3).unwrap();
        let mut lib = SpectralLibrary::new(grid);
        for k in 0..n {
            let mut v = vec![0.1; 3];
            v[k % 3] = 1.0;
            lib.push(format!("m{k}"), Spectrum::new(grid, v).unwrap()).unwrap();
        }
        lib
    }

    #[test]
    fn validates_material_invariants() {
        let occ = vec![Occupancy::Free, Occupancy::Occupied];
        let ok = MaterialMap::new(2, 1, 0.1, Pose2::identity(), occ.clone(), vec![None, Some(0)], library(1));
        assert!(ok.is_ok());
        let dangling = MaterialMap::new(2, 1, 0.1, Pose2::identity(), occ.clone(), vec![None, Some(3)], library(1));
        assert!(matches!(dangling, Err(MapError::UnknownMaterial(_))));
        let missing = MaterialMap::new(2, 1, 0.1, Pose2::identity(), occ.clone(), vec![None, None], library(1));
        assert!(matches!(missing, Err(MapError::UnknownMaterial(_))));
        let on_free = MaterialMap::new(2, 1, 0.1, Pose2::identity(), occ.clone(), vec![Some(0), Some(0)], library(1));
        assert!(matches!(on_free, Err(MapError::MapMismatch(_))));
        let bad_res = MaterialMap::new(2, 1, 0.0, Pose2::identity(), occ, vec![None, Some(0)], library(1));
        assert!(matches!(bad_res, Err(MapError::InvalidMap(_))));
    }

    #[test]
    fn coordinate_transforms() {
        let occ = vec![Occupancy::Free; 12];
        let origin = Pose2::new(1.0, -2.0, 0.5);
        let m = MaterialMap::new(4, 3, 0.25, origin, occ, vec![None; 12], library(1)).unwrap();
        let (x, y) = m.cell_center(2, 1);
        assert_eq!(m.world_to_cell(x, y), Some((2, 1)));
        let (gx, gy) = m.world_to_grid(x, y);
        assert!((gx - 2.5).abs() < 1e-12 && (gy - 1.5).abs() < 1e-12);
        assert_eq!(m.world_to_cell(-100.0, 0.0), None);
    }
}
