use std::f64::consts::SQRT_2;

use super::{MapError, MaterialMap, Occupancy};
use crate::error::Result;
use crate::spectral::{MetricKind, SimilarityMetric, Spectrum};

/// Step costs of the 3×3 chamfer mask.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChamferCosts {
    pub axial: f64,
    pub diagonal: f64,
}

impl ChamferCosts {
    /// Unit axial steps and √2 diagonals, in cells.
    pub fn cells() -> Self {
        ChamferCosts {
            axial: 1.0,
            diagonal: SQRT_2,
        }
    }

    /// The cell mask scaled by `factor`.
    pub fn scaled(factor: f64) -> Self {
        ChamferCosts {
            axial: factor,
            diagonal: factor * SQRT_2,
        }
    }
}

impl Default for ChamferCosts {
    fn default() -> Self {
        ChamferCosts::cells()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FieldSource {
    Range,
    Spectral(MetricKind),
}

/// Per-cell minimum cost to the nearest seed cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ChamferField {
    width: usize,
    height: usize,
    costs: Vec<f64>,
    source: FieldSource,
}

impl ChamferField {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn source(&self) -> FieldSource {
        self.source
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.costs[j * self.width + i]
    }

    pub fn costs(&self) -> &[f64] {
        &self.costs
    }

    pub fn max_cost(&self) -> f64 {
        self.costs.iter().copied().fold(0.0, f64::max)
    }
}

/// Two-pass 3×3 chamfer transform over a full grid.
///
/// `seeds` holds the initial cost of each cell (`f64::INFINITY` for
/// non-seeds). On a grid without obstacles every shortest 8-connected path
/// can be reordered into moves the forward raster pass covers followed by
/// moves the backward pass covers, so the result equals the graph
/// shortest-path cost from the cheapest seed.
pub fn chamfer_transform(width: usize, height: usize, seeds: &[f64], costs: ChamferCosts) -> Vec<f64> {
    assert_eq!(seeds.len(), width * height, "seed grid has the wrong size");
    let (a, d) = (costs.axial, costs.diagonal);
    let mut c = seeds.to_vec();
    let idx = |i: usize, j: usize| j * width + i;

    for j in 0..height {
        for i in 0..width {
            let mut best = c[idx(i, j)];
            if i > 0 {
                best = best.min(c[idx(i - 1, j)] + a);
            }
            if j > 0 {
                best = best.min(c[idx(i, j - 1)] + a);
                if i > 0 {
                    best = best.min(c[idx(i - 1, j - 1)] + d);
                }
                if i + 1 < width {
                    best = best.min(c[idx(i + 1, j - 1)] + d);
                }
            }
            c[idx(i, j)] = best;
        }
    }
    for j in (0..height).rev() {
        for i in (0..width).rev() {
            let mut best = c[idx(i, j)];
            if i + 1 < width {
                best = best.min(c[idx(i + 1, j)] + a);
            }
            if j + 1 < height {
                best = best.min(c[idx(i, j + 1)] + a);
                if i + 1 < width {
                    best = best.min(c[idx(i + 1, j + 1)] + d);
                }
                if i > 0 {
                    best = best.min(c[idx(i - 1, j + 1)] + d);
                }
            }
            c[idx(i, j)] = best;
        }
    }
    c
}

/// Distance in cells from every cell to the nearest occupied cell.
pub fn build_range_chamfer(map: &MaterialMap) -> Result<ChamferField, MapError> {
    let seeds: Vec<f64> = map
        .occupancy_grid()
        .iter()
        .map(|o| if *o == Occupancy::Occupied { 0.0 } else { f64::INFINITY })
        .collect();
    if seeds.iter().all(|s| s.is_infinite()) {
        return Err(MapError::EmptyMap);
    }
    Ok(ChamferField {
        width: map.width(),
        height: map.height(),
        costs: chamfer_transform(map.width(), map.height(), &seeds, ChamferCosts::cells()),
        source: FieldSource::Range,
    })
}

/// Chamfer field seeded at every occupied cell with the cost assigned to
/// that cell's material.
pub fn build_seeded_chamfer(
    map: &MaterialMap,
    material_costs: &[f64],
    costs: ChamferCosts,
    source: FieldSource,
) -> Result<ChamferField, MapError> {
    if material_costs.len() < map.library().len() {
        return Err(MapError::UnknownMaterial(format!(
            "{} seed costs for {} library spectra",
            material_costs.len(),
            map.library().len()
        )));
    }
    let seeds: Vec<f64> = map
        .occupancy_grid()
        .iter()
        .zip(map.material_grid())
        .map(|(o, m)| match (o, m) {
            (Occupancy::Occupied, Some(m)) => material_costs[*m],
            _ => f64::INFINITY,
        })
        .collect();
    if seeds.iter().all(|s| s.is_infinite()) {
        return Err(MapError::EmptyMap);
    }
    Ok(ChamferField {
        width: map.width(),
        height: map.height(),
        costs: chamfer_transform(map.width(), map.height(), &seeds, costs),
        source,
    })
}

/// Spectral chamfer field for one observed spectrum: each occupied cell is
/// seeded with `metric.distance(observed, cell spectrum)` and costs spread
/// with the given spatial step costs.
pub fn build_spectral_chamfer(
    map: &MaterialMap,
    metric: &SimilarityMetric,
    observed: &Spectrum,
    costs: ChamferCosts,
) -> Result<ChamferField> {
    let material_costs = map
        .library()
        .spectra()
        .iter()
        .map(|s| metric.distance(observed, s))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Ok(build_seeded_chamfer(
        map,
        &material_costs,
        costs,
        FieldSource::Spectral(metric.kind),
    )?)
}
