//! Sensor models scoring a scan of (range, bearing, spectrum) entries
//! against a pose hypothesis.
//!
//! Both models mix a range term `P_R` and a material term `P_m` as
//! `ε_R·P_R + ε_m·P_m`:
//!
//! - **beam**: raycast from the hypothesis; `P_R` compares the measured range
//!   with the raycast range, `P_m` maps the spectral distance between the
//!   observed spectrum and the hit cell's spectrum through `exp(-d²/K)`.
//! - **likelihood field**: project the measured endpoint into precomputed
//!   chamfer fields. `P_R = exp(-δ²/2σ²)` with δ from the range field and
//!   `P_m = exp(-C²)` from the spectral field of the library spectrum the
//!   observation snaps to. Spectral fields are stored in units where a
//!   spectral distance `d` contributes `d/√K` and a spatial offset `δ`
//!   contributes `δ/(σ√2)`, so a perfectly matching material gives
//!   `P_m = P_R`. Without ranges the endpoint comes from a raycast and the
//!   range term is dropped.
//!
//! Every per-beam likelihood is floored at [`LIKELIHOOD_FLOOR`] so a single
//! bad beam cannot zero a hypothesis.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::motion::Pose2;
use crate::spectral::{
    baseline_correct, calibrate_scale, distance_to_likelihood, MetricKind, SimilarityMetric, SpectralError,
    Spectrum, DEFAULT_BASELINE_ORDER, DEFAULT_SLK_WINDOW,
};
use crate::worldmap::{build_range_chamfer, build_seeded_chamfer, ChamferCosts, ChamferField, FieldSource, MaterialMap, RayHit};

/// Likelihood assigned to beams that miss, hit unknown material, or land
/// outside the map; also the lower bound of every per-beam likelihood.
pub const LIKELIHOOD_FLOOR: f64 = 0.01;

/// Endpoints are pushed this far (in cells) along the beam so a range that
/// ends exactly on a cell face is looked up in the cell it hit.
const SURFACE_NUDGE_CELLS: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SensorModelKind {
    Beam,
    LikelihoodField,
}

impl fmt::Display for SensorModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SensorModelKind::Beam => "beam",
            SensorModelKind::LikelihoodField => "field",
        })
    }
}

impl FromStr for SensorModelKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "beam" => Ok(SensorModelKind::Beam),
            "field" | "likelihood_field" | "likelihood-field" => Ok(SensorModelKind::LikelihoodField),
            other => Err(format!("unknown sensor model `{other}` (expected beam or field)")),
        }
    }
}

/// Metric choice; `scale` of `None` calibrates `K` from the map library.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricConfig {
    pub kind: MetricKind,
    pub window: usize,
    pub scale: Option<f64>,
}

impl MetricConfig {
    pub fn new(kind: MetricKind) -> Self {
        MetricConfig {
            kind,
            window: DEFAULT_SLK_WINDOW,
            scale: None,
        }
    }
}

impl Default for MetricConfig {
    fn default() -> Self {
        MetricConfig::new(MetricKind::ModL2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorModelConfig {
    pub model: SensorModelKind,
    pub eps_range: f64,
    pub eps_material: f64,
    /// Range noise standard deviation σ_o, meters.
    pub sigma_range: f64,
    pub metric: MetricConfig,
    pub max_range: f64,
    pub use_ranges: bool,
    /// Polynomial order of the baseline removed from every spectrum.
    pub baseline_order: usize,
}

impl Default for SensorModelConfig {
    /// Materials-only likelihood field with Mod. L2.
    fn default() -> Self {
        SensorModelConfig {
            model: SensorModelKind::LikelihoodField,
            eps_range: 0.0,
            eps_material: 1.0,
            sigma_range: 0.6,
            metric: MetricConfig::default(),
            max_range: 2.0,
            use_ranges: true,
            baseline_order: DEFAULT_BASELINE_ORDER,
        }
    }
}

impl SensorModelConfig {
    /// Set `ε_m` and `ε_R = 1 − ε_m`.
    pub fn with_material_weight(self, eps_material: f64) -> Self {
        SensorModelConfig {
            eps_material,
            eps_range: 1.0 - eps_material,
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if !unit(self.eps_range) || !unit(self.eps_material) || (self.eps_range + self.eps_material - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "ε weights must lie in [0, 1] and sum to 1, got ({}, {})",
                self.eps_range, self.eps_material
            )));
        }
        if !(self.sigma_range > 0.0) || !self.sigma_range.is_finite() {
            return Err(Error::Config(format!("sigma_range must be positive, got {}", self.sigma_range)));
        }
        if !(self.max_range > 0.0) || !self.max_range.is_finite() {
            return Err(Error::Config(format!("max_range must be positive, got {}", self.max_range)));
        }
        if self.metric.window == 0 {
            return Err(Error::Config("metric window must be >= 1".into()));
        }
        Ok(())
    }
}

/// One probe reading.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanEntry {
    /// Measured range, meters; `None` for bearing-only readings.
    pub range: Option<f64>,
    /// Bearing in the robot frame, radians.
    pub bearing: f64,
    pub spectrum: Spectrum,
}

/// One sensor message: entries sorted by strictly increasing bearing.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScanTuple {
    pub timestamp: f64,
    pub entries: Vec<ScanEntry>,
}

impl ScanTuple {
    pub fn new(timestamp: f64, entries: Vec<ScanEntry>) -> Result<Self> {
        let scan = ScanTuple { timestamp, entries };
        scan.validate(f64::INFINITY)?;
        Ok(scan)
    }

    pub fn validate(&self, max_range: f64) -> Result<()> {
        for w in self.entries.windows(2) {
            if !(w[1].bearing > w[0].bearing) {
                return Err(Error::Config(format!(
                    "scan bearings must be strictly increasing ({} then {})",
                    w[0].bearing, w[1].bearing
                )));
            }
        }
        for e in &self.entries {
            if let Some(r) = e.range {
                if !(r > 0.0 && r <= max_range) {
                    return Err(Error::Config(format!("range {r} outside (0, {max_range}]")));
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// `exp(-(r − r*)² / 2σ²)`.
pub fn beam_range_likelihood(range: f64, expected: f64, sigma: f64) -> f64 {
    let d = range - expected;
    (-(d * d) / (2.0 * sigma * sigma)).exp()
}

/// Material likelihood of a beam that stopped on `hit`: the squared
/// exponential of the spectral distance to the hit cell's spectrum, or the
/// floor when the cell carries no material.
pub fn beam_material_likelihood(
    observed: &Spectrum,
    hit: &RayHit,
    map: &MaterialMap,
    metric: &SimilarityMetric,
) -> Result<f64> {
    match hit.material_id.and_then(|m| map.library().get(m)) {
        Some(reference) => Ok(metric.likelihood(observed, reference)?),
        None => Ok(LIKELIHOOD_FLOOR),
    }
}

/// `ε_R·P_R + ε_m·P_m`, floored.
#[inline]
pub fn mix_likelihoods(eps_range: f64, p_range: f64, eps_material: f64, p_material: f64) -> f64 {
    (eps_range * p_range + eps_material * p_material).max(LIKELIHOOD_FLOOR)
}

/// Observation entry after spectral preprocessing.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedEntry {
    pub range: Option<f64>,
    pub bearing: f64,
    /// Library spectrum nearest to the observation, if it could be compared.
    pub snapped: Option<usize>,
    /// `exp(-f(observed, library_m)²/K)` for every library spectrum.
    pub material_likelihoods: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreparedScan {
    pub timestamp: f64,
    pub entries: Vec<PreparedEntry>,
}

/// Decomposed likelihood of one beam.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BeamOutcome {
    /// Hypothesis outside the map.
    OutOfMap,
    /// No usable endpoint (miss, or endpoint outside the map).
    Miss,
    /// `p_range` is `None` when the range term is omitted.
    Scored { p_range: Option<f64>, p_material: f64 },
}

/// Sensor model bound to a map: calibrated metric, preprocessed library and
/// prebuilt chamfer fields. Immutable once built; share freely across threads.
#[derive(Debug, Clone)]
pub struct SensorModel {
    map: Arc<MaterialMap>,
    cfg: SensorModelConfig,
    metric: SimilarityMetric,
    library: Vec<Spectrum>,
    /// `library_distances[s][m] = f(library_s, library_m)`.
    library_distances: Vec<Vec<f64>>,
    range_field: ChamferField,
    material_fields: Vec<ChamferField>,
}

impl SensorModel {
    pub fn new(map: Arc<MaterialMap>, cfg: SensorModelConfig) -> Result<Self> {
        cfg.validate()?;
        let kind = cfg.metric.kind;
        let window = cfg.metric.window;
        let corrected = map
            .library()
            .spectra()
            .iter()
            .map(|s| baseline_correct(s, cfg.baseline_order))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        let scale = match cfg.metric.scale {
            Some(k) => k,
            None => calibrate_scale(&corrected, kind, window)?,
        };
        let metric = SimilarityMetric::new(kind, window, scale)?;
        let library = corrected
            .iter()
            .map(|s| kind.prepare(s))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        let library_distances = library
            .iter()
            .map(|a| {
                library
                    .iter()
                    .map(|b| kind.distance_prepared(a, b, window))
                    .collect::<std::result::Result<Vec<_>, _>>()
            })
            .collect::<std::result::Result<Vec<_>, _>>()?;

        let range_field = build_range_chamfer(&map)?;
        let step = ChamferCosts::scaled(map.resolution() / (cfg.sigma_range * std::f64::consts::SQRT_2));
        let inv_sqrt_k = 1.0 / scale.sqrt();
        let material_fields = library_distances
            .iter()
            .map(|row| {
                let seeds: Vec<f64> = row.iter().map(|d| d * inv_sqrt_k).collect();
                build_seeded_chamfer(&map, &seeds, step, FieldSource::Spectral(kind))
            })
            .collect::<std::result::Result<Vec<_>, _>>()?;

        Ok(SensorModel {
            map,
            cfg,
            metric,
            library,
            library_distances,
            range_field,
            material_fields,
        })
    }

    pub fn map(&self) -> &MaterialMap {
        &self.map
    }

    pub fn map_arc(&self) -> &Arc<MaterialMap> {
        &self.map
    }

    pub fn config(&self) -> &SensorModelConfig {
        &self.cfg
    }

    pub fn metric(&self) -> &SimilarityMetric {
        &self.metric
    }

    pub fn range_field(&self) -> &ChamferField {
        &self.range_field
    }

    /// Spectral field for observations snapped to library spectrum `s`.
    pub fn material_field(&self, s: usize) -> &ChamferField {
        &self.material_fields[s]
    }

    pub fn library_distance(&self, observed: usize, reference: usize) -> f64 {
        self.library_distances[observed][reference]
    }

    /// Preprocess an observed spectrum the same way the library was.
    pub fn prepare_spectrum(&self, s: &Spectrum) -> std::result::Result<Spectrum, SpectralError> {
        let corrected = baseline_correct(s, self.cfg.baseline_order)?;
        self.metric.kind.prepare(&corrected)
    }

    /// Distances from an observed spectrum to every library spectrum.
    pub fn library_distances_for(&self, observed: &Spectrum) -> std::result::Result<Vec<f64>, SpectralError> {
        let prepared = self.prepare_spectrum(observed)?;
        self.library
            .iter()
            .map(|reference| {
                prepared.ensure_comparable(reference)?;
                self.metric.kind.distance_prepared(&prepared, reference, self.metric.window)
            })
            .collect()
    }

    /// Index of the nearest library spectrum under the configured metric.
    pub fn classify(&self, observed: &Spectrum) -> std::result::Result<usize, SpectralError> {
        let d = self.library_distances_for(observed)?;
        Ok(argmin(&d))
    }

    /// Spectral work shared by all hypotheses: per-entry snapping and
    /// per-material likelihoods. Unusable spectra fall back to the floor.
    pub fn prepare_scan(&self, scan: &ScanTuple) -> PreparedScan {
        let entries = scan
            .entries
            .iter()
            .map(|e| {
                let (snapped, material_likelihoods) = match self.library_distances_for(&e.spectrum) {
                    Ok(d) => (
                        Some(argmin(&d)),
                        d.iter()
                            .map(|v| distance_to_likelihood(*v, self.metric.scale).unwrap_or(LIKELIHOOD_FLOOR))
                            .collect(),
                    ),
                    Err(_) => (None, vec![LIKELIHOOD_FLOOR; self.library.len()]),
                };
                PreparedEntry {
                    range: e.range,
                    bearing: e.bearing,
                    snapped,
                    material_likelihoods,
                }
            })
            .collect();
        PreparedScan {
            timestamp: scan.timestamp,
            entries,
        }
    }

    /// Raw range and material terms of one beam, with the number of
    /// raycasts performed.
    pub fn beam_terms(&self, entry: &PreparedEntry, pose: &Pose2) -> (BeamOutcome, usize) {
        match self.cfg.model {
            SensorModelKind::Beam => self.beam_model_terms(entry, pose),
            SensorModelKind::LikelihoodField => self.field_model_terms(entry, pose),
        }
    }

    fn beam_model_terms(&self, entry: &PreparedEntry, pose: &Pose2) -> (BeamOutcome, usize) {
        let hit = match self.map.raycast(pose, entry.bearing, self.cfg.max_range) {
            Err(_) => return (BeamOutcome::OutOfMap, 1),
            Ok(None) => return (BeamOutcome::Miss, 1),
            Ok(Some(hit)) => hit,
        };
        let p_material = match hit.material_id {
            Some(m) => entry.material_likelihoods[m],
            None => LIKELIHOOD_FLOOR,
        };
        let p_range = match (self.cfg.use_ranges, entry.range) {
            (true, Some(r)) => Some(beam_range_likelihood(r, hit.range, self.cfg.sigma_range)),
            _ => None,
        };
        (BeamOutcome::Scored { p_range, p_material }, 1)
    }

    fn spectral_term(&self, entry: &PreparedEntry, i: usize, j: usize) -> f64 {
        match entry.snapped {
            Some(s) => {
                let c = self.material_fields[s].get(i, j);
                (-(c * c)).exp()
            }
            None => LIKELIHOOD_FLOOR,
        }
    }

    fn field_model_terms(&self, entry: &PreparedEntry, pose: &Pose2) -> (BeamOutcome, usize) {
        if !self.map.world_to_cell(pose.x, pose.y).is_some() {
            return (BeamOutcome::OutOfMap, 0);
        }
        match (self.cfg.use_ranges, entry.range) {
            (true, Some(r)) => {
                let reach = r + SURFACE_NUDGE_CELLS * self.map.resolution();
                let (s, c) = (pose.theta + entry.bearing).sin_cos();
                let Some((i, j)) = self.map.world_to_cell(pose.x + c * reach, pose.y + s * reach) else {
                    return (BeamOutcome::Miss, 0);
                };
                let delta = self.range_field.get(i, j) * self.map.resolution();
                let sigma = self.cfg.sigma_range;
                let p_range = (-(delta * delta) / (2.0 * sigma * sigma)).exp();
                (
                    BeamOutcome::Scored {
                        p_range: Some(p_range),
                        p_material: self.spectral_term(entry, i, j),
                    },
                    0,
                )
            }
            _ => match self.map.raycast(pose, entry.bearing, self.cfg.max_range) {
                Err(_) => (BeamOutcome::OutOfMap, 1),
                Ok(None) => (BeamOutcome::Miss, 1),
                Ok(Some(hit)) => {
                    let p_material = if hit.material_id.is_some() {
                        self.spectral_term(entry, hit.cell.0, hit.cell.1)
                    } else {
                        LIKELIHOOD_FLOOR
                    };
                    (
                        BeamOutcome::Scored {
                            p_range: None,
                            p_material,
                        },
                        1,
                    )
                }
            },
        }
    }

    /// Combine the terms of one beam with the configured ε weights.
    pub fn combine(&self, outcome: BeamOutcome) -> f64 {
        match outcome {
            BeamOutcome::OutOfMap => 0.0,
            BeamOutcome::Miss => LIKELIHOOD_FLOOR,
            BeamOutcome::Scored {
                p_range: Some(p_range),
                p_material,
            } => mix_likelihoods(self.cfg.eps_range, p_range, self.cfg.eps_material, p_material),
            BeamOutcome::Scored {
                p_range: None,
                p_material,
            } => p_material.max(LIKELIHOOD_FLOOR),
        }
    }

    pub fn beam_likelihood(&self, entry: &PreparedEntry, pose: &Pose2) -> f64 {
        self.combine(self.beam_terms(entry, pose).0)
    }

    /// Natural log of the product of per-beam likelihoods, with the number
    /// of raycasts performed.
    pub fn scan_log_likelihood_counted(&self, scan: &PreparedScan, pose: &Pose2) -> (f64, usize) {
        let mut log_l = 0.0;
        let mut casts = 0;
        for entry in &scan.entries {
            let (outcome, n) = self.beam_terms(entry, pose);
            casts += n;
            log_l += self.combine(outcome).ln();
        }
        (log_l, casts)
    }

    pub fn scan_log_likelihood(&self, scan: &PreparedScan, pose: &Pose2) -> f64 {
        self.scan_log_likelihood_counted(scan, pose).0
    }

    /// Product of per-beam likelihoods (beams assumed independent).
    pub fn scan_likelihood(&self, scan: &PreparedScan, pose: &Pose2) -> f64 {
        self.scan_log_likelihood(scan, pose).exp()
    }
}

fn argmin(values: &[f64]) -> usize {
    values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0)
}
