//! Monte-Carlo localisation: particle initialisation, prediction, weighting,
//! systematic resampling with KLD-sized particle counts, and pose estimation.

use std::collections::HashSet;
use std::f64::consts::PI;
use std::sync::Arc;

use rand::Rng as _;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::motion::{wrap_angle, MotionNoise, OdometryDelta, Pose2};
use crate::rng::{rng_from_seed, Rng};
use crate::sensing::{PreparedScan, ScanTuple, SensorModel};
use crate::worldmap::{MapError, MaterialMap};

/// Histogram bin size used for KLD sizing: (x m, y m, θ rad).
pub const KLD_BIN: [f64; 3] = [0.5, 0.5, PI / 8.0];

/// Rejection-sampling budget per requested Gaussian particle.
const MAX_INIT_ATTEMPTS_PER_PARTICLE: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Particle {
    pub pose: Pose2,
    pub weight: f64,
}

/// Weighted pose hypotheses; weights sum to one.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParticleSet {
    particles: Vec<Particle>,
}

impl ParticleSet {
    /// Equally weighted set.
    pub fn uniform(poses: Vec<Pose2>) -> Self {
        let w = 1.0 / poses.len().max(1) as f64;
        ParticleSet {
            particles: poses.into_iter().map(|pose| Particle { pose, weight: w }).collect(),
        }
    }

    /// Normalizes the given weights; falls back to uniform if they sum to 0.
    pub fn from_particles(particles: Vec<Particle>) -> Self {
        let mut set = ParticleSet { particles };
        set.normalize();
        set
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn particles(&self) -> &[Particle] {
        &self.particles
    }

    pub fn poses(&self) -> impl Iterator<Item = &Pose2> {
        self.particles.iter().map(|p| &p.pose)
    }

    pub fn weights(&self) -> Vec<f64> {
        self.particles.iter().map(|p| p.weight).collect()
    }

    pub fn weight_sum(&self) -> f64 {
        self.particles.iter().map(|p| p.weight).sum()
    }

    /// `1 / Σw²`.
    pub fn effective_sample_size(&self) -> f64 {
        let s: f64 = self.particles.iter().map(|p| p.weight * p.weight).sum();
        if s > 0.0 {
            1.0 / s
        } else {
            0.0
        }
    }

    fn normalize(&mut self) {
        let total = self.weight_sum();
        if total > 0.0 && total.is_finite() {
            for p in &mut self.particles {
                p.weight /= total;
            }
        } else {
            let w = 1.0 / self.particles.len().max(1) as f64;
            for p in &mut self.particles {
                p.weight = w;
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum InitMode {
    UniformFreeSpace,
    Gaussian { mean: Pose2, std_xy: f64, std_theta: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterConfig {
    pub n_min: usize,
    pub n_max: usize,
    pub init: InitMode,
    /// Resample when `N_eff < resample_threshold · n`.
    pub resample_threshold: f64,
    pub kld_epsilon: f64,
    pub kld_delta: f64,
    /// Odometry noise assumed by the prediction step.
    pub motion_noise: MotionNoise,
    pub rng_seed: u64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            n_min: 100,
            n_max: 1000,
            init: InitMode::UniformFreeSpace,
            resample_threshold: 0.5,
            kld_epsilon: 0.05,
            kld_delta: 0.01,
            motion_noise: MotionNoise::diagonal(0.03, 0.03, 0.08).expect("valid default noise"),
            rng_seed: 0,
        }
    }
}

impl FilterConfig {
    /// Fixed particle count `n`.
    pub fn with_particles(self, n: usize) -> Self {
        FilterConfig {
            n_min: n,
            n_max: n,
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_min == 0 || self.n_min > self.n_max {
            return Err(Error::Config(format!(
                "particle counts must satisfy 0 < n_min <= n_max, got {} and {}",
                self.n_min, self.n_max
            )));
        }
        if !(self.resample_threshold > 0.0 && self.resample_threshold <= 1.0) {
            return Err(Error::Config(format!(
                "resample_threshold must lie in (0, 1], got {}",
                self.resample_threshold
            )));
        }
        if !(self.kld_epsilon > 0.0) || !(self.kld_delta > 0.0 && self.kld_delta < 1.0) {
            return Err(Error::Config("kld_epsilon must be > 0 and kld_delta in (0, 1)".into()));
        }
        if let InitMode::Gaussian { std_xy, std_theta, .. } = self.init {
            if !(std_xy >= 0.0) || !(std_theta >= 0.0) {
                return Err(Error::Config("init standard deviations must be >= 0".into()));
            }
        }
        Ok(())
    }
}

/// Draw `cfg.n_max` equally weighted particles.
///
/// Gaussian samples that fall outside the map or on a non-free cell are
/// redrawn; a zero-spread Gaussian returns copies of the mean.
pub fn init_particles(map: &MaterialMap, cfg: &FilterConfig, rng: &mut Rng) -> Result<ParticleSet> {
    let free = map.free_cells();
    if free.is_empty() {
        return Err(MapError::EmptyMap.into());
    }
    let n = cfg.n_max;
    let poses = match cfg.init {
        InitMode::UniformFreeSpace => (0..n).map(|_| sample_free(map, &free, rng)).collect(),
        InitMode::Gaussian { mean, std_xy, std_theta } => {
            if std_xy == 0.0 && std_theta == 0.0 {
                vec![mean; n]
            } else {
                let mut poses = Vec::with_capacity(n);
                let mut attempts = 0;
                while poses.len() < n {
                    if attempts >= MAX_INIT_ATTEMPTS_PER_PARTICLE * n {
                        return Err(Error::Config(format!(
                            "gaussian init around ({:.3}, {:.3}) found no free space",
                            mean.x, mean.y
                        )));
                    }
                    attempts += 1;
                    let gx: f64 = rng.sample(StandardNormal);
                    let gy: f64 = rng.sample(StandardNormal);
                    let gt: f64 = rng.sample(StandardNormal);
                    let p = Pose2::new(mean.x + std_xy * gx, mean.y + std_xy * gy, mean.theta + std_theta * gt);
                    if map.is_free_at(p.x, p.y) {
                        poses.push(p);
                    }
                }
                poses
            }
        }
    };
    Ok(ParticleSet::uniform(poses))
}

fn sample_free(map: &MaterialMap, free: &[(usize, usize)], rng: &mut Rng) -> Pose2 {
    let (i, j) = free[rng.random_range(0..free.len())];
    let u: f64 = rng.random();
    let v: f64 = rng.random();
    let (x, y) = map.grid_to_world(i as f64 + u, j as f64 + v);
    Pose2::new(x, y, rng.random_range(-PI..PI))
}

/// Propagate every particle through the noisy motion model; weights kept.
pub fn predict(set: &ParticleSet, d: &OdometryDelta, noise: &MotionNoise, rng: &mut Rng) -> ParticleSet {
    let particles = set
        .particles
        .iter()
        .map(|p| {
            let sampled = noise.sample(d, rng);
            Particle {
                pose: p.pose.compose(&sampled),
                weight: p.weight,
            }
        })
        .collect();
    ParticleSet { particles }
}

/// Multiply weights by the scan likelihood and renormalize. Log weights
/// are shifted by their maximum before exponentiation. Returns the new set
/// and the largest per-particle log-likelihood.
pub fn update(set: &ParticleSet, scan: &PreparedScan, model: &SensorModel) -> (ParticleSet, f64) {
    let log_l: Vec<f64> = set
        .particles
        .par_iter()
        .map(|p| model.scan_log_likelihood(scan, &p.pose))
        .collect();
    let log_w: Vec<f64> = set
        .particles
        .iter()
        .zip(&log_l)
        .map(|(p, l)| p.weight.ln() + l)
        .collect();
    let best = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let max_l = log_l.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !best.is_finite() {
        // Every hypothesis left the map; keep the prior weights.
        return (set.clone(), max_l);
    }
    let particles = set
        .particles
        .iter()
        .zip(&log_w)
        .map(|(p, lw)| Particle {
            pose: p.pose,
            weight: (lw - best).exp(),
        })
        .collect();
    (ParticleSet::from_particles(particles), max_l)
}

/// Low-variance resampling to `count` particles with one uniform offset.
pub fn systematic_resample(set: &ParticleSet, count: usize, rng: &mut Rng) -> ParticleSet {
    if set.is_empty() || count == 0 {
        return ParticleSet::default();
    }
    let step = 1.0 / count as f64;
    let u0: f64 = rng.random::<f64>() * step;
    let mut poses = Vec::with_capacity(count);
    let mut cumulative = set.particles[0].weight;
    let mut i = 0;
    for k in 0..count {
        let u = u0 + k as f64 * step;
        while u > cumulative && i + 1 < set.len() {
            i += 1;
            cumulative += set.particles[i].weight;
        }
        poses.push(set.particles[i].pose);
    }
    ParticleSet::uniform(poses)
}

/// Resample only when `N_eff < resample_threshold · n`; the output size is
/// the KLD bound evaluated on a full-size resample. Returns `None` when no
/// resampling was triggered.
pub fn resample(set: &ParticleSet, cfg: &FilterConfig, rng: &mut Rng) -> Option<ParticleSet> {
    if set.effective_sample_size() >= cfg.resample_threshold * set.len() as f64 {
        return None;
    }
    let full = systematic_resample(set, cfg.n_max, rng);
    let target = adapt_count(&full, cfg);
    if target == full.len() {
        Some(full)
    } else {
        Some(systematic_resample(&full, target, rng))
    }
}

/// Number of occupied (x, y, θ) histogram bins.
pub fn occupied_bins(set: &ParticleSet) -> usize {
    let bins: HashSet<(i64, i64, i64)> = set
        .poses()
        .map(|p| {
            (
                (p.x / KLD_BIN[0]).floor() as i64,
                (p.y / KLD_BIN[1]).floor() as i64,
                (wrap_angle(p.theta) / KLD_BIN[2]).floor() as i64,
            )
        })
        .collect();
    bins.len()
}

/// KLD-sampling bound for `k` occupied bins, before clamping.
pub fn kld_bound(k: usize, epsilon: f64, delta: f64) -> f64 {
    if k <= 1 {
        return 0.0;
    }
    let z = Normal::standard().inverse_cdf(1.0 - delta);
    let km1 = (k - 1) as f64;
    let a = 2.0 / (9.0 * km1);
    km1 / (2.0 * epsilon) * (1.0 - a + a.sqrt() * z).powi(3)
}

/// KLD bound on the set's occupied-bin count, clamped to `[n_min, n_max]`.
pub fn adapt_count(set: &ParticleSet, cfg: &FilterConfig) -> usize {
    let n = kld_bound(occupied_bins(set), cfg.kld_epsilon, cfg.kld_delta).ceil();
    (n as usize).clamp(cfg.n_min, cfg.n_max)
}

/// Weighted mean position, circular mean heading, and the weighted
/// covariance of (x, y, wrapped θ) residuals.
pub fn estimate_pose(set: &ParticleSet) -> (Pose2, [[f64; 3]; 3]) {
    let (mut mx, mut my, mut sx, mut cy) = (0.0, 0.0, 0.0, 0.0);
    for p in &set.particles {
        mx += p.weight * p.pose.x;
        my += p.weight * p.pose.y;
        let (s, c) = p.pose.theta.sin_cos();
        sx += p.weight * s;
        cy += p.weight * c;
    }
    let mean = Pose2::new(mx, my, sx.atan2(cy));
    let mut cov = [[0.0; 3]; 3];
    for p in &set.particles {
        let r = [p.pose.x - mean.x, p.pose.y - mean.y, wrap_angle(p.pose.theta - mean.theta)];
        for a in 0..3 {
            for b in 0..3 {
                cov[a][b] += p.weight * r[a] * r[b];
            }
        }
    }
    (mean, cov)
}

/// Outcome of one filter step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    pub estimate: Pose2,
    pub covariance: [[f64; 3]; 3],
    pub effective_sample_size: f64,
    /// `|Σw − 1|` right after weighting.
    pub weight_sum_error: f64,
    pub resampled: bool,
    pub particles: usize,
}

/// Single-owner filter state: predict, weight, estimate, then resample.
#[derive(Debug, Clone)]
pub struct ParticleFilter {
    cfg: FilterConfig,
    model: Arc<SensorModel>,
    set: ParticleSet,
    rng: Rng,
}

impl ParticleFilter {
    pub fn new(model: Arc<SensorModel>, cfg: FilterConfig) -> Result<Self> {
        cfg.validate()?;
        let mut rng = rng_from_seed(cfg.rng_seed);
        let set = init_particles(model.map(), &cfg, &mut rng)?;
        Ok(ParticleFilter { cfg, model, set, rng })
    }

    pub fn config(&self) -> &FilterConfig {
        &self.cfg
    }

    pub fn model(&self) -> &SensorModel {
        &self.model
    }

    pub fn particles(&self) -> &ParticleSet {
        &self.set
    }

    pub fn estimate(&self) -> (Pose2, [[f64; 3]; 3]) {
        estimate_pose(&self.set)
    }

    pub fn step(&mut self, odom: &OdometryDelta, scan: &ScanTuple) -> StepReport {
        self.set = predict(&self.set, odom, &self.cfg.motion_noise, &mut self.rng);
        if !scan.is_empty() {
            let prepared = self.model.prepare_scan(scan);
            self.set = update(&self.set, &prepared, &self.model).0;
        }
        let weight_sum_error = (self.set.weight_sum() - 1.0).abs();
        let effective_sample_size = self.set.effective_sample_size();
        let (estimate, covariance) = estimate_pose(&self.set);
        let resampled = match resample(&self.set, &self.cfg, &mut self.rng) {
            Some(s) => {
                self.set = s;
                true
            }
            None => false,
        };
        StepReport {
            estimate,
            covariance,
            effective_sample_size,
            weight_sum_error,
            resampled,
            particles: self.set.len(),
        }
    }
}
