use std::f64::consts::PI;

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::log::LogRecord;
use super::world::{corridor_width, Layout};
use super::SimError;
use crate::error::Result;
use crate::eval::TrajectoryLog;
use crate::motion::{wrap_angle, MotionNoise, OdometryDelta, Pose2};
use crate::rng::{child_rng, derive_seed};
use crate::sensing::{ScanEntry, ScanTuple};
use crate::spectral::{apply_sensor_noise, NoiseConfig};
use crate::worldmap::MaterialMap;

/// Waypoint poses visited in order at constant linear and angular speed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryScript {
    pub waypoints: Vec<Pose2>,
    /// m/s
    pub speed: f64,
    /// rad/s
    pub angular_speed: f64,
    /// s
    pub scan_period: f64,
}

impl TrajectoryScript {
    pub fn new(waypoints: Vec<Pose2>) -> Self {
        TrajectoryScript {
            waypoints,
            speed: 0.2,
            angular_speed: 0.6,
            scan_period: 0.5,
        }
    }

    /// Segment durations: the slower of translating and turning.
    fn durations(&self) -> Vec<f64> {
        self.waypoints
            .windows(2)
            .map(|w| {
                let dist = (w[1].x - w[0].x).hypot(w[1].y - w[0].y);
                let turn = wrap_angle(w[1].theta - w[0].theta).abs();
                (dist / self.speed).max(turn / self.angular_speed)
            })
            .collect()
    }

    pub fn duration(&self) -> f64 {
        self.durations().iter().sum()
    }

    /// Pose at time `t`, clamped to the script's span.
    pub fn pose_at(&self, t: f64) -> Pose2 {
        let durations = self.durations();
        let mut start = 0.0;
        for (k, d) in durations.iter().enumerate() {
            if t <= start + d || k + 1 == durations.len() {
                let (a, b) = (self.waypoints[k], self.waypoints[k + 1]);
                let u = if *d > 0.0 { ((t - start) / d).clamp(0.0, 1.0) } else { 1.0 };
                return Pose2::new(
                    a.x + u * (b.x - a.x),
                    a.y + u * (b.y - a.y),
                    a.theta + u * wrap_angle(b.theta - a.theta),
                );
            }
            start += d;
        }
        self.waypoints[0]
    }

    /// Sample times `0, period, 2·period, …` up to the end of the script.
    pub fn sample_times(&self) -> Vec<f64> {
        let total = self.duration();
        let count = ((total + 1e-9) / self.scan_period).floor() as usize + 1;
        (0..count).map(|k| k as f64 * self.scan_period).collect()
    }

    /// Waypoints must lie in free space and segments must not cross walls.
    pub fn validate(&self, map: &MaterialMap) -> Result<()> {
        if self.waypoints.is_empty() {
            return Err(SimError::InvalidScript("no waypoints".into()).into());
        }
        for v in [self.speed, self.angular_speed, self.scan_period] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(SimError::InvalidScript("speed, angular_speed and scan_period must be positive".into()).into());
            }
        }
        for (k, w) in self.waypoints.iter().enumerate() {
            if !w.is_finite() || !map.is_free_at(w.x, w.y) {
                return Err(SimError::InvalidScript(format!("waypoint {k} at ({:.3}, {:.3}) is not free", w.x, w.y)).into());
            }
        }
        let step = map.resolution() / 4.0;
        for (k, w) in self.waypoints.windows(2).enumerate() {
            let dist = (w[1].x - w[0].x).hypot(w[1].y - w[0].y);
            let n = (dist / step).ceil() as usize;
            for s in 1..n {
                let u = s as f64 / n as f64;
                let (x, y) = (w[0].x + u * (w[1].x - w[0].x), w[0].y + u * (w[1].y - w[0].y));
                if !map.is_free_at(x, y) {
                    return Err(SimError::InvalidScript(format!(
                        "segment {k} crosses a wall near ({x:.3}, {y:.3})"
                    ))
                    .into());
                }
            }
        }
        Ok(())
    }
}

/// Drive through `points` (cell coordinates), turning in place at each
/// corner to face the next leg.
fn polyline_script(map: &MaterialMap, points: &[(f64, f64)]) -> TrajectoryScript {
    let world: Vec<(f64, f64)> = points.iter().map(|(i, j)| map.grid_to_world(*i, *j)).collect();
    let mut waypoints = Vec::new();
    for k in 0..world.len() - 1 {
        let (a, b) = (world[k], world[k + 1]);
        let heading = (b.1 - a.1).atan2(b.0 - a.0);
        waypoints.push(Pose2::new(a.0, a.1, heading));
        waypoints.push(Pose2::new(b.0, b.1, heading));
    }
    TrajectoryScript::new(waypoints)
}

/// One loop through the free space of a generated layout.
pub fn default_script(layout: Layout, map: &MaterialMap) -> TrajectoryScript {
    let n = map.width() as f64;
    let points: Vec<(f64, f64)> = match layout {
        Layout::CorridorLoop => {
            let c = 1.0 + corridor_width(map.width()) as f64 / 2.0;
            let far = n - c;
            vec![(c, c), (far, c), (far, far), (c, far), (c, c)]
        }
        Layout::Rooms => {
            let (a, b) = (0.25 * n, 0.75 * n);
            vec![(a, a), (b, a), (b, b), (a, b), (a, a)]
        }
        Layout::SymmetricTwin => {
            let (x0, x1, y0, y1) = (0.08 * n, 0.41 * n, 0.31 * n, 0.88 * n);
            vec![(x0, y0), (x1, y0), (x1, y1), (x0, y1), (x0, y0)]
        }
    };
    polyline_script(map, &points)
}

/// Ground-truth sensing parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorTruthConfig {
    pub k_beams: usize,
    pub max_range: f64,
    pub range_sigma: f64,
    pub noise: NoiseConfig,
    pub odom_noise: MotionNoise,
    /// Record ranges; without them the log is bearing-only.
    pub emit_ranges: bool,
}

impl Default for SensorTruthConfig {
    fn default() -> Self {
        SensorTruthConfig {
            k_beams: 16,
            max_range: 2.0,
            range_sigma: 0.01,
            noise: NoiseConfig::default(),
            odom_noise: MotionNoise::diagonal(0.005, 0.005, 0.01).expect("valid default noise"),
            emit_ranges: true,
        }
    }
}

impl SensorTruthConfig {
    /// Everything exact: ranges, spectra and odometry.
    pub fn noiseless() -> Self {
        SensorTruthConfig {
            range_sigma: 0.0,
            noise: NoiseConfig::noiseless(),
            odom_noise: MotionNoise::zero(),
            ..SensorTruthConfig::default()
        }
    }

    /// Bearings `-π + 2πk/k_beams`.
    pub fn bearings(&self) -> Vec<f64> {
        (0..self.k_beams)
            .map(|k| -PI + 2.0 * PI * k as f64 / self.k_beams as f64)
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.k_beams == 0 {
            return Err(SimError::InfeasibleSpec("k_beams must be >= 1".into()).into());
        }
        if !(self.max_range > 0.0) || !(self.range_sigma >= 0.0) {
            return Err(SimError::InfeasibleSpec("max_range must be > 0 and range_sigma >= 0".into()).into());
        }
        self.noise.validate()?;
        Ok(())
    }
}

/// Odometry from `prev` to `pose` plus noise, and the scan taken at `pose`.
pub fn simulate_step(
    map: &MaterialMap,
    prev: &Pose2,
    pose: &Pose2,
    t: f64,
    cfg: &SensorTruthConfig,
    seed: u64,
) -> Result<(OdometryDelta, ScanTuple)> {
    cfg.validate()?;
    if !map.is_free_at(pose.x, pose.y) {
        return Err(SimError::InvalidPose(format!("({:.3}, {:.3}) is not free", pose.x, pose.y)).into());
    }
    let mut rng = child_rng(seed, &[0]);
    let odom = cfg.odom_noise.sample(&prev.delta_to(pose), &mut rng);
    let mut entries = Vec::with_capacity(cfg.k_beams);
    for (k, bearing) in cfg.bearings().into_iter().enumerate() {
        let Some(hit) = map.raycast(pose, bearing, cfg.max_range)? else {
            continue;
        };
        let Some(spectrum) = hit.material_id.and_then(|m| map.library().get(m)) else {
            continue;
        };
        let range = if cfg.emit_ranges {
            let noise: f64 = rng.sample::<f64, _>(StandardNormal) * cfg.range_sigma;
            Some((hit.range + noise).clamp(1e-6, cfg.max_range))
        } else {
            None
        };
        let noise = cfg.noise.with_seed(derive_seed(seed, &[1, k as u64]));
        entries.push(ScanEntry {
            range,
            bearing,
            spectrum: apply_sensor_noise(spectrum, &noise)?,
        });
    }
    Ok((odom, ScanTuple { timestamp: t, entries }))
}

/// Ground truth plus the odometry/scan log of one scripted run.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub ground_truth: TrajectoryLog,
    pub records: Vec<LogRecord>,
}

/// Sample the script every `scan_period` and simulate a record at each
/// sample. The first record carries zero odometry.
pub fn generate_dataset(map: &MaterialMap, script: &TrajectoryScript, cfg: &SensorTruthConfig, seed: u64) -> Result<Dataset> {
    script.validate(map)?;
    cfg.validate()?;
    let mut gt = TrajectoryLog::empty();
    let mut records = Vec::new();
    let mut prev: Option<Pose2> = None;
    for (k, t) in script.sample_times().into_iter().enumerate() {
        let pose = if script.waypoints.len() == 1 {
            script.waypoints[0]
        } else {
            script.pose_at(t)
        };
        let (odom, scan) = simulate_step(map, &prev.unwrap_or(pose), &pose, t, cfg, derive_seed(seed, &[k as u64]))?;
        let odom = if prev.is_none() { OdometryDelta::zero() } else { odom };
        gt.push(t, pose)?;
        records.push(LogRecord::from_scan(odom, &scan, map, cfg.noise.is_noiseless()));
        prev = Some(pose);
    }
    Ok(Dataset {
        ground_truth: gt,
        records,
    })
}
