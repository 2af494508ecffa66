//! End-to-end runs: optional dataset generation, filtering, evaluation and
//! artifact output, plus parameter sweeps over a base manifest.

mod plot;
mod sweep;

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{compute_ate_with, compute_rpe, AteOptions, ErrorStats, RpeStats, TrajectoryLog};
use crate::filter::{FilterConfig, InitMode, ParticleFilter, StepReport};
use crate::motion::{MotionNoise, OdometryDelta};
use crate::sensing::{ScanTuple, SensorModel, SensorModelConfig};
use crate::sim::{
    default_script, generate_dataset, generate_world, read_log, resolve_log, write_log, Dataset, SensorTruthConfig,
    TrajectoryScript, WorldSpec,
};
use crate::worldmap::MaterialMap;

pub use plot::render_svg;
pub use sweep::{run_sweep, sweep_to_csv, SweepAxis, SweepRow};

/// Environment variable capping worker threads.
pub const THREADS_ENV: &str = "SPECTRAL_MCL_THREADS";

/// Dataset generation performed before a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerateSpec {
    pub world: WorldSpec,
    /// Defaults to one loop of the layout's standard route.
    #[serde(default)]
    pub script: Option<TrajectoryScript>,
    pub sensor: SensorTruthConfig,
    pub seed: u64,
}

/// Spread of a Gaussian initialisation around the first ground-truth pose.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthInit {
    pub std_xy: f64,
    pub std_theta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    /// Association window; `None` uses half the median sample period.
    #[serde(default)]
    pub max_dt: Option<f64>,
    pub rpe_delta: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            max_dt: None,
            rpe_delta: 1,
        }
    }
}

/// Every parameter of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    /// Map directory or metadata file.
    pub map: PathBuf,
    pub log: PathBuf,
    pub ground_truth: PathBuf,
    pub output: PathBuf,
    pub seed: u64,
    pub filter: FilterConfig,
    pub sensor: SensorModelConfig,
    /// Replaces `filter.init` with a Gaussian at the first ground-truth pose.
    #[serde(default)]
    pub init_from_ground_truth: Option<GroundTruthInit>,
    #[serde(default)]
    pub eval: EvalConfig,
    /// When set, the map, log and ground truth are generated first at the
    /// paths above.
    #[serde(default)]
    pub generate: Option<GenerateSpec>,
}

impl RunManifest {
    /// Paths for a run over `map`/`log` with ground truth next to the log.
    pub fn new(map: impl Into<PathBuf>, log: impl Into<PathBuf>, output: impl Into<PathBuf>) -> Self {
        let log = log.into();
        RunManifest {
            map: map.into(),
            ground_truth: default_ground_truth_path(&log),
            log,
            output: output.into(),
            seed: 0,
            filter: FilterConfig::default(),
            sensor: SensorModelConfig::default(),
            init_from_ground_truth: None,
            eval: EvalConfig::default(),
            generate: None,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.line(),
            msg: e.to_string(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    /// The manifest exactly as executed: the master seed drives the filter.
    pub fn resolved(&self) -> RunManifest {
        let mut m = self.clone();
        m.filter.rng_seed = m.seed;
        m
    }

    pub fn validate(&self) -> Result<()> {
        self.filter.validate()?;
        self.sensor.validate()?;
        Ok(())
    }
}

/// `run.jsonl` → `run.gt.tum`.
pub fn default_ground_truth_path(log: &Path) -> PathBuf {
    log.with_extension("gt.tum")
}

/// Generate a world and dataset and write map, log and ground truth.
pub fn generate_to_disk(spec: &GenerateSpec, map_dir: &Path, log: &Path, ground_truth: &Path) -> Result<(MaterialMap, Dataset)> {
    let map = generate_world(&spec.world)?;
    let script = spec
        .script
        .clone()
        .unwrap_or_else(|| default_script(spec.world.layout, &map));
    let data = generate_dataset(&map, &script, &spec.sensor, spec.seed)?;
    map.save(map_dir)?;
    for p in [log, ground_truth] {
        if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    write_log(log, &data.records)?;
    data.ground_truth.save_tum(ground_truth)?;
    Ok((map, data))
}

/// Estimated trajectory and per-step diagnostics of one filter pass.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterRun {
    pub estimate: TrajectoryLog,
    pub reports: Vec<StepReport>,
    /// Sensor-model construction plus filtering.
    pub seconds: f64,
}

/// Build the sensor model and run the filter over `steps`.
pub fn localize(
    map: Arc<MaterialMap>,
    sensor: &SensorModelConfig,
    filter: &FilterConfig,
    steps: &[(OdometryDelta, ScanTuple)],
) -> Result<FilterRun> {
    let start = Instant::now();
    let model = Arc::new(SensorModel::new(map, *sensor)?);
    let mut pf = ParticleFilter::new(model, *filter)?;
    let mut estimate = TrajectoryLog::empty();
    let mut reports = Vec::with_capacity(steps.len());
    for (odom, scan) in steps {
        let report = pf.step(odom, scan);
        estimate.push(scan.timestamp, report.estimate)?;
        reports.push(report);
    }
    Ok(FilterRun {
        estimate,
        reports,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Half the median spacing of `gt` timestamps.
pub fn default_max_dt(gt: &TrajectoryLog) -> f64 {
    let mut gaps: Vec<f64> = gt.samples().windows(2).map(|w| w[1].0 - w[0].0).collect();
    gaps.sort_by(f64::total_cmp);
    gaps.get(gaps.len() / 2).map(|g| g / 2.0).unwrap_or(1e-3)
}

/// Aligned ATE with the unaligned map-frame statistics alongside.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AteReport {
    #[serde(flatten)]
    pub aligned: ErrorStats,
    pub map_frame: ErrorStats,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub ate: AteReport,
    pub rpe: Option<RpeStats>,
    pub seconds: f64,
    pub steps: usize,
}

/// Evaluate `est` against `gt` and write `ate.json` and `rpe.json` into `out`.
pub fn evaluate_to_disk(est: &TrajectoryLog, gt: &TrajectoryLog, cfg: &EvalConfig, out: &Path) -> Result<(AteReport, Option<RpeStats>)> {
    let max_dt = cfg.max_dt.unwrap_or_else(|| default_max_dt(gt));
    let ate = AteReport {
        aligned: compute_ate_with(est, gt, &AteOptions::aligned(max_dt))?,
        map_frame: compute_ate_with(est, gt, &AteOptions::map_frame(max_dt))?,
    };
    let rpe = match compute_rpe(est, gt, cfg.rpe_delta, max_dt) {
        Ok(r) => Some(r),
        Err(crate::eval::EvalError::InsufficientData { .. }) => None,
        Err(e) => return Err(e.into()),
    };
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    write_json(&out.join("ate.json"), &ate)?;
    write_json(&out.join("rpe.json"), &rpe)?;
    Ok((ate, rpe))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("metrics serialize");
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

/// Execute a manifest: generate (if requested), filter, evaluate, write
/// `est.tum`, `gt.tum`, `ate.json`, `rpe.json`, `plot.svg` and
/// `manifest.resolved.json` into the output directory.
pub fn run_pipeline(manifest: &RunManifest) -> Result<RunSummary> {
    let m = manifest.resolved();
    m.validate()?;
    let map = match &m.generate {
        Some(spec) => generate_to_disk(spec, &m.map, &m.log, &m.ground_truth)?.0,
        None => MaterialMap::load(&m.map)?,
    };
    let map = Arc::new(map);
    let records = read_log(&m.log)?;
    let steps = resolve_log(&records, map.library(), &m.log)?;
    let gt = TrajectoryLog::load_tum(&m.ground_truth)?;

    let mut filter = m.filter;
    if let Some(init) = m.init_from_ground_truth {
        let (_, mean) = *gt
            .samples()
            .first()
            .ok_or_else(|| Error::Config(format!("{} holds no poses", m.ground_truth.display())))?;
        filter.init = InitMode::Gaussian {
            mean,
            std_xy: init.std_xy,
            std_theta: init.std_theta,
        };
    }
    let run = localize(map.clone(), &m.sensor, &filter, &steps)?;

    let out = &m.output;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    m.save(&out.join("manifest.resolved.json"))?;
    run.estimate.save_tum(&out.join("est.tum"))?;
    gt.save_tum(&out.join("gt.tum"))?;
    let (ate, rpe) = evaluate_to_disk(&run.estimate, &gt, &m.eval, out)?;
    let svg = render_svg(&map, &gt, &run.estimate);
    let plot = out.join("plot.svg");
    std::fs::write(&plot, svg).map_err(|e| Error::io(&plot, e))?;
    Ok(RunSummary {
        ate,
        rpe,
        seconds: run.seconds,
        steps: steps.len(),
    })
}

/// Worker count from [`THREADS_ENV`], if set to a positive integer.
pub fn thread_limit() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::Config(format!("{THREADS_ENV} must be a positive integer, got `{v}`"))),
        },
    }
}

/// Size the global worker pool from [`THREADS_ENV`]. Has no effect if the
/// pool was already initialised.
pub fn configure_threads() -> Result<()> {
    if let Some(n) = thread_limit()? {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// Motion noise disabled, used for exact replays.
pub fn without_motion_noise(cfg: FilterConfig) -> FilterConfig {
    FilterConfig {
        motion_noise: MotionNoise::zero(),
        ..cfg
    }
}
