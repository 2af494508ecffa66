use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use spectral_mcl::eval::TrajectoryLog;
use spectral_mcl::filter::InitMode;
use spectral_mcl::pipeline::{
    configure_threads, default_ground_truth_path, evaluate_to_disk, generate_to_disk, run_pipeline, run_sweep,
    sweep_to_csv, without_motion_noise, EvalConfig, GenerateSpec, GroundTruthInit, RunManifest, SweepAxis,
};
use spectral_mcl::sensing::SensorModelKind;
use spectral_mcl::sim::{Layout, MaterialAssignment, SensorTruthConfig, WorldSpec};
use spectral_mcl::spectral::{MetricKind, NoiseConfig};
use spectral_mcl::Error;

/// Material-aware Monte-Carlo localisation with Raman spectra.
#[derive(Parser)]
#[command(name = "spectral-mcl", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic world, sensor log and ground truth.
    Gen(GenArgs),
    /// Localise over a log and evaluate against ground truth.
    Run(RunArgs),
    /// Compute ATE and RPE between two TUM trajectories.
    Eval(EvalArgs),
    /// Run once per value of one parameter and tabulate the errors.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value = "corridor_loop")]
    layout: Layout,
    /// Grid side length in cells.
    #[arg(long, default_value_t = 64)]
    size: usize,
    /// Metres per cell.
    #[arg(long, default_value_t = 0.05)]
    resolution: f64,
    #[arg(long, default_value_t = 5)]
    materials: usize,
    #[arg(long, value_enum, default_value_t = Assignment::Walls)]
    assignment: Assignment,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Beams per scan.
    #[arg(long, default_value_t = 16)]
    beams: usize,
    /// Drop ranges from the log (bearing-only probe).
    #[arg(long)]
    no_ranges: bool,
    /// Noise-free odometry, ranges and spectra.
    #[arg(long)]
    no_noise: bool,
    /// Output map directory.
    #[arg(long, default_value = "world")]
    map: PathBuf,
    #[arg(long, default_value = "run.jsonl")]
    log: PathBuf,
    /// Ground-truth path; defaults to the log path with `.gt.tum`.
    #[arg(long)]
    gt: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Assignment {
    /// One material per wall tile.
    Walls,
    /// Random nearest-seed patches.
    Patches,
}

#[derive(Clone, Copy, ValueEnum)]
enum Init {
    /// Every particle at the first ground-truth pose.
    Gt,
    /// Gaussian around the first ground-truth pose.
    Coarse,
    /// Uniform over free space.
    Uniform,
}

#[derive(Args)]
struct RunArgs {
    /// Base manifest; flags given explicitly override its fields.
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long, required_unless_present = "manifest")]
    map: Option<PathBuf>,
    #[arg(long, required_unless_present = "manifest")]
    log: Option<PathBuf>,
    /// Ground truth; defaults to the log path with `.gt.tum`.
    #[arg(long)]
    gt: Option<PathBuf>,
    /// Sensor model: `beam` or `field`.
    #[arg(long)]
    model: Option<SensorModelKind>,
    /// slk, mod-l2, wasserstein, kl or sam.
    #[arg(long)]
    metric: Option<MetricKind>,
    /// Material weight; the range weight becomes 1 - eps_m.
    #[arg(long)]
    eps_m: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Fixed particle count (disables adaptation).
    #[arg(long)]
    particles: Option<usize>,
    #[arg(long, value_enum)]
    init: Option<Init>,
    /// Position spread of `--init coarse`, metres.
    #[arg(long, default_value_t = 2.0)]
    init_std_xy: f64,
    /// Heading spread of `--init coarse`, radians.
    #[arg(long, default_value_t = 2.0)]
    init_std_theta: f64,
    /// Disable motion noise in the filter's prediction step.
    #[arg(long)]
    no_noise: bool,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    est: PathBuf,
    #[arg(long)]
    gt: PathBuf,
    /// Association tolerance in seconds.
    #[arg(long)]
    max_dt: Option<f64>,
    /// RPE frame offset.
    #[arg(long, default_value_t = 1)]
    delta: usize,
    /// Write `ate.json` and `rpe.json` here.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    axis: SweepAxis,
    /// CSV path; defaults to `<out>/sweep.csv`.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[command(flatten)]
    run: RunArgs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match configure_threads().and_then(|_| dispatch(cli.command)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}: {e}", e.name());
            ExitCode::from(if e.is_input_error() { 2 } else { 1 })
        }
    }
}

fn dispatch(command: Command) -> Result<(), Error> {
    match command {
        Command::Gen(a) => gen(a),
        Command::Run(a) => run(a),
        Command::Eval(a) => eval(a),
        Command::Sweep(a) => sweep(a),
    }
}

fn gen(a: GenArgs) -> Result<(), Error> {
    let mut sensor = if a.no_noise {
        SensorTruthConfig::noiseless()
    } else {
        SensorTruthConfig {
            noise: NoiseConfig::default().with_seed(a.seed),
            ..SensorTruthConfig::default()
        }
    };
    sensor.k_beams = a.beams;
    sensor.emit_ranges = !a.no_ranges;
    let world = WorldSpec {
        size: a.size,
        resolution: a.resolution,
        material_assignment: match a.assignment {
            Assignment::Walls => MaterialAssignment::PerWallSegment,
            Assignment::Patches => MaterialAssignment::RandomPatches { seed: a.seed },
        },
        ..WorldSpec::new(a.layout, a.materials, a.seed)
    };
    let spec = GenerateSpec {
        world,
        script: None,
        sensor,
        seed: a.seed,
    };
    let gt = a.gt.unwrap_or_else(|| default_ground_truth_path(&a.log));
    let (_, data) = generate_to_disk(&spec, &a.map, &a.log, &gt)?;
    println!(
        "wrote {} ({} scans), {} and {}",
        a.log.display(),
        data.records.len(),
        gt.display(),
        a.map.display()
    );
    Ok(())
}

fn manifest_from(a: &RunArgs) -> Result<RunManifest, Error> {
    let mut m = match &a.manifest {
        Some(path) => RunManifest::load(path)?,
        None => RunManifest::new(a.map.clone().unwrap_or_default(), a.log.clone().unwrap_or_default(), "out"),
    };
    if let Some(map) = &a.map {
        m.map = map.clone();
    }
    if let Some(log) = &a.log {
        m.log = log.clone();
        m.ground_truth = default_ground_truth_path(log);
    }
    if let Some(gt) = &a.gt {
        m.ground_truth = gt.clone();
    }
    if let Some(out) = &a.out {
        m.output = out.clone();
    }
    if let Some(seed) = a.seed {
        m.seed = seed;
    }
    if let Some(model) = a.model {
        m.sensor.model = model;
    }
    if let Some(kind) = a.metric {
        m.sensor.metric.kind = kind;
    }
    if let Some(eps_m) = a.eps_m {
        m.sensor = m.sensor.with_material_weight(eps_m);
    }
    if let Some(n) = a.particles {
        m.filter = m.filter.with_particles(n);
    }
    match a.init {
        None => {}
        Some(Init::Uniform) => {
            m.init_from_ground_truth = None;
            m.filter.init = InitMode::UniformFreeSpace;
        }
        Some(Init::Gt) => {
            m.init_from_ground_truth = Some(GroundTruthInit {
                std_xy: 0.0,
                std_theta: 0.0,
            })
        }
        Some(Init::Coarse) => {
            m.init_from_ground_truth = Some(GroundTruthInit {
                std_xy: a.init_std_xy,
                std_theta: a.init_std_theta,
            })
        }
    }
    if a.no_noise {
        m.filter = without_motion_noise(m.filter);
    }
    Ok(m)
}

fn run(a: RunArgs) -> Result<(), Error> {
    let m = manifest_from(&a)?;
    let s = run_pipeline(&m)?;
    println!(
        "{} steps in {:.3}s; ATE rmse {:.4} m (aligned), {:.4} m (map frame); outputs in {}",
        s.steps,
        s.seconds,
        s.ate.aligned.rmse,
        s.ate.map_frame.rmse,
        m.output.display()
    );
    Ok(())
}

fn eval(a: EvalArgs) -> Result<(), Error> {
    let est = TrajectoryLog::load_tum(&a.est)?;
    let gt = TrajectoryLog::load_tum(&a.gt)?;
    let cfg = EvalConfig {
        max_dt: a.max_dt,
        rpe_delta: a.delta,
    };
    let (ate, rpe) = evaluate_to_disk(&est, &gt, &cfg, &a.out)?;
    println!("ATE rmse {:.4} m (aligned), {:.4} m (map frame)", ate.aligned.rmse, ate.map_frame.rmse);
    if let Some(r) = rpe {
        println!("RPE rmse {:.4} m, {:.4} rad", r.translational.rmse, r.rotational.rmse);
    }
    Ok(())
}

fn sweep(a: SweepArgs) -> Result<(), Error> {
    let m = manifest_from(&a.run)?;
    let rows = run_sweep(&m, a.axis)?;
    let csv = sweep_to_csv(&rows);
    let path = a.csv.unwrap_or_else(|| m.output.join("sweep.csv"));
    std::fs::write(&path, &csv).map_err(|e| Error::io(&path, e))?;
    print!("{csv}");
    Ok(())
}
