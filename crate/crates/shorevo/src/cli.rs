//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 estimation
//! failure.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::info;
use shorevo_core::pipeline::{self, PipelineError};
use shorevo_core::sim;
use thiserror::Error;

use crate::compare::{self, ErrorRow, Stats, ERRORS_HEADER};
use crate::config::{self, ConfigFile, MotionSpec, NoiseSpec, SceneSpec, SimulationSpec};
use crate::error::LoadError;
use crate::io;
use crate::plot;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_ESTIMATION: i32 = 3;

pub const SIMULATION: &str = "simulation.json";
pub const ERRORS: &str = "errors.csv";
pub const STATS: &str = "stats.json";
pub const OVERLAY: &str = "overlay.svg";
pub const ERROR_VS_DISTANCE: &str = "error_vs_distance.svg";
pub const HISTOGRAM: &str = "histogram.svg";

#[derive(Debug, Parser)]
#[command(name = "shorevo", version, about = "Structure-less IMU-aided monocular visual odometry")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset with ground truth.
    Simulate(SimulateArgs),
    /// Estimate the trajectory of a dataset.
    Run(RunArgs),
    /// Align a trajectory to a reference and measure the position error.
    Eval(EvalArgs),
    /// Draw the plots of an `eval` output directory.
    Plot(PlotArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Scene parameters: inline JSON or a JSON file.
    #[arg(long)]
    pub scene: Option<String>,
    /// Motion parameters: inline JSON or a JSON file.
    #[arg(long)]
    pub motion: Option<String>,
    /// Noise parameters: inline JSON or a JSON file.
    #[arg(long)]
    pub noise: Option<String>,
    /// Seed for both the scene and the noise (overrides files and SHOREVO_SEED).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Run length in seconds (overrides the motion parameters).
    #[arg(long)]
    pub duration: Option<f64>,
    /// Zero every noise source.
    #[arg(long)]
    pub noise_free: bool,
    /// Output dataset directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Dataset directory.
    #[arg(long)]
    pub dataset: PathBuf,
    /// Trajectory CSV to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Per-frame diagnostics, one JSON object per line.
    #[arg(long)]
    pub diag: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Reference positions: gps.csv, ground_truth.csv or a trajectory.
    #[arg(long)]
    pub gt: PathBuf,
    /// Estimated trajectory.
    #[arg(long)]
    pub vo: PathBuf,
    /// Directory for errors.csv and stats.json.
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Number of comparison samples.
    #[arg(long, default_value_t = shorevo_core::eval::DEFAULT_SAMPLES)]
    pub samples: usize,
    /// Histogram bins.
    #[arg(long, default_value_t = shorevo_core::eval::DEFAULT_BINS)]
    pub bins: usize,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    /// Directory written by `eval`.
    #[arg(long)]
    pub eval_dir: PathBuf,
    /// Where to put the SVG files; defaults to the eval directory.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Load(#[from] LoadError),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Estimation(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Load(_) | CliError::Data(_) => EXIT_DATA,
            CliError::Estimation(_) => EXIT_ESTIMATION,
        }
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::TrackingLost { .. } | PipelineError::NoConsensus { .. } | PipelineError::ZeroSpeed(_) => {
                CliError::Estimation(e.to_string())
            }
            _ => CliError::Data(e.to_string()),
        }
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// exit code. Messages go to standard error.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(command: &Command) -> Result<(), CliError> {
    match command {
        Command::Simulate(a) => simulate(a),
        Command::Run(a) => run(a),
        Command::Eval(a) => eval(a),
        Command::Plot(a) => plot(a),
    }
}

/// Inline JSON when the argument starts with `{`, a file path otherwise.
fn json_arg<T: serde::de::DeserializeOwned + Default>(arg: Option<&str>, name: &str) -> Result<T, CliError> {
    match arg {
        None => Ok(T::default()),
        Some(s) if s.trim_start().starts_with('{') => Ok(config::parse_json(s, Path::new(&format!("--{name}")))?),
        Some(path) => Ok(config::read_json(Path::new(path))?),
    }
}

fn simulate(a: &SimulateArgs) -> Result<(), CliError> {
    let mut spec = SimulationSpec {
        scene: json_arg::<SceneSpec>(a.scene.as_deref(), "scene")?,
        motion: json_arg::<MotionSpec>(a.motion.as_deref(), "motion")?,
        noise: json_arg::<NoiseSpec>(a.noise.as_deref(), "noise")?,
    };
    if a.noise_free {
        spec.noise = NoiseSpec { seed: spec.noise.seed, ..NoiseSpec::none() };
    }
    if let Some(seed) = a.seed.or(config::seed_override()?) {
        spec.scene.seed = seed;
        spec.noise.seed = seed;
    }
    if let Some(d) = a.duration {
        spec.motion.duration = d;
    }
    let motion = spec.motion.to_params().map_err(CliError::Usage)?;
    let file = ConfigFile::default();
    let k = file.intrinsics.into();
    let out = sim::generate(&spec.scene.to_params(), &motion, &spec.noise.to_params(), &k)
        .map_err(|e| CliError::Usage(format!("simulation parameters: {e}")))?;
    let config = ConfigFile { eval: file.eval, ..ConfigFile::from_pipeline(&out.config) };
    io::write_dataset(&a.out, &out.dataset, &config, Some(&out.truth.poses))?;
    io::write_json(&a.out.join(SIMULATION), &spec)?;
    info!(
        "wrote {} frames, {} track rows, {} gyro samples, {} GPS fixes to {}",
        out.dataset.frames.len(),
        out.dataset.observations.len(),
        out.dataset.imu.len(),
        out.dataset.gps.len(),
        a.out.display()
    );
    Ok(())
}

fn run(a: &RunArgs) -> Result<(), CliError> {
    let loaded = io::load_dataset(&a.dataset)?;
    let output = pipeline::run(&loaded.dataset, &loaded.config)?;
    io::write_trajectory(&a.out, &output.trajectory, &loaded.dataset.frames)?;
    if let Some(diag) = &a.diag {
        io::write_diagnostics(diag, &output.diagnostics)?;
    }
    info!("estimated {} poses, path length {:.3} m", output.trajectory.len(), output.trajectory.length());
    match output.failure {
        None => Ok(()),
        Some(e) => Err(CliError::Estimation(format!(
            "{e}; wrote the {} poses estimated before it",
            output.trajectory.len()
        ))),
    }
}

fn eval(a: &EvalArgs) -> Result<(), CliError> {
    if a.samples < 4 || a.bins == 0 {
        return Err(CliError::Usage("--samples must be at least 4 and --bins at least 1".into()));
    }
    let reference = io::read_planar(&a.gt)?;
    let estimate = io::read_planar(&a.vo)?;
    let c = compare::compare(&reference, &estimate, a.samples, a.bins).map_err(|e| CliError::Data(e.to_string()))?;
    fs::create_dir_all(&a.out_dir).map_err(|e| LoadError::io(&a.out_dir, e))?;
    let path = a.out_dir.join(ERRORS);
    let mut w = csv::Writer::from_path(&path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let write_err = |e: csv::Error| CliError::Data(format!("{}: {e}", path.display()));
    w.write_record(ERRORS_HEADER).map_err(write_err)?;
    for r in c.rows() {
        let fields = [r.u, r.distance_m, r.error_m, r.ref_east_m, r.ref_north_m, r.vo_east_m, r.vo_north_m];
        w.write_record(fields.iter().map(|x| io::num(*x))).map_err(write_err)?;
    }
    w.flush().map_err(|e| LoadError::io(&path, e))?;
    let stats = Stats::new(&c);
    io::write_json(&a.out_dir.join(STATS), &stats)?;
    println!("max {:.3} m, mean {:.3} m, rmse {:.3} m over {:.1} m", stats.max, stats.mean, stats.rmse, stats.reference_length_m);
    Ok(())
}

fn plot(a: &PlotArgs) -> Result<(), CliError> {
    let stats: Stats = config::read_json(&a.eval_dir.join(STATS))?;
    let path = a.eval_dir.join(ERRORS);
    let mut reader = csv::Reader::from_path(&path).map_err(|e| LoadError::io(&path, std::io::Error::other(e)))?;
    let mut rows = Vec::new();
    for r in reader.deserialize::<ErrorRow>() {
        rows.push(r.map_err(|e| {
            LoadError::parse(&path, e.position().map_or(0, |p| p.line()), e.to_string())
        })?);
    }
    let out = a.out_dir.as_ref().unwrap_or(&a.eval_dir);
    fs::create_dir_all(out).map_err(|e| LoadError::io(out, e))?;
    let reference: Vec<(f64, f64)> = rows.iter().map(|r| (r.ref_east_m, r.ref_north_m)).collect();
    let estimate: Vec<(f64, f64)> = rows.iter().map(|r| (r.vo_east_m, r.vo_north_m)).collect();
    let by_distance: Vec<(f64, f64)> = rows.iter().map(|r| (r.distance_m, r.error_m)).collect();
    let write = |name: &str, svg: String| {
        let p = out.join(name);
        fs::write(&p, svg).map_err(|e| LoadError::io(&p, e))
    };
    write(OVERLAY, plot::overlay(&reference, &estimate))?;
    write(ERROR_VS_DISTANCE, plot::error_vs_distance(&by_distance))?;
    write(HISTOGRAM, plot::histogram(&stats.histogram.edges, &stats.histogram.counts))?;
    Ok(())
}
