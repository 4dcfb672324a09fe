use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use radloc::scan::DEFAULT_THRESHOLD;

/// Monte Carlo localization on point maps from range scans.
#[derive(Debug, Parser)]
#[command(name = "radloc", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convert a PGM range image to a CSV point cloud.
    Convert(ConvertArgs),
    /// Run the particle filter described by a config file.
    Localize { config: PathBuf },
    /// Score an estimated trajectory against ground truth.
    Eval(EvalArgs),
    /// Generate a synthetic corridor world, trajectory and scans.
    Simulate(SimulateArgs),
    /// Nearest-neighbour distance histogram between two clouds.
    Similarity(SimilarityArgs),
    /// Align two CSV clouds.
    Icp(IcpArgs),
}

#[derive(Debug, Args)]
pub struct ConvertArgs {
    #[arg(long)]
    pub image: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Meters per pixel; overrides the value stored in the image header.
    #[arg(long)]
    pub resolution: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    pub threshold: u8,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub est: PathBuf,
    #[arg(long)]
    pub gt: PathBuf,
    /// Where report.txt, report.csv and plot.svg go.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long, default_value_t = radloc::eval::DEFAULT_MAX_DT)]
    pub max_dt: f64,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub out: PathBuf,
    /// Seeds scan degradation and the particle filter of the written config.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub world_seed: u64,
    #[arg(long, default_value_t = 500)]
    pub steps: usize,
    #[arg(long, default_value_t = 0.25)]
    pub dt: f64,
    #[arg(long, default_value_t = 1.0)]
    pub laps: f64,
    #[arg(long, default_value_t = 30.0)]
    pub max_range: f64,
    #[arg(long, default_value_t = 0.5)]
    pub angular_step_deg: f64,
    #[arg(long, default_value_t = 1.0)]
    pub keep: f64,
    #[arg(long, default_value_t = 0.0)]
    pub jitter: f64,
    #[arg(long, default_value_t = 0.0)]
    pub ghosts: f64,
    #[arg(long, default_value_t = 500)]
    pub particles: usize,
}

#[derive(Debug, Args)]
pub struct SimilarityArgs {
    #[arg(long)]
    pub fake: PathBuf,
    #[arg(long)]
    pub real: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0.25)]
    pub bin_step: f64,
    #[arg(long, default_value_t = 5.0)]
    pub bin_max: f64,
}

#[derive(Debug, Args)]
pub struct IcpArgs {
    #[arg(long)]
    pub source: PathBuf,
    #[arg(long)]
    pub target: PathBuf,
    /// Initial guess `x,y,yaw`.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub init: Option<Vec<f64>>,
    /// Whole-map registration with wide gates; reports the transform
    /// taking source coordinates into the target frame.
    #[arg(long)]
    pub session: bool,
}
