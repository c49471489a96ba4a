//! `mdlatlrr`: train a latent low-rank projection, decompose grayscale
//! images into detail and base parts, fuse infrared/visible pairs, score
//! the results, and sweep fusion settings for plots.

mod commands;
mod imgio;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mdlatlrr::{DetailNorm, Error};

#[derive(Parser)]
#[command(
    name = "mdlatlrr",
    version,
    about = "Latent low-rank image decomposition and infrared/visible fusion"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Learn a projection matrix from a directory of grayscale images
    Train(TrainArgs),
    /// Split an image into per-level detail images and a base
    Decompose(DecomposeArgs),
    /// Fuse a registered image pair with a trained projection
    Fuse(FuseArgs),
    /// Score fused images against their sources
    Eval(EvalArgs),
    /// Sweep fusion settings over a dataset and report mean metrics
    Bench(BenchArgs),
}

#[derive(Args)]
pub struct TrainArgs {
    /// Directory of grayscale training images (png/pgm)
    #[arg(long)]
    pub data: PathBuf,
    /// Patch side length n; the projection is n^2 x n^2
    #[arg(long, default_value_t = 16)]
    pub patch_size: usize,
    /// Sliding-window stride for pool extraction
    #[arg(long, default_value_t = 1)]
    pub stride: usize,
    /// Detail columns to sample
    #[arg(long, default_value_t = 1000)]
    pub detail: usize,
    /// Smooth columns to sample
    #[arg(long, default_value_t = 1000)]
    pub smooth: usize,
    /// Detail/smooth threshold on the patch deviation score
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
    /// Sparsity weight in the solver objective
    #[arg(long, default_value_t = 0.4)]
    pub lambda: f64,
    /// Seed for pool sampling
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Solver iteration cap
    #[arg(long, default_value_t = 1000)]
    pub max_iters: usize,
    /// Solver stopping tolerance on the constraint residual
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// Output projection file (.mdll)
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct DecomposeArgs {
    /// Input grayscale image
    #[arg(long)]
    pub input: PathBuf,
    /// Trained projection file
    #[arg(long)]
    pub proj: PathBuf,
    /// Decomposition depth
    #[arg(long, default_value_t = 2)]
    pub levels: usize,
    /// Sliding-window stride
    #[arg(long, default_value_t = 1)]
    pub stride: usize,
    /// Output directory for detail_<i>.png and base.png
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Also dump unscaled f64 images next to the exports
    #[arg(long)]
    pub raw: bool,
}

#[derive(Args)]
pub struct FuseArgs {
    /// First source image (infrared by convention)
    #[arg(long)]
    pub a: PathBuf,
    /// Second source image (visible by convention)
    #[arg(long)]
    pub b: PathBuf,
    /// Trained projection file
    #[arg(long)]
    pub proj: PathBuf,
    /// Decomposition depth
    #[arg(long, default_value_t = 2)]
    pub levels: usize,
    /// Sliding-window stride
    #[arg(long, default_value_t = 1)]
    pub stride: usize,
    /// Detail weighting norm
    #[arg(long, value_enum, default_value = "nuclear")]
    pub norm: NormArg,
    /// Output image path (extension selects png/pgm)
    #[arg(long)]
    pub out: PathBuf,
    /// Also dump the unclamped fused image here
    #[arg(long)]
    pub raw: Option<PathBuf>,
}

#[derive(Args)]
pub struct EvalArgs {
    /// First source image (single-triple mode)
    #[arg(long)]
    pub a: Option<PathBuf>,
    /// Second source image (single-triple mode)
    #[arg(long)]
    pub b: Option<PathBuf>,
    /// Fused image to score (single-triple mode)
    #[arg(long)]
    pub fused: Option<PathBuf>,
    /// Batch directory with ir/, vis/, fused/ subdirectories
    #[arg(long)]
    pub dir: Option<PathBuf>,
    /// Emit CSV instead of JSON lines
    #[arg(long)]
    pub csv: bool,
}

#[derive(Args)]
pub struct BenchArgs {
    /// Dataset directory with ir/ and vis/ subdirectories
    #[arg(long)]
    pub data: PathBuf,
    /// Trained projection file
    #[arg(long)]
    pub proj: PathBuf,
    /// Which sweep to run
    #[arg(long, value_enum, default_value = "all")]
    pub sweep: SweepArg,
    /// Emit CSV instead of JSON lines
    #[arg(long)]
    pub csv: bool,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum NormArg {
    Nuclear,
    L1,
}

impl From<NormArg> for DetailNorm {
    fn from(n: NormArg) -> Self {
        match n {
            NormArg::Nuclear => DetailNorm::Nuclear,
            NormArg::L1 => DetailNorm::L1,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
pub enum SweepArg {
    Levels,
    Strides,
    All,
}

/// 2 for bad arguments, 3 for bad input data, 4 for numerical failure.
fn exit_class(err: &Error) -> u8 {
    if err.is_argument_error() {
        2
    } else if err.is_data_error() {
        3
    } else if err.is_numerical_error() {
        4
    } else {
        1
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.cmd {
        Cmd::Train(args) => commands::train(args),
        Cmd::Decompose(args) => commands::decompose(args),
        Cmd::Fuse(args) => commands::fuse(args),
        Cmd::Eval(args) => commands::eval(args),
        Cmd::Bench(args) => commands::bench(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_class(&err))
        }
    }
}
