//! `edgeframe`: degrade, restore and evaluate grayscale images with the
//! edge-driven framelet model, plus filter and convergence diagnostics.

mod commands;
mod config;
mod exit;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use edgeframe_core::{BankKind, Model, Task};

#[derive(Parser)]
#[command(
    name = "edgeframe",
    version,
    about = "Edge-driven wavelet frame image restoration"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Apply a degradation (mask or blur) and additive Gaussian noise.
    Degrade(DegradeArgs),
    /// Restore an image with the alternating split Bregman solver.
    Restore(Box<RestoreArgs>),
    /// Print the PSNR of a test image against a reference.
    Eval(EvalArgs),
    /// Filter bank diagnostics.
    Filters {
        #[command(subcommand)]
        action: FiltersAction,
    },
    /// Compare discrete energies with the continuous energy over resolutions.
    ConvergenceTest(ConvergenceArgs),
}

#[derive(Clone, Copy, ValueEnum)]
pub enum OpKind {
    Identity,
    Inpaint,
    Blur,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum BankArg {
    Linear,
    Cubic,
}

impl From<BankArg> for BankKind {
    fn from(b: BankArg) -> Self {
        match b {
            BankArg::Linear => BankKind::Linear,
            BankArg::Cubic => BankKind::Cubic,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
pub enum TaskArg {
    Inpaint,
    Deblur,
    Denoise,
}

impl From<TaskArg> for Task {
    fn from(t: TaskArg) -> Self {
        match t {
            TaskArg::Inpaint => Task::Inpaint,
            TaskArg::Deblur => Task::Deblur,
            TaskArg::Denoise => Task::Denoise,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
pub enum ModelArg {
    EdgeDriven,
    L1Baseline,
}

impl From<ModelArg> for Model {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::EdgeDriven => Model::EdgeDriven,
            ModelArg::L1Baseline => Model::L1Baseline,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
pub enum TestFn {
    Sine,
    Poly,
    Constant,
}

#[derive(Args)]
pub struct DegradeArgs {
    #[arg(long, value_enum, default_value = "identity")]
    pub op: OpKind,
    /// Fraction of pixels removed by a random inpainting mask.
    #[arg(long, default_value_t = 0.2)]
    pub mask_fraction: f64,
    /// Overlay image; pixels >= 128 are marked missing. Overrides --mask-fraction.
    #[arg(long)]
    pub mask_image: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    pub hsize: usize,
    #[arg(long, default_value_t = 15.0)]
    pub sigma_blur: f64,
    #[arg(long, default_value_t = 4.0)]
    pub noise_sigma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Where to write the inpainting mask (default: `<output stem>_mask.<ext>`).
    #[arg(long)]
    pub mask_out: Option<PathBuf>,
    pub input: PathBuf,
    pub output: PathBuf,
}

#[derive(Args, Default)]
pub struct RestoreArgs {
    /// TOML job file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// One of inpaint-default, deblur-default, denoise-default.
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long, value_enum)]
    pub model: Option<ModelArg>,
    #[arg(long, value_enum)]
    pub task: Option<TaskArg>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub mu1: Option<f64>,
    #[arg(long)]
    pub mu2: Option<f64>,
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long)]
    pub outer: Option<usize>,
    #[arg(long)]
    pub inner_u: Option<usize>,
    #[arg(long)]
    pub inner_v: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub edge_t: Option<f64>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub levels: Option<usize>,
    #[arg(long)]
    pub levels_p: Option<usize>,
    #[arg(long)]
    pub levels_dd: Option<usize>,
    /// Inpainting mask; nonzero pixels are observed.
    #[arg(long)]
    pub mask: Option<PathBuf>,
    #[arg(long)]
    pub kernel_hsize: Option<usize>,
    #[arg(long)]
    pub kernel_sigma: Option<f64>,
    /// Ground truth; enables the PSNR columns of the trace.
    #[arg(long = "ref")]
    pub reference: Option<PathBuf>,
    /// Writes `<prefix>_l<level>.pgm` with v scaled to [0, 255].
    #[arg(long)]
    pub dump_v: Option<PathBuf>,
    /// Per-round CSV: round, energy, psnr.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[arg(long)]
    pub quiet: bool,
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
}

#[derive(Args)]
pub struct EvalArgs {
    #[arg(long = "ref")]
    pub reference: PathBuf,
    #[arg(long)]
    pub test: PathBuf,
    /// CSV file to append `ref,test,psnr` to.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum FiltersAction {
    /// Filter taps and unitary extension principle deviations as CSV.
    Dump(DumpArgs),
}

#[derive(Args)]
pub struct DumpArgs {
    #[arg(long, value_enum, default_value = "linear")]
    pub bank: BankArg,
    /// Number of frequencies sampled on [-π, π).
    #[arg(long, default_value_t = 64)]
    pub n_freq: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct ConvergenceArgs {
    #[arg(long, value_enum, default_value = "sine")]
    pub test_fn: TestFn,
    #[arg(long, value_delimiter = ',', default_value = "4,5,6,7")]
    pub n_list: Vec<u32>,
    #[arg(long, value_enum, default_value = "linear")]
    pub bank: BankArg,
    /// Sampling depth is max(quad_resolution - n, min_depth).
    #[arg(long, default_value_t = 12)]
    pub quad_resolution: u32,
    #[arg(long, default_value_t = 4)]
    pub min_depth: u32,
    #[arg(long, default_value_t = 8)]
    pub gauss_order: usize,
    /// Use the masking operator 1 on [a,b]x[c,d] instead of the identity.
    #[arg(long, value_delimiter = ',', num_args = 4, value_names = ["A", "B", "C", "D"])]
    pub indicator: Option<Vec<f64>>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn init_threads() -> anyhow::Result<()> {
    let Ok(raw) = std::env::var("FRAMELET_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        exit::usage(format!(
            "FRAMELET_THREADS must be a positive integer, got '{raw}'"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()?;
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    init_threads()?;
    match cli.command {
        Command::Degrade(a) => commands::degrade(&a),
        Command::Restore(a) => commands::restore(&a),
        Command::Eval(a) => commands::eval(&a),
        Command::Filters {
            action: FiltersAction::Dump(a),
        } => commands::filters_dump(&a),
        Command::ConvergenceTest(a) => commands::convergence_test(&a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", format!("{e:#}").replace('\n', " "));
            ExitCode::from(exit::code_for(&e))
        }
    }
}
