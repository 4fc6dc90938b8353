//! The `sparsefill` command line.
//!
//! Every command that writes files also writes a [`RunManifest`] next to
//! its primary output; `sparsefill replay <manifest>` reruns the recorded
//! arguments and checks the outputs hash to the recorded values.
//!
//! Exit codes: 0 success, 2 configuration or usage error, 3 I/O or file
//! format error, 4 solver failure, 5 some experiment runs failed, 6 replay
//! produced different outputs.

mod commands;
mod experiment;
mod manifest;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use manifest::{default_manifest_path, file_sha256, FileRecord, RunManifest, SolveSummary};

use crate::basis::BasisGeneratorConfig;
use crate::completion::CompletionConfig;
use crate::error::Error;
use crate::numcore::{IrlsConfig, NumError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_SOLVER: i32 = 4;
pub const EXIT_RUNS_FAILED: i32 = 5;
pub const EXIT_REPLAY_MISMATCH: i32 = 6;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Io(String),
    Solver(String),
    RunsFailed(usize),
    ReplayMismatch(Vec<String>),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Io(_) => EXIT_IO,
            CliError::Solver(_) => EXIT_SOLVER,
            CliError::RunsFailed(_) => EXIT_RUNS_FAILED,
            CliError::ReplayMismatch(_) => EXIT_REPLAY_MISMATCH,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Solver(m) => write!(f, "solver failure: {m}"),
            CliError::RunsFailed(n) => write!(f, "{n} run(s) failed"),
            CliError::ReplayMismatch(files) => {
                write!(f, "replay differs for: {}", files.join(", "))
            }
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::DimensionMismatch(_) | Error::InvalidArgument(_) | Error::OutOfBounds(_) => {
                CliError::Config(msg)
            }
            Error::Solver(NumError::InvalidConfig(_)) => CliError::Config(msg),
            Error::Solver(_) => CliError::Solver(msg),
            Error::Format(_) | Error::Io { .. } => CliError::Io(msg),
        }
    }
}

pub type CliResult<T = ()> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "sparsefill",
    version,
    about = "Depth completion from sparse samples and a guide image"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Complete a sparse depth set into a dense map.
    Complete(commands::CompleteArgs),
    /// Compare a predicted depth map against ground truth.
    Evaluate(commands::EvaluateArgs),
    /// Run a perturbation sweep over one sample.
    Experiment(experiment::ExperimentArgs),
    /// Complete at a higher output resolution.
    Upsample(commands::UpsampleArgs),
    /// Write basis similarity maps around anchor pixels.
    Kernel(commands::KernelArgs),
    /// Write a procedural sample (image.png, depth.sfd, optional sparse.txt).
    Synth(commands::SynthArgs),
    /// Rerun a command from its manifest and verify the outputs.
    Replay(commands::ReplayArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    #[value(alias = "text")]
    Kv,
    Json,
}

/// Pipeline settings shared by the completion commands.
#[derive(Debug, Clone, Args)]
pub struct ConfigArgs {
    /// Number of basis vectors N.
    #[arg(long, default_value_t = 128)]
    pub basis_dim: usize,
    /// Positional encoding levels E (4E channels).
    #[arg(long, default_value_t = 5)]
    pub encode_levels: usize,
    /// Pyramid pooling factors.
    #[arg(long, value_delimiter = ',', default_values_t = [2usize, 4, 8, 16])]
    pub scales: Vec<usize>,
    /// Seed of the basis generator.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 64)]
    pub hidden_dim: usize,
    /// Refine the solve with iteratively reweighted least squares.
    #[arg(long)]
    pub irls: bool,
    #[arg(long, default_value_t = 1e-4)]
    pub irls_clamp: f64,
    #[arg(long, default_value_t = 20)]
    pub irls_max_iter: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub irls_tol: f64,
    /// Singular values below rank-tol times the largest are dropped.
    #[arg(long, default_value_t = 1e-10)]
    pub rank_tol: f64,
    /// Precomputed feature map (.sff) used instead of the image pyramid.
    #[arg(long)]
    pub features: Option<PathBuf>,
}

impl ConfigArgs {
    pub fn to_config(&self) -> CliResult<CompletionConfig> {
        let cfg = CompletionConfig {
            generator: BasisGeneratorConfig {
                basis_dim: self.basis_dim,
                seed: self.seed,
                hidden_dim: self.hidden_dim,
                pyramid_scales: self.scales.clone(),
            },
            encode_levels: self.encode_levels,
            use_irls: self.irls,
            irls: IrlsConfig {
                residual_clamp: self.irls_clamp,
                max_iterations: self.irls_max_iter,
                stop_tolerance: self.irls_tol,
            },
            rank_tolerance: self.rank_tol,
        };
        cfg.generator.validate()?;
        cfg.irls.validate().map_err(Error::from)?;
        if cfg.encode_levels == 0 {
            return Err(CliError::Config("encode-levels must be at least 1".into()));
        }
        if cfg.generator.pyramid_scales.contains(&0) {
            return Err(CliError::Config("scales must be positive".into()));
        }
        if !(cfg.rank_tolerance >= 0.0 && cfg.rank_tolerance < 1.0) {
            return Err(CliError::Config(format!(
                "rank-tol must be in [0, 1), got {}",
                cfg.rank_tolerance
            )));
        }
        Ok(cfg)
    }
}

/// Parses and runs; returns the process exit code. Messages go to stderr,
/// reports to stdout.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    let recorded: Vec<String> = argv
        .iter()
        .skip(1)
        .map(|a| a.to_string_lossy().into_owned())
        .collect();
    match run(cli.command, &recorded) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("sparsefill: {e}");
            e.exit_code()
        }
    }
}

/// Runs one parsed command. `recorded` is stored in the manifest.
pub fn run(command: Command, recorded: &[String]) -> CliResult {
    match command {
        Command::Complete(a) => commands::complete(&a, recorded),
        Command::Evaluate(a) => commands::evaluate(&a, recorded),
        Command::Experiment(a) => experiment::run(&a, recorded),
        Command::Upsample(a) => commands::upsample(&a, recorded),
        Command::Kernel(a) => commands::kernel(&a, recorded),
        Command::Synth(a) => commands::synth(&a, recorded),
        Command::Replay(a) => commands::replay(&a),
    }
}
