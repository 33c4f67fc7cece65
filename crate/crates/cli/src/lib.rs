//! `rase` command-line front end: simulate shot files, analyze them into CSV
//! tables, evaluate the analytic inseparability curve and render figures.
//!
//! Exit codes are a stable contract: 0 success, 1 usage or configuration,
//! 2 malformed data, 3 numeric, calibration or estimation failure.

use std::ffi::OsString;
use std::fmt;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{ArgGroup, Args, Parser, Subcommand};
use rase_core::Error;

mod commands;
pub mod report;
pub mod tables;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_FORMAT: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "RASE_THREADS";

#[derive(Debug, Parser)]
#[command(name = "rase", version, about = "Rephased ASE simulation and analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Synthesize a run and write it as a RASEHET1 shot file.
    Simulate(SimulateArgs),
    /// Analyze a shot file into CSV tables.
    Analyze(AnalyzeArgs),
    /// Analytic S(b) for the ideal two-mode model.
    Theory(TheoryArgs),
    /// Render SVG figures from the CSV tables of `analyze`.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("source").required(true).args(["config", "preset"])))]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Use a shipped preset instead of a config file.
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides the seed of the configuration.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Also export every sample as CSV (small debug runs only).
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("source").required(true).args(["config", "preset"])))]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub shots: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Also write per-mode covariance estimates.
    #[arg(long)]
    pub covariance: bool,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("efficiency").required(true).args(["eta", "target_dip"])))]
pub struct TheoryArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub alpha_l: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub eta: Option<f64>,
    /// Calibrate eta so the minimum of S(b) equals this value.
    #[arg(long, allow_negative_numbers = true)]
    pub target_dip: Option<f64>,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub excess: f64,
    #[arg(long, default_value_t = 0.01)]
    pub b_step: f64,
    /// CSV destination; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub dir: PathBuf,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(Error),
    /// A CSV table that exists but cannot be understood.
    Table(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Table(_) => EXIT_FORMAT,
            CliError::Core(e) => core_exit_code(e),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Table(m) => f.write_str(m),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

/// Exit code for a pipeline error.
pub fn core_exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Domain { .. } | Error::Io { .. } | Error::SentinelContamination { .. } => EXIT_USAGE,
        Error::Format { .. } | Error::Truncated { .. } => EXIT_FORMAT,
        Error::InvalidState { .. }
        | Error::Asymmetric { .. }
        | Error::Convention { .. }
        | Error::Calibration { .. }
        | Error::Factorization(_)
        | Error::Synthesis(_)
        | Error::Normalization(_)
        | Error::Estimation(_)
        | Error::Fit(_) => EXIT_NUMERIC,
    }
}

fn thread_pool() -> Result<rayon::ThreadPool, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got '{v}'")))?;
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start worker threads: {e}")))
}

/// Parse `args` (program name first), run the command and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
        }
    };
    let result = thread_pool().and_then(|pool| {
        pool.install(|| match &cli.command {
            Command::Simulate(a) => commands::simulate(a),
            Command::Analyze(a) => commands::analyze(a),
            Command::Theory(a) => commands::theory(a),
            Command::Report(a) => commands::report(a),
        })
    });
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("rase: {e}");
            e.exit_code()
        }
    }
}
