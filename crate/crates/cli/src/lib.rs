//! Command-line driver for the quasient scans.
//!
//! Each subcommand resolves a [`RunConfig`], runs one scan or check and
//! writes a self-describing CSV or JSON file. Failures print a one-line JSON
//! object on standard error and map to an exit code: 2 for configuration
//! errors, 3 for numerical failures, 4 for size-cap violations and 1 for
//! I/O errors.

pub mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser};

pub use config::{Command, Format, ModeItem, RunConfig};
pub use output::{emit, read_json, JsonDocument, Metadata, OutputRow, Record};

/// Environment variable capping the worker count; 0 or unset means automatic.
pub const THREADS_ENV: &str = "QUASIENT_THREADS";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Numerical(String),
    #[error("{0}")]
    SizeCap(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::SizeCap(_) => 4,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Io(_) => "io",
            CliError::Config(_) => "config",
            CliError::Numerical(_) => "numerical",
            CliError::SizeCap(_) => "size_cap",
        }
    }

    /// `{"error": kind, "exit_code": code, "message": text}`.
    pub fn to_json(&self) -> String {
        serde_json::json!({
            "error": self.kind(),
            "exit_code": self.exit_code(),
            "message": self.to_string(),
        })
        .to_string()
    }
}

impl From<quasient::Error> for CliError {
    fn from(e: quasient::Error) -> Self {
        if e.is_size_cap() {
            CliError::SizeCap(e.to_string())
        } else if e.is_input_error() {
            CliError::Config(e.to_string())
        } else {
            CliError::Numerical(e.to_string())
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "quasient", version, about = "Entanglement of quasiparticle excitations in spin chains")]
#[command(allow_negative_numbers = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

/// Every flag is also a config-file key.
#[derive(Args, Debug, Default)]
struct Flags {
    /// `key = value` file read before the flags.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// xy or tilted-ising.
    #[arg(long, global = true)]
    model: Option<String>,
    #[arg(long, global = true, value_name = "X")]
    gamma: Option<String>,
    #[arg(long, global = true, value_name = "X")]
    h: Option<String>,
    /// Ising coupling of the tilted chain.
    #[arg(long, global = true, value_name = "X")]
    coupling: Option<String>,
    #[arg(long, global = true, value_name = "X")]
    hz: Option<String>,
    #[arg(long, global = true, value_name = "X")]
    hx: Option<String>,
    /// open or periodic.
    #[arg(long, global = true)]
    boundary: Option<String>,
    /// Comma-separated, strictly increasing chain lengths.
    #[arg(long, global = true, value_name = "N,..")]
    sizes: Option<String>,
    /// A single chain length.
    #[arg(long, global = true, value_name = "N")]
    n: Option<String>,
    /// all, none, or a list of ground, k, mid, mid+-k, momentum:q.
    #[arg(long, global = true, value_name = "LIST")]
    modes: Option<String>,
    /// Three-particle sweep indices, or all.
    #[arg(long, global = true, value_name = "LIST")]
    sweep: Option<String>,
    /// ED states per chain length.
    #[arg(long, global = true, value_name = "M")]
    states: Option<String>,
    #[arg(long, global = true, value_name = "D")]
    bond_dim: Option<String>,
    #[arg(long, global = true, value_name = "K")]
    draws: Option<String>,
    /// Momentum of the MPS excitation.
    #[arg(long, global = true, value_name = "X")]
    kappa: Option<String>,
    /// Output file; standard output when absent or `-`.
    #[arg(long, global = true, value_name = "PATH")]
    output: Option<String>,
    /// csv or json.
    #[arg(long, global = true)]
    format: Option<String>,
    #[arg(long, global = true)]
    seed: Option<String>,
    /// Classifier threshold in units of log 2.
    #[arg(long, global = true, value_name = "X")]
    threshold: Option<String>,
    /// Pass bound of ed-compare and mps-check.
    #[arg(long, global = true, value_name = "X")]
    tolerance: Option<String>,
    #[arg(long, global = true, value_name = "X")]
    lanczos_tol: Option<String>,
    /// Largest chain handed to exact diagonalization.
    #[arg(long, global = true, value_name = "N")]
    max_sites: Option<String>,
}

impl Flags {
    fn pairs(&self) -> Vec<(String, String)> {
        let fields = [
            ("model", &self.model),
            ("gamma", &self.gamma),
            ("h", &self.h),
            ("coupling", &self.coupling),
            ("hz", &self.hz),
            ("hx", &self.hx),
            ("boundary", &self.boundary),
            ("sizes", &self.sizes),
            ("n", &self.n),
            ("modes", &self.modes),
            ("sweep", &self.sweep),
            ("states", &self.states),
            ("bond-dim", &self.bond_dim),
            ("draws", &self.draws),
            ("kappa", &self.kappa),
            ("output", &self.output),
            ("format", &self.format),
            ("seed", &self.seed),
            ("threshold", &self.threshold),
            ("tolerance", &self.tolerance),
            ("lanczos-tol", &self.lanczos_tol),
            ("max-sites", &self.max_sites),
        ];
        fields
            .into_iter()
            .filter_map(|(k, v)| v.as_ref().map(|v| (k.to_string(), v.clone())))
            .collect()
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .map_err(|_| CliError::Config(format!("{THREADS_ENV} must be a nonnegative integer, got '{raw}'")))?;
    // a second call in the same process finds the pool already built
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    Ok(())
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    configure_threads()?;
    let cfg = RunConfig::resolve(cli.command, cli.flags.config.as_deref(), &cli.flags.pairs())?;
    commands::dispatch(&cfg)
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return 0;
        }
        Err(e) => return fail(&CliError::Config(e.render().to_string().trim().to_string())),
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => fail(&e),
    }
}

fn fail(e: &CliError) -> i32 {
    eprintln!("{}", e.to_json());
    e.exit_code()
}
