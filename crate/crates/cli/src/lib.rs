//! Batch front end for `hilfer-core`: `solve`, `verify <check>` and `table`
//! read a TOML config and write CSV tables and a TOML report into `--out`.
//!
//! Exit codes: 0 when every requested check passes, 1 for configuration,
//! usage and I/O errors, 2 when a theorem hypothesis (or a resolution or
//! precondition requirement) is not met, 3 when a check ran and failed.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod output;

use clap::{Args, Parser, Subcommand, ValueEnum};
use std::ffi::OsString;
use std::fmt;
use std::path::PathBuf;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_HYPOTHESIS: i32 = 2;
pub const EXIT_FAILED: i32 = 3;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Io(String),
    Core(hilfer_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use hilfer_core::Error as E;
        match self {
            CliError::Config(_) | CliError::Io(_) => EXIT_CONFIG,
            CliError::Core(E::Hypothesis { .. } | E::Resolution { .. } | E::Precondition(_)) => EXIT_HYPOTHESIS,
            CliError::Core(_) => EXIT_CONFIG,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<hilfer_core::Error> for CliError {
    fn from(e: hilfer_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "hilfer", version, about = "Psi-Hilfer fractional functional differential equations: solve and verify")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// TOML run configuration
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory, created if missing
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    pub out: PathBuf,
    /// Overrides the config seed
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Overrides mesh.n
    #[arg(long = "mesh-n", global = true, value_name = "N")]
    pub mesh_n: Option<usize>,
    /// Overrides mesh.grading
    #[arg(long, global = true, value_name = "R")]
    pub grading: Option<f64>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Picard solve of [problem]; writes solution.csv and report.toml
    Solve,
    /// Runs one verification check; writes report.toml
    Verify {
        #[arg(value_enum)]
        check: Check,
    },
    /// Mesh convergence table; writes convergence.csv and report.toml
    Table,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum Check {
    Identity,
    Inversion,
    Caplygin,
    Comparison,
    DataDep,
    Hausdorff,
}

impl Check {
    pub fn name(self) -> &'static str {
        match self {
            Check::Identity => "identity",
            Check::Inversion => "inversion",
            Check::Caplygin => "caplygin",
            Check::Comparison => "comparison",
            Check::DataDep => "data_dep",
            Check::Hausdorff => "hausdorff",
        }
    }
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match commands::execute(&cli) {
        Ok(outcome) => {
            println!("{}", outcome.summary);
            if outcome.passed {
                EXIT_OK
            } else {
                EXIT_FAILED
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
