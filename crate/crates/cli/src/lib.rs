//! `shadowforge` command-line front end.
//!
//! Exit codes: 0 success, 2 user/input error, 3 environment or I/O error.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

mod augment;
mod config;
mod evaluate;
mod preview;
mod report;

pub use config::SEED_ENV;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io(_) => 3,
        }
    }

    pub(crate) fn io(context: impl std::fmt::Display, err: impl std::fmt::Display) -> Self {
        CliError::Io(format!("{context}: {err}"))
    }
}

#[derive(Debug, Parser)]
#[command(name = "shadowforge", version, about = "Shadow augmentation and robustness evaluation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Augment a class-folder dataset into OUTPUT with a preset or policy file
    Augment(AugmentArgs),
    /// Apply one shadow to an image and write it plus an original|augmented comparison
    Preview(PreviewArgs),
    /// Top-1 accuracy of a predictions CSV, optionally grouped and against a baseline
    Evaluate(EvaluateArgs),
    /// Breakdown points of an accuracy-vs-pose curve
    Breakdown(BreakdownArgs),
    /// Average several breakdown result files
    Average(AverageArgs),
}

#[derive(Debug, Args)]
pub struct AugmentArgs {
    pub input: PathBuf,
    pub output: PathBuf,
    /// One of: paper-shadow, baseline, brightness50, brightness50-p50, jitter-025-1
    #[arg(long, conflicts_with = "policy")]
    pub preset: Option<String>,
    /// Policy JSON file
    #[arg(long)]
    pub policy: Option<PathBuf>,
    /// Master seed (default: config file, policy file, then $SHADOWFORGE_SEED, then 0)
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; does not affect output
    #[arg(long)]
    pub workers: Option<usize>,
    /// JSON file with default values for the options above
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PreviewArgs {
    pub image: PathBuf,
    /// Stock polygon 1-4
    #[arg(long, conflicts_with_all = ["spec", "pole"])]
    pub polygon: Option<u8>,
    /// Shadow factor used with --polygon
    #[arg(long)]
    pub shadow_factor: Option<f64>,
    /// Shadow spec JSON file
    #[arg(long, conflicts_with = "pole")]
    pub spec: Option<PathBuf>,
    /// Pole occluder JSON file
    #[arg(long)]
    pub pole: Option<PathBuf>,
    /// Augmented PNG; the comparison goes next to it as <stem>-compare.png
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    pub predictions: PathBuf,
    /// Condition column (or "class") to group by
    #[arg(long)]
    pub group_by: Option<String>,
    /// Baseline predictions CSV for a percent-change comparison
    #[arg(long)]
    pub baseline: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BreakdownArgs {
    /// Predictions CSV with angle_deg, or a curve CSV (angle_deg,accuracy)
    pub input: PathBuf,
    #[arg(long)]
    pub floor: Option<f64>,
    #[arg(long)]
    pub drop: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the accuracy curve as SVG
    #[arg(long)]
    pub svg: Option<PathBuf>,
    /// Also write the per-angle curve CSV
    #[arg(long)]
    pub curve_out: Option<PathBuf>,
    #[arg(long)]
    pub title: Option<String>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AverageArgs {
    /// Breakdown result JSON files
    #[arg(required = true)]
    pub results: Vec<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parse `args` (including the program name) and run, writing human
/// readable output to `stdout`.
pub fn run<I, T>(args: I, stdout: &mut dyn Write) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help / --version
            let _ = write!(stdout, "{e}");
            return Ok(());
        }
        Err(e) => return Err(CliError::Usage(e.render().to_string())),
    };
    match cli.command {
        Command::Augment(a) => augment::run(a, stdout),
        Command::Preview(a) => preview::run(a, stdout),
        Command::Evaluate(a) => evaluate::run(a, stdout),
        Command::Breakdown(a) => report::run_breakdown(a, stdout),
        Command::Average(a) => report::run_average(a, stdout),
    }
}
