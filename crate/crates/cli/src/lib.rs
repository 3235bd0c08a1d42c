//! Argument parsing and dispatch for the `prevalence` binary.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 when a computation or
//! file operation fails (including a fit that did not converge).

mod commands;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::builder::RangedU64ValueParser;
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use prevalence::{Branch, FamilyTag};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_COMPUTE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "prevalence",
    version,
    about = "Minimum-variance prevalence estimation",
    arg_required_else_help = true
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Normalize training data and fit negative and positive models.
    Fit(FitArgs),
    /// Solve for the level set with a given Q-measure on one branch.
    Bathtub(BathtubArgs),
    /// Find the variance-minimizing target measure and its domain.
    Optimize(OptimizeArgs),
    /// Estimate the prevalence of a test sample.
    Estimate(EstimateArgs),
    /// Run a Monte Carlo validation scenario.
    Simulate(SimulateArgs),
    /// Write plot-ready CSV data for the model and variance curves.
    Figures(FiguresArgs),
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// JSON model of the positive-class density P.
    #[arg(long = "pos-model", value_name = "JSON")]
    pub pos_model: PathBuf,
    /// JSON model of the negative-class density N.
    #[arg(long = "neg-model", value_name = "JSON")]
    pub neg_model: PathBuf,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Negative training measurements, one per row.
    #[arg(long = "neg-csv", value_name = "CSV")]
    pub neg_csv: PathBuf,
    /// Positive training measurements, one per row.
    #[arg(long = "pos-csv", value_name = "CSV")]
    pub pos_csv: PathBuf,
    /// Model families as NEGATIVE,POSITIVE.
    #[arg(long, value_name = "NEG,POS", default_value = "burr-truncated,beta", value_parser = parse_families)]
    pub families: (FamilyTag, FamilyTag),
    /// Offset added to every raw value before scaling.
    #[arg(long, default_value_t = prevalence::mle::DEFAULT_EPSILON, value_parser = nonnegative)]
    pub epsilon: f64,
    /// Seed for the multi-start design.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of optimizer starts per fit.
    #[arg(long, default_value_t = prevalence::mle::DEFAULT_STARTS, value_parser = RangedU64ValueParser::<usize>::new().range(1..))]
    pub starts: usize,
    /// Output directory for model and fit-metadata JSON files.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BathtubArgs {
    #[command(flatten)]
    pub models: ModelArgs,
    /// Prevalence of the mixture.
    #[arg(long, value_parser = open_unit)]
    pub q: f64,
    /// Target Q-measure of the domain.
    #[arg(long = "q-hat", value_parser = open_unit)]
    pub q_hat: f64,
    /// Level-set branch.
    #[arg(long, default_value = "plus", value_parser = parse_branch)]
    pub branch: Branch,
    /// Also write (r, ratio, q_pdf) rows over the support to this CSV.
    #[arg(long, value_name = "CSV")]
    pub csv: Option<PathBuf>,
    /// Number of grid rows in the CSV.
    #[arg(long, default_value_t = 1001, value_parser = RangedU64ValueParser::<usize>::new().range(2..))]
    pub points: usize,
    /// Output JSON path; stdout when absent.
    #[arg(long, value_name = "JSON")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    #[command(flatten)]
    pub models: ModelArgs,
    /// Prevalence of the mixture.
    #[arg(long, value_parser = open_unit)]
    pub q: f64,
    /// Grid points over [0.01, 0.99] before refinement.
    #[arg(long, default_value_t = prevalence::objective::DEFAULT_GRID_SIZE, value_parser = grid_size)]
    pub grid: usize,
    /// Final golden-section bracket width.
    #[arg(long, default_value_t = prevalence::objective::DEFAULT_TOL, value_parser = positive)]
    pub tol: f64,
    /// Also write the grid trace to this CSV.
    #[arg(long = "trace-csv", value_name = "CSV")]
    pub trace_csv: Option<PathBuf>,
    /// Output JSON path; stdout when absent.
    #[arg(long, value_name = "JSON")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub models: ModelArgs,
    /// Test measurements, one per row.
    #[arg(long = "test-csv", value_name = "CSV")]
    pub test_csv: PathBuf,
    /// Normalization JSON written by `fit`, applied to the test values.
    #[arg(long, value_name = "JSON")]
    pub normalization: Option<PathBuf>,
    /// Fixed domain JSON; skips the refinement loop.
    #[arg(long, value_name = "JSON", conflicts_with = "q0")]
    pub domain: Option<PathBuf>,
    /// Initial prevalence guess for the refinement loop (default 0.5).
    #[arg(long, alias = "auto", value_parser = open_unit)]
    pub q0: Option<f64>,
    /// Refinement stops once successive estimates differ by less than this.
    #[arg(long, default_value_t = prevalence::estimate::DEFAULT_REFINE_TOL, value_parser = positive)]
    pub tol: f64,
    /// Refinement iteration budget.
    #[arg(long = "max-iter", default_value_t = prevalence::estimate::DEFAULT_MAX_ITER, value_parser = RangedU64ValueParser::<usize>::new().range(1..))]
    pub max_iter: usize,
    /// Grid points for each domain optimization.
    #[arg(long, default_value_t = prevalence::objective::DEFAULT_GRID_SIZE, value_parser = grid_size)]
    pub grid: usize,
    /// Output JSON path; stdout when absent.
    #[arg(long, value_name = "JSON")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Scenario JSON with models, q_true, M, T, seed and policy.
    #[arg(long, value_name = "JSON")]
    pub scenario: PathBuf,
    /// Overrides the scenario seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Also write every trial estimate to this CSV.
    #[arg(long = "trials-csv", value_name = "CSV")]
    pub trials_csv: Option<PathBuf>,
    /// Output JSON path; stdout when absent.
    #[arg(long, value_name = "JSON")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FiguresArgs {
    #[command(flatten)]
    pub models: ModelArgs,
    /// Prevalence used for the ratio and mixture curves.
    #[arg(long, default_value_t = 30.0 / 130.0, value_parser = open_unit)]
    pub q: f64,
    /// Rows per CSV.
    #[arg(long, default_value_t = 201, value_parser = RangedU64ValueParser::<usize>::new().range(3..))]
    pub points: usize,
    /// Output directory for the four CSV files.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

fn parse_f64(s: &str) -> Result<f64, String> {
    s.parse::<f64>().map_err(|e| format!("{e}"))
}

fn open_unit(s: &str) -> Result<f64, String> {
    let v = parse_f64(s)?;
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(format!("{v} is not in (0, 1)"))
    }
}

fn positive(s: &str) -> Result<f64, String> {
    let v = parse_f64(s)?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{v} is not a positive number"))
    }
}

fn nonnegative(s: &str) -> Result<f64, String> {
    let v = parse_f64(s)?;
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{v} is not a nonnegative number"))
    }
}

fn grid_size(s: &str) -> Result<usize, String> {
    let v: usize = s.parse().map_err(|e| format!("{e}"))?;
    if v >= 21 {
        Ok(v)
    } else {
        Err(format!("grid size must be at least 21, got {v}"))
    }
}

fn parse_branch(s: &str) -> Result<Branch, String> {
    s.parse().map_err(|e: prevalence::Error| e.to_string())
}

fn parse_families(s: &str) -> Result<(FamilyTag, FamilyTag), String> {
    let (neg, pos) = s.split_once(',').ok_or_else(|| format!("expected NEG,POS, got '{s}'"))?;
    let tag = |t: &str| t.trim().parse::<FamilyTag>().map_err(|e| e.to_string());
    Ok((tag(neg)?, tag(pos)?))
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
        }
    };
    match commands::dispatch(cli.command) {
        Ok(()) => EXIT_OK,
        Err(err) => {
            eprintln!("error: {err}");
            EXIT_COMPUTE
        }
    }
}
