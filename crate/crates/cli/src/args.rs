use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use penlevel::{Family, Method};

#[derive(Debug, Parser)]
#[command(name = "penlevel", version, about = "Penalty levels for l1-penalized regression")]
pub struct Cli {
    /// Worker threads for Monte Carlo draws, CV folds and replications (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate the penalty level by the normal quantile (mdt) or Monte Carlo (stein).
    Estimate(EstimateArgs),
    /// Fit the penalized estimator at a given or estimated penalty level.
    Fit(FitArgs),
    /// Select the penalty level by K-fold cross-validation.
    Cv(CvArgs),
    /// Run a simulation experiment and write its report.
    Simulate(SimulateArgs),
}

fn family(s: &str) -> Result<Family, String> {
    Family::from_str(s).map_err(|e| e.to_string())
}

fn method(s: &str) -> Result<Method, String> {
    Method::from_str(s).map_err(|e| e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EstimateMethod {
    Mdt,
    Stein,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SelectMethod {
    Mdt,
    Stein,
    Cv,
}

#[derive(Debug, Args)]
pub struct SpecArgs {
    /// lasso, sqrt-lasso or poisson-wsf.
    #[arg(long, value_parser = family)]
    pub family: Family,
    /// Confidence parameter in (0, 1).
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Multiplier c > 1.
    #[arg(long, default_value_t = 1.01)]
    pub c: f64,
    /// Known noise level (lasso only, default 1).
    #[arg(long)]
    pub sigma: Option<f64>,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Design matrix CSV, one observation per row.
    #[arg(long, conflicts_with = "data")]
    pub x: Option<PathBuf>,
    /// Response CSV, one value per row.
    #[arg(long, requires = "x")]
    pub y: Option<PathBuf>,
    /// Combined CSV whose last column is the response.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Skip one header row in every input file.
    #[arg(long)]
    pub skip_header: bool,
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    /// KKT tolerance.
    #[arg(long, default_value_t = 1e-7)]
    pub tol: f64,
    /// Cap on coordinate sweeps or proximal steps.
    #[arg(long, default_value_t = 10_000)]
    pub max_sweeps: usize,
    /// Cap on sigma updates for the alternating square-root lasso.
    #[arg(long, default_value_t = 50)]
    pub outer_iters: usize,
    /// Backtracking factor for the Poisson line search.
    #[arg(long, default_value_t = 0.5)]
    pub shrink: f64,
}

#[derive(Debug, Args)]
pub struct FoldArgs {
    #[arg(long, default_value_t = 10)]
    pub folds: usize,
    #[arg(long, default_value_t = 50)]
    pub grid_size: usize,
    /// Smallest grid point as a fraction of lambda_max.
    #[arg(long, default_value_t = 0.01)]
    pub grid_min_ratio: f64,
    /// Fit every grid point from zero instead of the previous solution.
    #[arg(long)]
    pub no_warm_start: bool,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    #[arg(long, value_enum)]
    pub method: EstimateMethod,
    #[command(flatten)]
    pub data: DataArgs,
    /// Sample size when no data is given (mdt only).
    #[arg(long, conflicts_with_all = ["x", "data"])]
    pub n: Option<usize>,
    /// Covariate count when no data is given (mdt only).
    #[arg(long, conflicts_with_all = ["x", "data"])]
    pub p: Option<usize>,
    #[arg(long, default_value_t = 1000)]
    pub draws: usize,
    /// Monte Carlo seed; random (and reported) when omitted.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    #[command(flatten)]
    pub data: DataArgs,
    /// Penalty level.
    #[arg(long, conflicts_with = "method", required_unless_present = "method")]
    pub lambda: Option<f64>,
    /// Estimate the penalty level first.
    #[arg(long, value_enum)]
    pub method: Option<SelectMethod>,
    #[arg(long, default_value_t = 1000)]
    pub draws: usize,
    /// Seed for Monte Carlo draws or CV folds; random (and reported) when omitted.
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub cv: FoldArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Write the coefficients (standardized scale), one per line.
    #[arg(long)]
    pub out_beta: Option<PathBuf>,
    /// Recompute the KKT residual from the returned coefficients.
    #[arg(long)]
    pub verify: bool,
}

#[derive(Debug, Args)]
pub struct CvArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub cv: FoldArgs,
    /// Fold-assignment seed; random (and reported) when omitted.
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Write the held-out loss of every (lambda, fold) pair as CSV.
    #[arg(long)]
    pub loss_table: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Experiment JSON file, or the name of a bundled config
    /// (paper-lasso, paper-sqrt-lasso, paper-poisson).
    #[arg(long)]
    pub config: Option<String>,
    /// Directory for summary.json and records.csv.
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, value_parser = family)]
    pub family: Option<Family>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub sparsity: Option<usize>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub replications: Option<usize>,
    /// Base seed; taken from the config, else random (and reported).
    #[arg(long)]
    pub base_seed: Option<u64>,
    /// Comma-separated subset of mdt, stein, cv.
    #[arg(long, value_parser = method, value_delimiter = ',')]
    pub methods: Option<Vec<Method>>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long)]
    pub draws: Option<usize>,
    #[arg(long)]
    pub folds: Option<usize>,
    #[arg(long)]
    pub grid_size: Option<usize>,
    /// Draw beta* once instead of once per replication.
    #[arg(long)]
    pub freeze_beta: bool,
}
