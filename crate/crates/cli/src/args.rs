use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(
    name = "lastzero",
    version,
    about = "Last zero-crossing time of Brownian motion with drift",
    long_about = "Last zero-crossing time T of Brownian motion with drift mu on [0, t]: \
distribution, density, moments, window-crossing probabilities, exact sampling, a \
bridge-corrected Monte Carlo oracle and deviation-limit scans.\n\n\
Every table is written as CSV (default) or JSON. CSV reals use 17 significant digits; \
empty cells mark probabilities whose logarithm is below -700 (read the log_ column). \
A run manifest (parameters, version, seed, timestamp, argv) accompanies every table: \
inside the JSON object, next to the --out file as <out>.manifest.json, or on stderr.\n\n\
Exit codes: 0 success, 2 invalid arguments, 3 numerical non-convergence.\n\
LASTZERO_THREADS caps the worker count (0 or unset = all cores)."
)]
pub struct Cli {
    #[command(flatten)]
    pub output: OutputArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OutputArgs {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value = "csv")]
    pub format: Format,
    /// Write the table here instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Relative tolerance of every quadrature.
    #[arg(
        long,
        global = true,
        value_name = "REL",
        default_value_t = 1e-10,
        allow_negative_numbers = true
    )]
    pub tol: f64,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Distribution function P(T <= a) and the log-survival log P(T >= a).
    #[command(after_help = "Columns: a, cdf, survival, log_survival")]
    Cdf(PointArgs),
    /// Density of T.
    #[command(after_help = "Columns: a, pdf (inf at a = 0 and a = t)")]
    Pdf(PointArgs),
    /// Mean and variance of T for drift mu*sqrt(r).
    #[command(after_help = "Columns: mu, t, r, mean, variance, r2_variance")]
    Moments(MomentsArgs),
    /// Probability of a zero of the drifted path inside [a, b].
    #[command(after_help = "Columns: a, b, psi, log_psi")]
    Crossing(CrossingArgs),
    /// Limit law G of r*T as r grows.
    #[command(after_help = "Columns: a, cdf, mean, variance (a, cdf empty with --moments)")]
    LimitLaw(LimitLawArgs),
    /// Exact variates of T (or of the limit law) by inverse transform.
    #[command(after_help = "Columns: index, value")]
    Sample(SampleArgs),
    /// Bridge-corrected Monte Carlo estimate against the closed form.
    #[command(
        after_help = "Columns: quantity, a, b, p_hat, stderr, n_paths, dt, bridge, exact, z_score"
    )]
    Mc(McArgs),
    /// (1/r) log P(T >= z) under drift mu*sqrt(r), against -mu^2 z/2.
    #[command(after_help = "Columns: r, raw_log, scaled, theory, abs_err, extrapolated")]
    Ldp(LdpArgs),
    /// gamma_r log P(r gamma_r T >= z), gamma_r = r^-beta, against -mu^2 z/2.
    #[command(
        after_help = "Columns: r, gamma, raw_log, scaled, theory, abs_err, extrapolated\n\
Grid values with z/(r gamma_r) >= t are omitted and listed in the manifest as skipped_r."
    )]
    Md(MdArgs),
    /// Both crossing-probability limits along r.
    #[command(
        after_help = "Columns: r, raw_log, scaled, theory, abs_err, extrapolated, \
scaled2, theory2, abs_err2, extrapolated2\n\
scaled = log(psi)/r against -mu^2 a/2; scaled2 = exp(mu^2 r a/2) sqrt(r) psi against \
sqrt(2/(pi mu^2 a))."
    )]
    CrossingScan(CrossingScanArgs),
}

#[derive(Debug, Args, Serialize)]
#[command(group(ArgGroup::new("point").required(true).args(["a", "grid"])))]
pub struct PointArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub mu: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub t: f64,
    /// Single evaluation point.
    #[arg(long, allow_negative_numbers = true)]
    pub a: Option<f64>,
    /// N evenly spaced points from 0 to t inclusive.
    #[arg(long, value_name = "N")]
    pub grid: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct MomentsArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub mu: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub t: f64,
    /// Scale of the drift, mu*sqrt(r).
    #[arg(long, allow_negative_numbers = true, default_value_t = 1.0)]
    pub r: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct CrossingArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub mu: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub a: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub b: f64,
}

#[derive(Debug, Args, Serialize)]
#[command(group(ArgGroup::new("what").required(true).args(["a", "moments"])))]
pub struct LimitLawArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub mu: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub a: Option<f64>,
    /// Only the mean and variance.
    #[arg(long)]
    pub moments: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct SampleArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub mu: f64,
    #[arg(long, required_unless_present = "limit_law")]
    pub t: Option<f64>,
    #[arg(long)]
    pub n: u64,
    #[arg(long)]
    pub seed: u64,
    /// Stream of the generator.
    #[arg(long, default_value_t = 0)]
    pub stream: u64,
    /// Sample the limit law instead of T.
    #[arg(long)]
    pub limit_law: bool,
}

#[derive(Debug, Args, Serialize)]
#[command(group(ArgGroup::new("estimate").required(true).args(["cdf_at", "crossing"])))]
pub struct McArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub mu: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub t: f64,
    #[arg(long)]
    pub n_paths: u64,
    #[arg(long, allow_negative_numbers = true)]
    pub dt: f64,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 0)]
    pub stream: u64,
    /// Estimate P(T <= A).
    #[arg(long, value_name = "A")]
    pub cdf_at: Option<f64>,
    /// Estimate the probability of a zero in [A, B] (B <= t).
    #[arg(long, num_args = 2, value_names = ["A", "B"], allow_negative_numbers = true)]
    pub crossing: Option<Vec<f64>>,
    /// Disable the Brownian-bridge correction.
    #[arg(long)]
    pub no_bridge: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct GridArgs {
    #[arg(long, allow_negative_numbers = true, default_value_t = 10.0)]
    pub r_min: f64,
    #[arg(long, allow_negative_numbers = true, default_value_t = 1e4)]
    pub r_max: f64,
    #[arg(long, default_value_t = 12)]
    pub r_points: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct LdpArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub mu: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub t: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub z: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub grid: GridArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct MdArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub mu: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub t: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub z: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub beta: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub grid: GridArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct CrossingScanArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub mu: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub a: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub b: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub grid: GridArgs,
}
