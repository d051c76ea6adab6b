//! Command-line flags.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "horseshoe", version, about = "Sparse Bayesian GLMs with horseshoe-family priors")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample the prior distribution of the effective number of nonzero coefficients.
    Elicit(ElicitArgs),
    /// Fit a sparse linear or logistic regression to a CSV data set.
    Fit(FitArgs),
    /// Run a seeded synthetic benchmark.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TauKind {
    Fixed,
    HalfNormal,
    HalfCauchy,
    HalfT,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SlabKind {
    Infinite,
    Fixed,
    StudentT,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyArg {
    Gaussian,
    Bernoulli,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ParameterizationArg {
    NonCentered,
    ScaleMixture,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentName {
    Toy,
    ToyScaling,
    Separable,
    Correlated,
}

#[derive(Debug, Clone, Default, Args)]
pub struct OutputArgs {
    /// Output directory.
    #[arg(long, env = "HORSESHOE_OUT_DIR")]
    pub out: Option<PathBuf>,
    /// Configuration file: a previous run's manifest.json or a bare run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct TauArgs {
    /// Prior on the global scale τ (default half-cauchy when --p0 is given).
    #[arg(long, value_enum)]
    pub tau_prior: Option<TauKind>,
    /// Scale of the τ prior, or the value of τ for `fixed` (default τ₀ from --p0).
    #[arg(long)]
    pub tau_scale: Option<f64>,
    /// Degrees of freedom for `half-t`.
    #[arg(long)]
    pub tau_dof: Option<f64>,
    /// Prior guess for the number of relevant coefficients.
    #[arg(long)]
    pub p0: Option<f64>,
    /// Degrees of freedom of the half-t local scales; 1 is the horseshoe.
    #[arg(long)]
    pub local_dof: Option<f64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SamplerArgs {
    /// Number of independent chains (fit default 4).
    #[arg(long)]
    pub chains: Option<usize>,
    /// Adaptation iterations per chain, discarded (fit default 1000).
    #[arg(long)]
    pub warmup: Option<usize>,
    /// Retained draws per chain (fit default 1000).
    #[arg(long)]
    pub samples: Option<usize>,
    /// Target acceptance statistic for step-size adaptation (default 0.8).
    #[arg(long)]
    pub target_accept: Option<f64>,
    /// Maximum tree depth (default 10).
    #[arg(long)]
    pub max_depth: Option<usize>,
    /// Random seed; equal seeds give identical output (default 0).
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct ElicitArgs {
    /// Number of coefficients.
    #[arg(long = "D")]
    pub dim: Option<usize>,
    /// Number of observations.
    #[arg(long)]
    pub n: Option<usize>,
    /// Noise standard deviation (default 1).
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Number of prior draws (default 10000).
    #[arg(long)]
    pub draws: Option<usize>,
    /// Random seed (default 0).
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub tau: TauArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    /// Training data (CSV with a header row).
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Held-out data with the same columns, for predictive metrics.
    #[arg(long)]
    pub test: Option<PathBuf>,
    /// Name of the target column (default "y").
    #[arg(long)]
    pub target: Option<String>,
    /// Observation model (required).
    #[arg(long, value_enum)]
    pub family: Option<FamilyArg>,
    /// Use predictors as given instead of scaling them to zero mean and unit variance.
    #[arg(long)]
    pub no_standardize: bool,
    #[command(flatten)]
    pub tau: TauArgs,
    /// Slab on large coefficients (default student-t).
    #[arg(long, value_enum)]
    pub slab: Option<SlabKind>,
    /// Slab scale (default 2).
    #[arg(long)]
    pub slab_scale: Option<f64>,
    /// Slab degrees of freedom for `student-t` (fit default 4).
    #[arg(long)]
    pub slab_df: Option<f64>,
    /// Normal prior standard deviation for the intercept.
    #[arg(long, conflicts_with_all = ["no_intercept", "flat_intercept"])]
    pub intercept_sd: Option<f64>,
    /// Improper flat prior on the intercept.
    #[arg(long, conflicts_with = "no_intercept")]
    pub flat_intercept: bool,
    /// Fit without an intercept.
    #[arg(long)]
    pub no_intercept: bool,
    /// Sampling coordinates for the local and global scales (default non-centered).
    #[arg(long, value_enum)]
    pub parameterization: Option<ParameterizationArg>,
    #[command(flatten)]
    pub sampler: SamplerArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ExperimentArgs {
    #[arg(value_enum)]
    pub name: ExperimentName,
    /// Replications per signal level (toy).
    #[arg(long)]
    pub reps: Option<usize>,
    /// Comma-separated signal amplitudes (toy).
    #[arg(long = "A", value_delimiter = ',')]
    pub signals: Option<Vec<f64>>,
    /// Number of observations (toy, correlated).
    #[arg(long)]
    pub n: Option<usize>,
    /// Number of coefficients (correlated).
    #[arg(long = "D")]
    pub dim: Option<usize>,
    /// Number of nonzero coefficients (toy, correlated).
    #[arg(long)]
    pub relevant: Option<usize>,
    #[command(flatten)]
    pub sampler: SamplerArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}
