use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lilrates_core::lab::DistributionSpec;
use lilrates_core::{DriftSchedule, Regime, Statistic};

#[derive(Debug, Parser)]
#[command(
    name = "lilrates",
    version,
    about = "Precise-rate LIL constants, series and Monte Carlo checks"
)]
pub struct Cli {
    /// Write the CSV table here and the JSON envelope to `<out>.json`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Print the JSON envelope on stdout instead of the CSV table.
    #[arg(long, global = true)]
    pub json: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form limit constants.
    Constants(ConstantsArgs),
    /// Normalized series along a grid of epsilon values approaching the critical one.
    Sweep(SweepArgs),
    /// Monte Carlo tail estimates, or an empirical series when --eps is given.
    Simulate(SimulateArgs),
    /// Truncated-variance normalizer B_n and the Δ_n exceedance frequency.
    Truncation(TruncationArgs),
    /// Moment functional and the tail-moment profile of an increment law.
    Moments(MomentsArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RegimeArg {
    Thm1,
    Thm2,
}

impl From<RegimeArg> for Regime {
    fn from(r: RegimeArg) -> Self {
        match r {
            RegimeArg::Thm1 => Regime::PowerLog,
            RegimeArg::Thm2 => Regime::InverseLog,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StatArg {
    Abs,
    Max,
    Both,
}

impl StatArg {
    pub fn statistics(self) -> Vec<Statistic> {
        match self {
            StatArg::Abs => vec![Statistic::Abs],
            StatArg::Max => vec![Statistic::Max],
            StatArg::Both => vec![Statistic::Abs, Statistic::Max],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DriftArg {
    Zero,
    Canonical,
    Bounded,
}

#[derive(Debug, Clone, Args)]
pub struct WeightArgs {
    #[arg(long, value_enum, default_value = "thm1")]
    pub regime: RegimeArg,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub a: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub b: f64,
}

#[derive(Debug, Clone, Args)]
pub struct DriftArgs {
    #[arg(long, value_enum, default_value = "zero")]
    pub drift: DriftArg,
    /// τ for `canonical`, c for `bounded`.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub drift_value: f64,
}

impl DriftArgs {
    pub fn schedule(&self) -> DriftSchedule {
        match self.drift {
            DriftArg::Zero => DriftSchedule::Zero,
            DriftArg::Canonical => DriftSchedule::Canonical(self.drift_value),
            DriftArg::Bounded => DriftSchedule::Bounded(self.drift_value),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ConstantsArgs {
    #[arg(long, value_enum)]
    pub regime: RegimeArg,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub a: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub b: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub tau: f64,
    #[arg(long, value_enum, default_value = "both")]
    pub stat: StatArg,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub weights: WeightArgs,
    #[command(flatten)]
    pub drift: DriftArgs,
    /// `abs` uses the |N| tail, `max` the Brownian-supremum tail.
    #[arg(long, value_enum, default_value = "abs")]
    pub stat: StatArg,
    /// Explicit, strictly decreasing epsilon grid (comma separated).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub eps: Option<Vec<f64>>,
    /// Largest gap ε² − critical² of the default grid.
    #[arg(long, default_value_t = 0.5)]
    pub start_gap: f64,
    /// Smallest gap of the default grid.
    #[arg(long, default_value_t = 1e-3)]
    pub end_gap: f64,
    #[arg(long, default_value_t = 16)]
    pub points: usize,
    /// Relative tolerance on each row's error bound.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// Number of terms summed directly before the integral tail.
    #[arg(long, default_value_t = 1_000_000)]
    pub splice: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DistArg {
    Normal,
    Rademacher,
    Uniform,
    Pareto,
}

#[derive(Debug, Clone, Args)]
pub struct DistArgs {
    #[arg(long, value_enum)]
    pub dist: DistArg,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub sigma: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub half_width: f64,
    #[arg(long, default_value_t = 2.5, allow_negative_numbers = true)]
    pub alpha: f64,
}

impl DistArgs {
    pub fn spec(&self) -> DistributionSpec {
        match self.dist {
            DistArg::Normal => DistributionSpec::Normal { sigma: self.sigma },
            DistArg::Rademacher => DistributionSpec::Rademacher,
            DistArg::Uniform => DistributionSpec::UniformSym {
                half_width: self.half_width,
            },
            DistArg::Pareto => DistributionSpec::TwoSidedPareto { alpha: self.alpha },
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct McArgs {
    #[arg(long, default_value_t = 10_000)]
    pub paths: u64,
    /// Master seed; falls back to LILRATES_SEED, then 0.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (results do not depend on it).
    #[arg(long)]
    pub workers: Option<usize>,
    /// Directory of content-addressed Monte Carlo results.
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub dist: DistArgs,
    #[command(flatten)]
    pub mc: McArgs,
    /// Walk length.
    #[arg(long, conflicts_with = "eps")]
    pub n: Option<u64>,
    /// Threshold in walk units.
    #[arg(long, conflicts_with_all = ["x", "eps"])]
    pub threshold: Option<f64>,
    /// Threshold as a multiple of σ√n.
    #[arg(long, conflicts_with = "eps")]
    pub x: Option<f64>,
    #[arg(long, value_enum, default_value = "both")]
    pub stat: StatArg,
    /// Assemble the weighted series at this epsilon on a geometric n-grid.
    #[arg(long)]
    pub eps: Option<f64>,
    #[command(flatten)]
    pub weights: WeightArgs,
    #[command(flatten)]
    pub drift: DriftArgs,
    #[arg(long, default_value_t = 16)]
    pub grid_min: u64,
    #[arg(long, default_value_t = 1 << 20)]
    pub grid_max: u64,
    #[arg(long, default_value_t = 2.0)]
    pub ratio: f64,
    /// Largest allowed beyond-grid majorant relative to the value.
    #[arg(long, default_value_t = 0.1)]
    pub truncation_tol: f64,
}

#[derive(Debug, Clone, Args)]
pub struct TruncationArgs {
    #[command(flatten)]
    pub dist: DistArgs,
    #[arg(long, default_value_t = 1.0)]
    pub p: f64,
    #[arg(long)]
    pub n: u64,
    #[arg(long, default_value_t = 1_000)]
    pub paths: u64,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct MomentsArgs {
    #[command(flatten)]
    pub dist: DistArgs,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub a: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub b: f64,
    /// Explicit increasing t-grid (comma separated).
    #[arg(long, value_delimiter = ',')]
    pub t: Option<Vec<f64>>,
    /// Largest t of the default grid, which starts at 1.
    #[arg(long, default_value_t = 1e8)]
    pub t_max: f64,
    #[arg(long, default_value_t = 17)]
    pub t_points: usize,
}
