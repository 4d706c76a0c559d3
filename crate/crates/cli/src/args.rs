// SPDX-License-Identifier: MIT OR Apache-2.0

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "potts",
    version,
    about = "Jump-penalized least-squares segmentation"
)]
pub struct Cli {
    /// Worker threads for the Monte Carlo commands (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a signal with a fixed or data-driven penalty.
    Fit(FitArgs),
    /// Best fits for every jump budget and their penalty ranges.
    Path(PathArgs),
    /// Report the data-driven penalty and the selected fit.
    Select(SelectArgs),
    /// Generate a test signal, optionally with noise.
    Signal(SignalArgs),
    /// Distances between two step functions or jump sets.
    Metrics(MetricsArgs),
    /// Monte Carlo error rates over a grid of sample sizes.
    BenchRates(BenchArgs),
    /// Monte Carlo jump-recovery statistics.
    BenchRecovery(BenchArgs),
    /// Monte Carlo distribution of the C_n noise statistic.
    BenchCn(CnArgs),
    /// Reconstructions of the four classical test signals at three noise levels.
    Figure1(FigureArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Rule {
    Log,
    Mr,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MrFamily {
    All,
    Dyadic,
}

#[derive(Debug, Args)]
pub struct Output {
    /// Output file (default: standard output).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct Penalty {
    /// Fixed penalty; overrides --select.
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long, value_enum, default_value_t = Rule::Log)]
    pub select: Rule,
    /// Constant C of the log rule gamma = C sigma^2 ln(n) / n.
    #[arg(long, default_value_t = 2.5)]
    pub c_const: f64,
    /// Slack of the MR threshold (1 + delta) sigma sqrt(2 ln n).
    #[arg(long, default_value_t = 0.05)]
    pub delta: f64,
    /// Noise estimate: mad, msd, or a fixed value.
    #[arg(long = "sigma", default_value = "mad")]
    pub sigma_method: String,
    #[arg(long, value_enum, default_value_t = MrFamily::All)]
    pub mr_family: MrFamily,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Signal CSV: one value per line, or x,y pairs on an equidistant grid.
    pub input: PathBuf,
    #[command(flatten)]
    pub penalty: Penalty,
    #[command(flatten)]
    pub output: Output,
    /// Also write the fitted values as CSV to this file.
    #[arg(long)]
    pub fitted: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct PathArgs {
    pub input: PathBuf,
    /// Largest jump budget (default: min(n - 1, ceil(n / 2))).
    #[arg(long)]
    pub k_max: Option<usize>,
    #[command(flatten)]
    pub output: Output,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    pub input: PathBuf,
    #[command(flatten)]
    pub penalty: Penalty,
    #[command(flatten)]
    pub output: Output,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Family {
    Blocks,
    Bumps,
    Heavisine,
    Doppler,
    Step,
    #[value(alias = "lipschitz_ramp")]
    Ramp,
    Holder,
    #[value(alias = "bv_example")]
    Bv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Noise {
    Gaussian,
    Rademacher,
    Uniform,
}

#[derive(Debug, Args)]
pub struct Truth {
    #[arg(long = "family", alias = "signal", value_enum, default_value_t = Family::Step)]
    pub family: Family,
    /// Jump positions of a step signal (default: 0.25,0.5,0.75).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub jumps: Option<Vec<f64>>,
    /// Levels of a step signal (default: 0,2,-1,1).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub levels: Option<Vec<f64>>,
    /// Exponent of the holder family x^alpha.
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
}

#[derive(Debug, Args)]
pub struct NoiseArgs {
    /// Signal-to-noise ratio ||f||^2 / sigma^2.
    #[arg(long, conflicts_with = "sigma")]
    pub snr: Option<f64>,
    /// Noise standard deviation.
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long, value_enum, default_value_t = Noise::Gaussian)]
    pub noise: Noise,
    /// Seed of the noise stream; required whenever noise is drawn.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct SignalArgs {
    #[command(flatten)]
    pub truth: Truth,
    #[arg(long)]
    pub n: usize,
    #[command(flatten)]
    pub noise: NoiseArgs,
    /// Emit the noiseless signal.
    #[arg(long)]
    pub clean: bool,
    #[command(flatten)]
    pub output: Output,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    /// First operand: step function, fit or jump-array JSON, or a signal CSV.
    pub a: PathBuf,
    pub b: PathBuf,
    #[arg(long)]
    pub hausdorff: bool,
    #[arg(long)]
    pub skorokhod: bool,
    /// Essential supremum distance.
    #[arg(long)]
    pub sup: bool,
    #[arg(long)]
    pub l2: bool,
    #[command(flatten)]
    pub output: Output,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MetricName {
    L2,
    Hausdorff,
    Skorokhod,
    JumpCount,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub truth: Truth,
    /// Sample sizes, strictly increasing.
    #[arg(long, value_delimiter = ',', required = true)]
    pub ns: Vec<usize>,
    #[arg(long, default_value_t = 50)]
    pub reps: usize,
    #[command(flatten)]
    pub noise: NoiseArgs,
    #[arg(long, value_delimiter = ',', value_enum, default_values_t = [MetricName::L2])]
    pub metric: Vec<MetricName>,
    /// Fixed penalty; overrides --select.
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long, value_enum, default_value_t = Rule::Log)]
    pub select: Rule,
    #[arg(long, default_value_t = 2.5)]
    pub c_const: f64,
    #[arg(long, default_value_t = 0.05)]
    pub delta: f64,
    /// Noise estimate: mad, msd, or a fixed value.
    #[arg(long, default_value = "mad")]
    pub sigma_method: String,
    /// Run the optimality checks on every k-th replicate (0: never).
    #[arg(long, default_value_t = 20)]
    pub check_every: usize,
    #[command(flatten)]
    pub output: Output,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct CnArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    pub ns: Vec<usize>,
    #[arg(long, default_value_t = 50)]
    pub reps: usize,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    #[arg(long, value_enum, default_value_t = Noise::Gaussian)]
    pub noise: Noise,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub output: Output,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct FigureArgs {
    #[arg(long)]
    pub seed: Option<u64>,
    /// Directory for the per-cell CSV files and summary.json.
    #[arg(long)]
    pub out: PathBuf,
}
