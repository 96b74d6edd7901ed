use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tsfactor::forecast::Method;
use tsfactor::{PipelineConfig, R1Params};

#[derive(Debug, Parser)]
#[command(
    name = "tsfactor",
    version,
    about = "Unit-root and stationary factor decomposition of high-dimensional time series"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate the factor counts, loadings and factor paths of a CSV panel.
    Decompose(DecomposeArgs),
    /// Expanding-window forecast comparison against the DFAR and PCA baselines.
    Forecast(ForecastArgs),
    /// Generate a panel from one of the simulation designs.
    Simulate(SimulateArgs),
    /// Monte Carlo tables of correct-count frequencies and estimation accuracy.
    Benchmark(BenchmarkArgs),
}

#[derive(Debug, Clone, Args)]
pub struct PipelineArgs {
    /// Largest lag in the unit-root eigenanalysis.
    #[arg(long, default_value_t = 2)]
    pub k0: usize,
    /// Largest lag in the stationary eigenanalysis.
    #[arg(long, default_value_t = 2)]
    pub j0: usize,
    /// Threshold on the averaged autocorrelation.
    #[arg(long, default_value_t = 0.3)]
    pub c0: f64,
    /// Spacing of the probed autocorrelation lags.
    #[arg(long, default_value_t = 3)]
    pub l: usize,
    /// Number of probed lags; also the portmanteau lag unless --lb-lag is set.
    #[arg(long, default_value_t = 10)]
    pub m: usize,
    #[arg(long)]
    pub lb_lag: Option<usize>,
    /// Level of the white-noise tests.
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Fraction of n kept in white-noise testing when p - r1 >= n.
    #[arg(long, default_value_t = 0.75)]
    pub epsilon: f64,
    /// Number of prominent noise directions (estimated when absent).
    #[arg(long = "K")]
    pub k: Option<usize>,
    /// Fix the number of unit-root factors.
    #[arg(long)]
    pub r1: Option<usize>,
    /// Fix the number of stationary factors.
    #[arg(long)]
    pub r2: Option<usize>,
    /// Average signed rather than absolute autocorrelations.
    #[arg(long)]
    pub no_absolute_acf: bool,
    /// Test components in eigenvalue order instead of Ljung-Box order.
    #[arg(long)]
    pub no_reorder: bool,
    #[arg(long, default_value_t = 1234)]
    pub seed: u64,
}

impl PipelineArgs {
    pub fn config(&self) -> PipelineConfig {
        PipelineConfig {
            k0: self.k0,
            j0: self.j0,
            r1: R1Params {
                c0: self.c0,
                l: self.l,
                m: self.m,
                absolute: !self.no_absolute_acf,
            },
            lb_lag: self.lb_lag.unwrap_or(self.m),
            alpha: self.alpha,
            epsilon: self.epsilon,
            reorder: !self.no_reorder,
            k_override: self.k,
            r1_override: self.r1,
            r2_override: self.r2,
            seed: self.seed,
            ..PipelineConfig::default()
        }
    }
}

#[derive(Debug, Args)]
pub struct DecomposeArgs {
    /// Input CSV, or `-` for stdin.
    pub input: PathBuf,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    /// Write the JSON report and CSV artifacts here instead of printing JSON.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Gt,
    Dfar,
    PcaLevels,
    PcaDiff,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Gt => Method::Gt,
            MethodArg::Dfar => Method::Dfar,
            MethodArg::PcaLevels => Method::PcaLevels,
            MethodArg::PcaDiff => Method::PcaDiff,
        }
    }
}

#[derive(Debug, Args)]
pub struct ForecastArgs {
    pub input: PathBuf,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4")]
    pub horizons: Vec<usize>,
    /// Size of the first estimation window (default: two thirds of the sample).
    #[arg(long)]
    pub window_start: Option<usize>,
    #[arg(long, value_delimiter = ',', value_enum)]
    pub methods: Option<Vec<MethodArg>>,
    #[arg(long)]
    pub pca_levels_factors: Option<usize>,
    #[arg(long)]
    pub pca_diff_factors: Option<usize>,
    /// Bartlett bandwidth for the Diebold-Mariano variance.
    #[arg(long)]
    pub bandwidth: Option<usize>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExampleArg {
    #[value(name = "1")]
    One,
    #[value(name = "2")]
    Two,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum, default_value = "1")]
    pub example: ExampleArg,
    #[arg(long)]
    pub p: usize,
    #[arg(long)]
    pub n: usize,
    /// Factor strength exponent (example 2).
    #[arg(long, default_value_t = 0.0)]
    pub delta: f64,
    #[arg(long = "K")]
    pub k: Option<usize>,
    #[arg(long)]
    pub r1: Option<usize>,
    #[arg(long)]
    pub r2: Option<usize>,
    #[arg(long, default_value_t = 1234)]
    pub seed: u64,
    /// Seed of the loadings and AR coefficients (defaults to --seed).
    #[arg(long)]
    pub design_seed: Option<u64>,
    /// Write panel.csv and truth.json here instead of printing the panel.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    #[arg(long, value_enum, default_value = "1")]
    pub example: ExampleArg,
    #[arg(long, value_delimiter = ',', required = true)]
    pub p: Vec<usize>,
    #[arg(long, value_delimiter = ',', required = true)]
    pub n: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub delta: Vec<f64>,
    #[arg(long, default_value_t = 100)]
    pub reps: usize,
    /// Reuse the same innovation stream for replication i in every cell.
    #[arg(long)]
    pub paired: bool,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}
