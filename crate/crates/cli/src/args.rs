use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "mfcomp", version, about = "Multifractal singularity width analysis and decomposition")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Partition function, tau(q) and singularity spectrum of one series.
    Analyze(AnalyzeArgs),
    /// Shuffled, linear-memory (IAAFT) or rank-remapped surrogates.
    Surrogate(SurrogateArgs),
    /// Synthetic inputs: fGn, binomial cascades, long-memory magnitudes, i.i.d. draws.
    Synth(SynthArgs),
    /// Finite-size-effect scan over Hurst indices and lengths.
    FseCalibrate(FseArgs),
    /// Split the singularity width into FSE, PDF and nonlinear components.
    Decompose(DecomposeArgs),
    /// Decomposition along a Student-t or Weibull family.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Emit {
    Json,
    Csv,
    Both,
}

impl Emit {
    pub fn json(self) -> bool {
        matches!(self, Emit::Json | Emit::Both)
    }

    pub fn csv(self) -> bool {
        matches!(self, Emit::Csv | Emit::Both)
    }
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Master seed. Mandatory when the CI environment variable is set.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = Emit::Both)]
    pub emit: Emit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InputKind {
    /// Prices; analysed as absolute log returns.
    Price,
    Volatility,
    /// Any non-negative series, analysed as given.
    Positive,
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Column index or header name.
    #[arg(long, default_value = "0")]
    pub column: String,
    #[arg(long, value_enum, default_value_t = InputKind::Positive)]
    pub input_kind: InputKind,
}

#[derive(Debug, Clone, Args)]
pub struct AnalysisArgs {
    /// Orders as `min:max:step`.
    #[arg(long, default_value = "-4:4:0.25", allow_hyphen_values = true)]
    pub q_range: String,
    /// Smallest scale as a fraction of the length.
    #[arg(long, default_value_t = 1.0 / 60.0)]
    pub min_fraction: f64,
    /// Largest scale as a fraction of the length.
    #[arg(long, default_value_t = 1.0 / 3.0)]
    pub max_fraction: f64,
    #[arg(long, default_value_t = 30)]
    pub scale_points: usize,
    /// Windows per scale: `m = max(min(ceil(f N / l), N - l + 1), m_min)`.
    #[arg(long, default_value_t = 2.0)]
    pub m_factor: f64,
    #[arg(long, default_value_t = 10)]
    pub m_min: usize,
    /// Use every window start instead of random sampling.
    #[arg(long)]
    pub exhaustive: bool,
}

#[derive(Debug, Clone, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub analysis: AnalysisArgs,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SurrogateKind {
    Shuffle,
    Lm,
    Remap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Dist {
    Empirical,
    Normal,
    Student,
    Weibull,
}

#[derive(Debug, Clone, Args)]
pub struct DistArgs {
    #[arg(long, value_enum)]
    pub dist: Option<Dist>,
    /// Distribution parameters: `mu,sigma` (normal), `gamma` (student), `beta` (weibull).
    #[arg(long, allow_hyphen_values = true)]
    pub param: Option<String>,
    /// Reference values for the empirical distribution; defaults to the input.
    #[arg(long)]
    pub reference: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SurrogateArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_enum)]
    pub kind: SurrogateKind,
    #[command(flatten)]
    pub dist: DistArgs,
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    #[arg(long, default_value_t = mfcomp::surrogates::DEFAULT_IAAFT_MAX_ITER)]
    pub iaaft_max_iter: usize,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SynthKind {
    Fgn,
    Cascade,
    /// fGn rank order carrying magnitudes from `--dist`.
    LongMemory,
    Iid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BranchingArg {
    Alternating,
    LeftLight,
    Random,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[arg(long, value_enum)]
    pub kind: SynthKind,
    #[arg(long, default_value_t = 0.5)]
    pub hurst: f64,
    #[arg(long, default_value_t = 4096)]
    pub len: usize,
    #[arg(long, default_value_t = 0.3)]
    pub p: f64,
    #[arg(long, default_value_t = 12)]
    pub depth: u32,
    #[arg(long, value_enum, default_value_t = BranchingArg::Alternating)]
    pub branching: BranchingArg,
    #[command(flatten)]
    pub dist: DistArgs,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct FseArgs {
    /// Reference values whose empirical distribution the surrogates carry.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, default_value = "0")]
    pub column: String,
    #[command(flatten)]
    pub dist: DistArgs,
    /// Comma-separated Hurst indices.
    #[arg(long = "hurst")]
    pub hurst: Option<String>,
    /// Comma-separated lengths.
    #[arg(long = "lengths")]
    pub lengths: Option<String>,
    #[arg(long)]
    pub ensemble: Option<usize>,
    /// Full grid: H = 0.1..0.9, L = 10^3..10^7, 100 members.
    #[arg(long)]
    pub full: bool,
    #[arg(long)]
    pub iaaft_max_iter: Option<usize>,
    #[command(flatten)]
    pub analysis: AnalysisArgs,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct DecomposeArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, default_value_t = mfcomp::decomposition::DEFAULT_ENSEMBLE)]
    pub ensemble: usize,
    #[arg(long, default_value_t = mfcomp::surrogates::DEFAULT_IAAFT_MAX_ITER)]
    pub iaaft_max_iter: usize,
    /// Gaussian reference as `mu,sigma`; defaults to the return statistics.
    #[arg(long, allow_hyphen_values = true)]
    pub gaussian: Option<String>,
    /// FSE table JSON from `fse-calibrate`, used as a cross-check.
    #[arg(long)]
    pub fse_table: Option<PathBuf>,
    #[command(flatten)]
    pub analysis: AnalysisArgs,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    Student,
    Weibull,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub decompose: DecomposeArgs,
    #[arg(long, value_enum)]
    pub family: FamilyArg,
    /// `start:stop:step` or a comma list; defaults to the family's standard grid.
    #[arg(long)]
    pub grid: Option<String>,
}
