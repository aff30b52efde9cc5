use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "cpca",
    version,
    about = "Contrastive PCA: batch cPCA / cPCA* fits, online streaming, sweeps, metrics and plots",
    after_help = "Exit codes: 0 success, 1 usage error, 2 I/O or file-format error, 3 domain error.\n\
                  Outputs without an explicit path go to $CPCA_OUT_DIR (default: current directory)."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a labeled dataset as JSON lines.
    Gen(GenArgs),
    /// Fit cPCA or cPCA* on a dataset and write the model.
    Fit(FitArgs),
    /// Run the online cPCA* network over a dataset for several seeds.
    Stream(StreamArgs),
    /// Score a method over a grid of contrast values.
    Sweep(SweepArgs),
    /// Render projections, sweep reports or trajectories as SVG.
    Plot(PlotArgs),
    /// Compare two models, or score a model on tagged data.
    Eval(EvalArgs),
    /// Run the built-in property suite on seeded random instances.
    Check(CheckArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GenKind {
    Artificial,
    SyntheticDigits,
    NoisyDigits,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(value_enum)]
    pub kind: GenKind,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output file (default: $CPCA_OUT_DIR/<kind>-seed<seed>.jsonl).
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// Positive samples for artificial data.
    #[arg(long, default_value_t = 200)]
    pub n_pos: usize,
    /// Negative samples for artificial data.
    #[arg(long, default_value_t = 200)]
    pub n_neg: usize,
    /// Images per class for the digit datasets.
    #[arg(long, default_value_t = 1000)]
    pub count: usize,
    /// MNIST image file (IDX, noisy-digits only).
    #[arg(long, required_if_eq("kind", "noisy-digits"))]
    pub images: Option<PathBuf>,
    /// MNIST label file (IDX, noisy-digits only).
    #[arg(long, required_if_eq("kind", "noisy-digits"))]
    pub labels: Option<PathBuf>,
    /// Directory of grayscale PGM backgrounds (noisy-digits only).
    #[arg(long, required_if_eq("kind", "noisy-digits"))]
    pub backgrounds: Option<PathBuf>,
}

/// How to read CSV inputs. Ignored for JSON-lines datasets.
#[derive(Debug, Clone, Args)]
pub struct CsvArgs {
    /// CSV column holding the positive/negative label.
    #[arg(long, default_value = "label")]
    pub label_column: String,
    /// CSV column holding the class tag used by the metrics.
    #[arg(long)]
    pub tag_column: Option<String>,
    /// CSV columns that are neither features nor labels (repeatable).
    #[arg(long = "ignore-column")]
    pub ignore_columns: Vec<String>,
    /// Label value marking positives; every other value is negative.
    #[arg(long)]
    pub positive_value: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// Dataset: `.csv` or the JSON-lines format written by `gen`.
    pub data: PathBuf,
    #[command(flatten)]
    pub csv: CsvArgs,
    /// Scale every feature to unit root-mean-square before fitting.
    #[arg(long)]
    pub normalize: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Cpca,
    CpcaStar,
}

impl From<MethodArg> for cpca::Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Cpca => cpca::Method::Cpca,
            MethodArg::CpcaStar => cpca::Method::CpcaStar,
        }
    }
}

const CONTRAST_HELP: &str = "Contrast parameter in [0, 1]: alpha in A = (1-alpha) C+ - alpha C- for \
cpca, beta in B = (1-beta) I + beta C- for cpca-star. The original cPCA form C+ - a C- \
(a >= 0) corresponds to a = alpha / (1 - alpha); convert before passing.";

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum, default_value = "cpca-star")]
    pub method: MethodArg,
    #[arg(long, help = CONTRAST_HELP)]
    pub contrast: f64,
    /// Output dimension.
    #[arg(short, long, default_value_t = 2)]
    pub k: usize,
    /// Subtract per-class means before forming second moments.
    #[arg(long)]
    pub center: bool,
    /// Ridge added to B (cpca-star only; needed when beta = 1 and C- is singular).
    #[arg(long)]
    pub ridge: Option<f64>,
    /// Model file (default: $CPCA_OUT_DIR/model.json).
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// Also write every sample's coordinates in the subspace as CSV.
    #[arg(long)]
    pub projections: Option<PathBuf>,
    /// Score LDA on this held-out fraction of the tagged positives as well.
    #[arg(long)]
    pub holdout: Option<f64>,
    /// Seed of the held-out split.
    #[arg(long, default_value_t = 0)]
    pub split_seed: u64,
}

#[derive(Debug, Args)]
pub struct StreamArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value_t = 0.9)]
    pub beta: f64,
    #[arg(short, long, default_value_t = 2)]
    pub k: usize,
    /// Learning rate, 0 < eta < tau.
    #[arg(long, default_value_t = 0.003)]
    pub eta: f64,
    /// Ratio between the W and M learning rates.
    #[arg(long, default_value_t = 1.0)]
    pub tau: f64,
    /// Passes over the dataset, reshuffled each time.
    #[arg(long, default_value_t = 250)]
    pub epochs: usize,
    /// Number of independent runs.
    #[arg(long, default_value_t = 5)]
    pub seeds: u64,
    /// First seed; runs use seed-base, seed-base+1, ...
    #[arg(long, default_value_t = 0)]
    pub seed_base: u64,
    /// Steps between alignment measurements.
    #[arg(long, default_value_t = 1000)]
    pub record_every: usize,
    /// Offline cPCA* model to measure alignment against (fit internally when absent).
    #[arg(long)]
    pub oracle: Option<PathBuf>,
    /// Present samples in file order instead of shuffling each epoch.
    #[arg(long)]
    pub no_shuffle: bool,
    /// Decay the learning rate as eta / (1 + t / t0).
    #[arg(long)]
    pub decay_t0: Option<f64>,
    /// Trajectory CSV (default: $CPCA_OUT_DIR/stream.csv).
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// Directory for the final network state of every seed.
    #[arg(long)]
    pub state_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricArg {
    Lda,
    SymKl,
}

impl From<MetricArg> for cpca::eval::Metric {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::Lda => cpca::eval::Metric::Lda,
            MetricArg::SymKl => cpca::eval::Metric::SymKl,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub start: f64,
    pub end: f64,
    pub points: usize,
}

impl GridSpec {
    pub fn values(&self) -> Vec<f64> {
        cpca::eval::linear_grid(self.start, self.end, self.points)
    }
}

/// Parses `start:end:points`.
pub fn parse_grid(s: &str) -> Result<GridSpec, String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("expected start:end:points, got {s:?}"));
    }
    let num = |p: &str| {
        p.trim()
            .parse::<f64>()
            .map_err(|_| format!("{p:?} is not a number"))
    };
    let start = num(parts[0])?;
    let end = num(parts[1])?;
    let points: usize = parts[2]
        .trim()
        .parse()
        .map_err(|_| format!("{:?} is not a point count", parts[2]))?;
    if points == 0 {
        return Err("grid needs at least one point".into());
    }
    if !(0.0..=1.0).contains(&start) || !(0.0..=1.0).contains(&end) {
        return Err("grid endpoints must lie in [0, 1]".into());
    }
    if points > 1 && start >= end {
        return Err("grid start must be below its end".into());
    }
    if points == 1 && start != end {
        return Err("a single-point grid needs start == end".into());
    }
    Ok(GridSpec { start, end, points })
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum, default_value = "cpca-star")]
    pub method: MethodArg,
    /// Contrast grid as start:end:points.
    #[arg(long, default_value = "0:1:51", value_parser = parse_grid)]
    pub grid: GridSpec,
    #[arg(short, long, default_value_t = 2)]
    pub k: usize,
    #[arg(long, value_enum, default_value = "lda")]
    pub metric: MetricArg,
    /// Score a grid point counts as good above (default 0.9 for lda, 0.5 x max for sym-kl).
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Interpret the threshold as a fraction of the best score on the grid.
    #[arg(long)]
    pub relative: bool,
    #[arg(long)]
    pub center: bool,
    /// Output stem; `.json` and `.csv` are appended
    /// (default: $CPCA_OUT_DIR/sweep-<method>-<metric>).
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PlotKind {
    Scatter,
    Curve,
    Barcode,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    /// Projection CSV (scatter), sweep report JSON (curve, barcode) or
    /// stream trajectory CSV (curve).
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub kind: PlotKind,
    /// SVG file (default: $CPCA_OUT_DIR/<kind>.svg).
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// Barcode threshold (default: the report's own, else 0.9).
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub title: Option<String>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Model file.
    pub model: PathBuf,
    /// Second model: prints the projector alignment of the two.
    pub other: Option<PathBuf>,
    /// Tagged dataset: prints LDA accuracy and symmetrized KL of the model's projections.
    #[arg(long, conflicts_with = "other")]
    pub data: Option<PathBuf>,
    #[command(flatten)]
    pub csv: CsvArgs,
    /// Machine-readable output.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Random instances per property.
    #[arg(long, default_value_t = 20)]
    pub cases: usize,
    /// Also write the results as JSON.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}
