use std::path::PathBuf;

use chrono::NaiveDate;
use clap::builder::RangedU64ValueParser;
use clap::{Args, Parser, Subcommand, ValueEnum};
use fftree::ingest::FactorUnit;
use fftree::DisplayUnit;
use fftree_client::ArchiveKind;

/// Regression trees on the Fama-French three factors.
#[derive(Debug, Parser)]
#[command(name = "fftree", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Download (or read from cache) a factor file and print it.
    Fetch {
        /// Which library file to fetch.
        #[arg(long, default_value = "daily-factors")]
        kind: ArchiveKind,
        #[command(flatten)]
        fetch: FetchArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build the dataset CSV from price files and a factor file.
    Ingest(IngestArgs),
    /// Summary statistics and covariance of the return columns.
    Stats(StatsArgs),
    /// Fit a regression tree.
    Fit(FitArgs),
    /// Three-factor OLS loadings per target.
    Ols(OlsArgs),
    /// Root-split diagnostics: balance, leaf returns, dominance shares.
    Report(ReportArgs),
    /// Solo and joint stumps for every ticker against an anchor.
    Replicate(ReplicateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Dot,
    Csv,
}

impl std::fmt::Display for Format {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let v = self.to_possible_value().expect("no skipped variants");
        f.write_str(v.get_name())
    }
}

#[derive(Debug, Args)]
pub struct FetchArgs {
    /// Override the library URL.
    #[arg(long)]
    pub factor_url: Option<String>,
    /// Cache root for downloads.
    #[arg(long, env = "FACTOR_CACHE_DIR")]
    pub cache_dir: Option<PathBuf>,
    /// Download again even when a cached copy exists.
    #[arg(long)]
    pub refresh: bool,
    /// Network timeout in seconds.
    #[arg(long, default_value_t = 30, value_parser = clap::value_parser!(u64).range(1..))]
    pub timeout: u64,
}

impl FetchArgs {
    pub fn cache_dir(&self) -> PathBuf {
        if let Some(dir) = &self.cache_dir {
            return dir.clone();
        }
        let base = std::env::var_os("XDG_CACHE_HOME")
            .map(PathBuf::from)
            .or_else(|| std::env::var_os("HOME").map(|h| PathBuf::from(h).join(".cache")));
        match base {
            Some(b) => b.join("fftree"),
            None => PathBuf::from(".fftree-cache"),
        }
    }
}

#[derive(Debug, Args)]
pub struct TreeArgs {
    #[arg(long, default_value_t = 1, value_parser = RangedU64ValueParser::<usize>::new().range(1..=64))]
    pub max_depth: usize,
    #[arg(long, default_value_t = 1, value_parser = RangedU64ValueParser::<usize>::new().range(1..))]
    pub min_samples_leaf: usize,
    /// Smallest squared-error reduction worth a split.
    #[arg(long, default_value_t = 0.0)]
    pub min_cost_drop: f64,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// One price CSV per ticker.
    #[arg(long, num_args = 1..)]
    pub prices: Vec<PathBuf>,
    /// Ticker names for the price files, in order; defaults to file stems.
    #[arg(long, value_delimiter = ',')]
    pub tickers: Vec<String>,
    /// Daily factor file; fetched from the library when omitted.
    #[arg(long)]
    pub factors: Option<PathBuf>,
    #[arg(long, default_value = "percent")]
    pub factor_unit: FactorUnit,
    #[arg(long)]
    pub start: Option<NaiveDate>,
    #[arg(long)]
    pub end: Option<NaiveDate>,
    #[arg(long, default_value = "Date")]
    pub date_column: String,
    #[arg(long, default_value = "Adj Close")]
    pub price_column: String,
    /// Generate N rows of synthetic data instead of reading files.
    #[arg(long, conflicts_with_all = ["prices", "factors"])]
    pub synthetic: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub fetch: FetchArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, value_delimiter = ',')]
    pub targets: Vec<String>,
    /// Also summarize the factor columns.
    #[arg(long)]
    pub factors: bool,
    #[arg(long, default_value = "text")]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, value_delimiter = ',')]
    pub targets: Vec<String>,
    #[command(flatten)]
    pub tree: TreeArgs,
    #[arg(long, default_value = "text")]
    pub format: Format,
    #[arg(long, default_value = "decimal")]
    pub unit: DisplayUnit,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OlsArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, value_delimiter = ',')]
    pub targets: Vec<String>,
    /// Regress `R - rf`, taking rf from the factor file.
    #[arg(long)]
    pub excess: bool,
    #[arg(long, requires = "excess")]
    pub factors: Option<PathBuf>,
    #[arg(long, default_value = "percent")]
    pub factor_unit: FactorUnit,
    #[command(flatten)]
    pub fetch: FetchArgs,
    #[arg(long, default_value = "text")]
    pub format: Format,
    #[arg(long, default_value = "decimal")]
    pub unit: DisplayUnit,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, value_delimiter = ',')]
    pub targets: Vec<String>,
    /// Report on a saved tree instead of fitting one.
    #[arg(long = "tree", conflicts_with_all = ["max_depth", "min_samples_leaf", "min_cost_drop"])]
    pub tree_json: Option<PathBuf>,
    #[command(flatten)]
    pub tree: TreeArgs,
    #[arg(long, default_value = "text")]
    pub format: Format,
    #[arg(long, default_value = "bp")]
    pub unit: DisplayUnit,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReplicateArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, value_delimiter = ',')]
    pub targets: Vec<String>,
    #[arg(long)]
    pub anchor: String,
    #[command(flatten)]
    pub tree: TreeArgs,
    #[arg(long, default_value = "text")]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
