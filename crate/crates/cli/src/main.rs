use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod output;

use output::Failure;

/// Feature graphs, importance scores and rule-set distances for rule-based classifiers.
#[derive(Debug, Parser)]
#[command(name = "rulegraph", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Seed for every random choice in the run.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    /// Output format; allowed values depend on the subcommand.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    /// Output file, or directory for train and synth.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Suppress warnings and informational output.
    #[arg(long, short, global = true)]
    pub quiet: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Dot,
    Graphml,
    Text,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Dataset CSV with a header row.
    pub data: PathBuf,

    /// Name of the class column.
    #[arg(long)]
    pub target: String,

    /// Fail on rows with missing cells instead of dropping them.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Debug, Args)]
pub struct MetricArgs {
    /// Feature relevance metric: error-increase or impurity-gain.
    #[arg(long, default_value = "error-increase")]
    pub feature_metric: String,

    /// Rule relevance metric: covering-error, support or confidence.
    #[arg(long, default_value = "covering-error")]
    pub rule_metric: String,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Nested cross-validated decision trees, exported as per-fold rule sets.
    Train {
        #[command(flatten)]
        data: DataArgs,
        /// Hyperparameter grid, e.g. "depth=3,4,none;leaf=1,5".
        #[arg(long)]
        grid: Option<String>,
        #[arg(long, default_value_t = 5)]
        folds: usize,
        #[arg(long, default_value_t = 3)]
        inner_folds: usize,
    },
    /// Build a feature graph from a dataset and a rule set.
    Graph {
        #[command(flatten)]
        data: DataArgs,
        /// Rule file (DSL, or JSON when the name ends in .json).
        rules: PathBuf,
        /// Only use rules predicting this class.
        #[arg(long = "class")]
        class: Option<String>,
        #[arg(long)]
        omit_self_edges: bool,
        #[command(flatten)]
        metrics: MetricArgs,
    },
    /// Pairwise Frobenius distances between the graphs of several rule sets.
    Compare {
        #[command(flatten)]
        data: DataArgs,
        /// Two or more rule files.
        #[arg(required = true, num_args = 1..)]
        rules: Vec<PathBuf>,
        #[arg(long = "class")]
        class: Option<String>,
        #[command(flatten)]
        metrics: MetricArgs,
    },
    /// Feature importance from a rule set or a tree, with optional top-k evaluation.
    Importance {
        #[command(flatten)]
        data: DataArgs,
        /// Rule file.
        #[arg(long, conflicts_with = "model")]
        rules: Option<PathBuf>,
        /// Tree model JSON as written by `train`.
        #[arg(long)]
        model: Option<PathBuf>,
        /// graph, gini or permutation.
        #[arg(long, default_value = "graph")]
        method: String,
        /// Comma-separated k values; retrains on the top-k features under cross-validation.
        #[arg(long, value_delimiter = ',')]
        topk: Vec<usize>,
        /// Shuffles per feature for permutation importance.
        #[arg(long, default_value_t = 10)]
        repeats: usize,
    },
    /// Generate synthetic datasets.
    Synth {
        /// JSON dataset specification.
        #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
        config: Option<PathBuf>,
        /// Built-in suite; `paper` writes the 150-dataset benchmark grid.
        #[arg(long, value_parser = ["paper"])]
        preset: Option<String>,
    },
    /// Mean pairwise Spearman correlation of importance ranks across models.
    Stability {
        #[command(flatten)]
        data: DataArgs,
        /// Tree depths, e.g. "3..8" or "3,5,8".
        #[arg(long, conflicts_with = "folds", required_unless_present = "folds")]
        depths: Option<String>,
        /// Number of cross-validation folds.
        #[arg(long)]
        folds: Option<usize>,
        /// Comma-separated methods.
        #[arg(long, value_delimiter = ',', default_value = "graph,gini,permutation")]
        methods: Vec<String>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .filter_level(if cli.quiet { log::LevelFilter::Error } else { log::LevelFilter::Warn })
        .format_timestamp(None)
        .format_target(false)
        .init();
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Failure::Usage("--jobs must be at least 1".into()).report();
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            return Failure::Run(e.to_string()).report();
        }
    }
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => f.report(),
    }
}
