//! `ia`: batch front end for the scientometrics engine.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::builder::BoolishValueParser;
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use output::Format;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "ia",
    version,
    about = "Citation indices, rankings, ratings, review and recommendations"
)]
pub struct Cli {
    /// key = value configuration file; flags and IA_* variables override it
    #[arg(long, global = true, env = "IA_CONFIG")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, env = "IA_FORMAT", value_enum)]
    pub format: Option<Format>,
    /// Treat dangling references and unknown download targets as errors
    #[arg(long, global = true, env = "IA_STRICT", num_args = 0..=1, require_equals = true, default_missing_value = "true",
          value_parser = BoolishValueParser::new())]
    pub strict: Option<bool>,
    /// Evaluation year; defaults to the newest paper year in the corpus
    #[arg(long, global = true, env = "IA_NOW_YEAR")]
    pub now_year: Option<i32>,
    #[arg(long, global = true, env = "IA_SEED")]
    pub seed: Option<u64>,
    /// Corpus directory or a single corpus .jsonl file
    #[arg(long, global = true, env = "IA_CORPUS")]
    pub corpus: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a corpus and summarize it
    Ingest {
        /// Corpus directory or files (default: --corpus)
        paths: Vec<PathBuf>,
    },
    /// Citation indices
    Metrics {
        #[command(subcommand)]
        which: MetricsCmd,
    },
    /// Rank candidates from a score matrix CSV
    Rank(RankArgs),
    /// Rater reputations from a rating ledger
    Reputation(ReputationArgs),
    /// Reputation-weighted rating aggregate of one item
    Aggregate(AggregateArgs),
    /// Raters who systematically deviate from their peers
    Anomalies(AnomalyArgs),
    /// Replay a review event log
    Review(ReviewArgs),
    /// Recommend related papers
    Recommend(RecommendArgs),
    /// Popularity-biased randomized display order
    DisplayOrder(DisplayArgs),
    /// Match subscriptions against corpus papers
    Alerts(AlertArgs),
}

#[derive(Debug, Subcommand)]
pub enum MetricsCmd {
    /// h, g, e, contemporary h, AWCR, individual h and h_m of an author
    Author {
        id: String,
        #[arg(long, env = "IA_GAMMA")]
        gamma: Option<f64>,
        #[arg(long, env = "IA_DELTA")]
        delta: Option<f64>,
        /// Round h_m down to an integer
        #[arg(long, env = "IA_HM_FLOOR", num_args = 0..=1, require_equals = true, default_missing_value = "true",
              value_parser = BoolishValueParser::new())]
        hm_floor: Option<bool>,
    },
    /// Citation counts and age of a paper
    Paper {
        id: String,
        /// Also count citations made in this year
        #[arg(long)]
        year: Option<i32>,
    },
    /// Impact factor, immediacy and cited half-life of a journal
    Journal {
        id: String,
        /// Reference year (default: now year)
        #[arg(long)]
        year: Option<i32>,
        #[arg(long, env = "IA_JIF_WINDOW")]
        window: Option<u32>,
    },
    /// Eigenfactor and Article Influence of all journals
    Eigenfactor {
        #[arg(long)]
        year: Option<i32>,
        #[arg(long, env = "IA_EIGENFACTOR_WINDOW")]
        window: Option<u32>,
        #[arg(long, env = "IA_DAMPING")]
        damping: Option<f64>,
        #[arg(long, env = "IA_TOL")]
        tol: Option<f64>,
        #[arg(long, env = "IA_MAX_ITER")]
        max_iter: Option<usize>,
    },
    /// h_b and m-number of a topic tag
    Topic { tag: String },
    /// Field constants, aggregate impact factor and optionally an author's h_f
    Field {
        id: String,
        #[arg(long)]
        year: Option<i32>,
        #[arg(long, env = "IA_JIF_WINDOW")]
        window: Option<u32>,
        #[arg(long)]
        author: Option<String>,
    },
    /// Number of papers citing both a and b
    Cocitation { a: String, b: String },
    /// Most co-cited paper pairs
    Cocited {
        #[arg(long, env = "IA_K")]
        k: Option<usize>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum RankMode {
    Weighted,
    Talent,
    League,
}

#[derive(Debug, Args)]
pub struct RankArgs {
    /// CSV: header `candidate,<criterion>...`, one row per candidate
    pub matrix: PathBuf,
    /// Comma-separated criterion weights summing to 1
    #[arg(long)]
    pub weights: Option<String>,
    #[arg(long, value_enum, default_value = "weighted")]
    pub mode: RankMode,
    #[arg(long, env = "IA_Y_A")]
    pub y_a: Option<f64>,
    #[arg(long, env = "IA_Y_B")]
    pub y_b: Option<f64>,
    #[arg(long, env = "IA_Y_C")]
    pub y_c: Option<f64>,
}

#[derive(Debug, Args)]
pub struct LedgerArgs {
    /// Rating ledger (JSONL)
    pub ratings: PathBuf,
    /// Evaluation time in epoch seconds (default: latest rating)
    #[arg(long)]
    pub at: Option<i64>,
}

#[derive(Debug, Args)]
pub struct ReputationArgs {
    #[command(flatten)]
    pub ledger: LedgerArgs,
    /// JSON object user -> authored item ids (default: taken from the corpus)
    #[arg(long)]
    pub authored: Option<PathBuf>,
    #[arg(long, env = "IA_REPUTATION_DAMPING")]
    pub damping: Option<f64>,
    #[arg(long, env = "IA_REPUTATION_TOL")]
    pub tol: Option<f64>,
    #[arg(long, env = "IA_REPUTATION_MAX_ITER")]
    pub max_iter: Option<usize>,
}

#[derive(Debug, Args)]
pub struct AggregateArgs {
    #[command(flatten)]
    pub ledger: LedgerArgs,
    pub item: String,
    /// Named venue weighting from the config file (default: uniform)
    #[arg(long)]
    pub venue: Option<String>,
}

#[derive(Debug, Args)]
pub struct AnomalyArgs {
    #[command(flatten)]
    pub ledger: LedgerArgs,
    #[arg(long, env = "IA_MIN_OVERLAP")]
    pub min_overlap: Option<usize>,
    #[arg(long, env = "IA_Z_THRESHOLD")]
    pub z_threshold: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ReviewArgs {
    /// Review event log (JSONL)
    pub log: PathBuf,
    /// Also write the transition audit log here (JSONL)
    #[arg(long)]
    pub audit_out: Option<PathBuf>,
    #[arg(long, env = "IA_ROUND_SIZE")]
    pub round_size: Option<usize>,
    #[arg(long, env = "IA_REVIEW_THRESHOLD")]
    pub threshold: Option<f64>,
    #[arg(long, env = "IA_ALLOW_REPEAT_ROUNDS", num_args = 0..=1, require_equals = true, default_missing_value = "true",
          value_parser = BoolishValueParser::new())]
    pub allow_repeat_rounds: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum RecommendBy {
    Tags,
    Coaccess,
}

#[derive(Debug, Args)]
pub struct RecommendArgs {
    pub paper: String,
    #[arg(long, value_enum)]
    pub by: RecommendBy,
    #[arg(long, env = "IA_K")]
    pub k: Option<usize>,
}

#[derive(Debug, Args)]
pub struct DisplayArgs {
    #[arg(long, env = "IA_TEMPERATURE")]
    pub temperature: Option<f64>,
    /// CSV `id,popularity` (default: distinct-user downloads in the corpus)
    #[arg(long)]
    pub items: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AlertArgs {
    /// Subscriptions (JSONL)
    pub subscriptions: PathBuf,
    /// Only papers from this year on count as new
    #[arg(long)]
    pub since_year: Option<i32>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match commands::run(cli) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            if matches!(e, CliError::Usage(_)) {
                eprintln!("\nUsage: ia [OPTIONS] <COMMAND>\nFor more information, try '--help'.");
            }
            ExitCode::from(e.exit_code())
        }
    }
}
