use std::path::PathBuf;

use adlens_core::classifiers::ModelKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "adlens",
    version,
    about = "Influencer analytics and sponsored-post detection",
    long_about = "Influencer analytics and sponsored-post detection.\n\n\
        Every command that writes files also writes run_manifest.json into its output \
        directory. Set ADLENS_LOG=debug|info|warn to control logging."
)]
pub struct Cli {
    /// Master seed; each stochastic stage derives its own seed from it.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic corpus with a ground-truth manifest.
    Synth(SynthArgs),
    /// Serve a dataset directory over the fixture HTTP API.
    Serve(ServeArgs),
    /// Crawl a fixture API: hashtag discovery, then author timelines.
    Crawl(CrawlArgs),
    /// Label posts and stories with the disclosure rules and draw a
    /// validation sample of accounts.
    Label(LabelArgs),
    /// Assign every profile to a follower tier.
    Tier(TierArgs),
    /// Engagement, latency, repeat-commenter, share and category tables.
    Analyze(AnalyzeArgs),
    /// Build classifier examples (tokens plus numeric features).
    Featurize(FeaturizeArgs),
    /// Balance by under-sampling, then split into train and test sets.
    Split(SplitArgs),
    /// Fit a classifier on a training set.
    Train(TrainArgs),
    /// Score a fitted model on a test set, optionally with k-fold
    /// cross-validation.
    Eval(EvalArgs),
    /// Flag undisclosed posts that the model scores as sponsored.
    DetectHidden(DetectArgs),
    /// Rates of the textual promotion signals in sponsored and other posts.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Jsonl,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Forest,
    Contextual,
}

impl From<ModelArg> for ModelKind {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Forest => ModelKind::Forest,
            ModelArg::Contextual => ModelKind::Contextual,
        }
    }
}

/// Disclosure hashtags, shared by the commands that label or scrub.
#[derive(Debug, Args)]
pub struct TagArgs {
    /// Comma-separated disclosure hashtags (default: ad, advert, sponsored,
    /// advertising, giveaway, spon, sponsor).
    #[arg(long, value_delimiter = ',')]
    pub tags: Option<Vec<String>>,
}

/// A dataset directory plus an optional labels file.
#[derive(Debug, Args)]
pub struct LabeledInput {
    /// Dataset directory (profiles.jsonl, posts.jsonl, stories.jsonl).
    #[arg(long)]
    pub input: PathBuf,

    /// Labels file from `adlens label`. Defaults to labels.jsonl or
    /// labels.csv in the input directory, else the posts are labeled on
    /// the fly.
    #[arg(long)]
    pub labels: Option<PathBuf>,

    #[command(flatten)]
    pub tags: TagArgs,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Generator configuration (JSON). Missing fields take their defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,

    /// Total number of posts (overrides the config).
    #[arg(long)]
    pub posts: Option<usize>,

    /// Share of truly sponsored posts (overrides the config).
    #[arg(long)]
    pub sponsored_fraction: Option<f64>,

    /// Share of posts that are sponsored without disclosure (overrides the
    /// config).
    #[arg(long)]
    pub hidden_fraction: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Dataset directory to serve.
    #[arg(long)]
    pub input: PathBuf,

    /// Address to listen on; port 0 picks a free port.
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub bind: String,
}

#[derive(Debug, Args)]
pub struct CrawlArgs {
    /// Base URL of the fixture API.
    #[arg(long)]
    pub url: String,

    /// Output directory for the crawled dataset.
    #[arg(long)]
    pub out: PathBuf,

    /// Crawl configuration (JSON: seed_hashtags, page_size, max_pages).
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// Comma-separated seed hashtags (overrides the config).
    #[arg(long, value_delimiter = ',')]
    pub tags: Option<Vec<String>>,

    #[arg(long)]
    pub page_size: Option<usize>,

    /// Page budget per hashtag.
    #[arg(long)]
    pub max_pages: Option<usize>,
}

#[derive(Debug, Args)]
pub struct LabelArgs {
    /// Dataset directory.
    #[arg(long)]
    pub input: PathBuf,

    #[arg(long)]
    pub out: PathBuf,

    #[command(flatten)]
    pub tags: TagArgs,

    /// Share of accounts with at most 10K followers drawn for validation.
    #[arg(long, default_value_t = 0.25)]
    pub validation_fraction: f64,

    #[arg(long, value_enum, default_value_t = Format::Jsonl)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct TierArgs {
    /// Dataset directory.
    #[arg(long)]
    pub input: PathBuf,

    #[arg(long)]
    pub out: PathBuf,

    #[arg(long, value_enum, default_value_t = Format::Jsonl)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub data: LabeledInput,

    #[arg(long)]
    pub out: PathBuf,

    /// csv writes one table per figure; jsonl writes analytics.json.
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct FeaturizeArgs {
    #[command(flatten)]
    pub data: LabeledInput,

    #[arg(long)]
    pub out: PathBuf,

    /// Keep disclosure hashtags in the features.
    #[arg(long)]
    pub no_scrub: bool,

    /// Leave the biography out of the text channel.
    #[arg(long)]
    pub no_bio: bool,

    /// csv also writes numeric.csv, sequences.jsonl and vocab.json.
    #[arg(long, value_enum, default_value_t = Format::Jsonl)]
    pub format: Format,

    /// Vocabulary size for the csv sequence export.
    #[arg(long, default_value_t = 5_000)]
    pub vocab_size: usize,

    /// Sequence length for the csv sequence export.
    #[arg(long, default_value_t = 60)]
    pub max_len: usize,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    /// examples.jsonl from `adlens featurize`.
    #[arg(long)]
    pub input: PathBuf,

    #[arg(long)]
    pub out: PathBuf,

    #[arg(long, default_value_t = 0.2)]
    pub test_fraction: f64,

    /// Split without under-sampling first.
    #[arg(long)]
    pub no_balance: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long, value_enum)]
    pub model: ModelArg,

    /// Training examples (JSONL).
    #[arg(long, alias = "train")]
    pub input: PathBuf,

    #[arg(long)]
    pub out: PathBuf,

    /// Model configuration (JSON, tagged with "model").
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// Training epochs of the contextual model.
    #[arg(long)]
    pub epochs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// model.json from `adlens train`.
    #[arg(long)]
    pub model_file: PathBuf,

    /// Test examples (JSONL).
    #[arg(long)]
    pub input: PathBuf,

    #[arg(long)]
    pub out: PathBuf,

    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,

    /// Also run k-fold cross-validation, refitting the model's
    /// configuration on each fold.
    #[arg(long)]
    pub folds: Option<usize>,

    /// Examples for cross-validation (defaults to --input).
    #[arg(long)]
    pub cv_input: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    /// model.json from `adlens train`.
    #[arg(long)]
    pub model_file: PathBuf,

    #[command(flatten)]
    pub data: LabeledInput,

    #[arg(long)]
    pub out: PathBuf,

    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,

    /// Ground-truth manifest; defaults to manifest.jsonl in the input
    /// directory when present.
    #[arg(long)]
    pub manifest: Option<PathBuf>,

    /// Keep disclosure hashtags in the features (match `featurize`).
    #[arg(long)]
    pub no_scrub: bool,

    /// Leave the biography out of the text channel (match `featurize`).
    #[arg(long)]
    pub no_bio: bool,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[command(flatten)]
    pub data: LabeledInput,

    #[arg(long)]
    pub out: PathBuf,

    /// csv writes signals.csv; jsonl writes signals.json.
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}
