//! Command-line surface: subcommands, flags, and the small value parsers
//! bridging to the library's string forms.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use hyperdoc::eval::FeatureMode;
use hyperdoc::rank::Strategy;
use hyperdoc::train::InitMode;
use hyperdoc::ModelKind;

fn kind(s: &str) -> Result<ModelKind, String> {
    s.parse()
}

fn strategy(s: &str) -> Result<Strategy, String> {
    s.parse()
}

fn init_mode(s: &str) -> Result<InitMode, String> {
    s.parse()
}

fn feature_mode(s: &str) -> Result<FeatureMode, String> {
    s.parse()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConvertMode {
    Caw,
    Nc,
    Cac,
}

fn convert_mode(s: &str) -> Result<ConvertMode, String> {
    Ok(match s {
        "caw" => ConvertMode::Caw,
        "nc" => ConvertMode::Nc,
        "cac" => ConvertMode::Cac,
        other => Err(format!("unknown conversion `{other}` (expected caw, nc, or cac)"))?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Section {
    In,
    Out,
}

fn section(s: &str) -> Result<Section, String> {
    Ok(match s {
        "I" | "i" | "in" => Section::In,
        "O" | "o" | "out" => Section::Out,
        other => Err(format!("unknown section `{other}` (expected I or O)"))?,
    })
}

#[derive(Parser)]
#[command(
    name = "hyperdoc",
    version,
    about = "Hypertext document embeddings: train, rank, and evaluate",
    after_help = "Exit codes: 0 success, 2 configuration or usage error, \
                  3 I/O error, 4 malformed input file."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Downcast a hyper-document corpus to a plain word corpus
    Convert(ConvertArgs),
    /// Train an embedding model and save it
    Train(TrainArgs),
    /// Evaluate citation recommendation on held-out contexts
    EvalRec(EvalRecArgs),
    /// Classify labeled documents from embedding features
    EvalClf(EvalClfArgs),
    /// Recommend documents for a citation context
    Recommend(RecommendArgs),
    /// Nearest neighbors of a word or document vector
    Nn(NnArgs),
    /// Dump model matrices as plain text
    Export(ExportArgs),
}

#[derive(Args)]
pub struct ConvertArgs {
    /// Hyper-document corpus, one JSON record per line
    #[arg(long)]
    pub input: PathBuf,
    /// caw (citation-as-word), nc (no-citation), or cac (context-as-content)
    #[arg(long, value_parser = convert_mode)]
    pub mode: ConvertMode,
    /// Converted corpus destination
    #[arg(long)]
    pub output: PathBuf,
    /// Context window (words per side) for cac extraction
    #[arg(long, default_value_t = 50)]
    pub window: usize,
}

/// Training hyperparameters; unset flags fall back to the config file, then
/// to built-in defaults.
#[derive(Args, Clone, Default)]
pub struct TrainOverrides {
    /// Embedding dimension
    #[arg(long)]
    pub dim: Option<usize>,
    /// Context window, words per side
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Negative samples per update
    #[arg(long)]
    pub negatives: Option<usize>,
    /// Initial learning rate
    #[arg(long)]
    pub alpha0: Option<f64>,
    /// Learning-rate floor
    #[arg(long)]
    pub alpha_min: Option<f64>,
    /// Discard words seen fewer times than this
    #[arg(long)]
    pub min_count: Option<u64>,
    /// Frequency subsampling threshold (0 disables)
    #[arg(long)]
    pub subsample: Option<f64>,
    /// RNG seed (also settable via HYPERDOC_SEED)
    #[arg(long)]
    pub seed: Option<u64>,
    /// Hogwild worker threads; 1 is exactly sequential
    #[arg(long)]
    pub workers: Option<usize>,
    /// Citation-model initialization: pvdm or random
    #[arg(long, value_parser = init_mode)]
    pub init: Option<InitMode>,
    /// Content epochs before the citation phase
    #[arg(long)]
    pub init_epochs: Option<usize>,
}

#[derive(Args)]
pub struct TrainArgs {
    /// Corpus file; citation marks are kept as pseudo-words for word/doc
    /// kinds (run `convert` first for the nc/cac variants)
    #[arg(long)]
    pub input: PathBuf,
    /// cbow, skipgram, pvdm, pvdbow, or hd2v
    #[arg(long, value_parser = kind)]
    pub kind: ModelKind,
    /// Model file destination
    #[arg(long)]
    pub output: PathBuf,
    /// TOML config file (flag > file > default)
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: TrainOverrides,
}

#[derive(Args)]
pub struct EvalRecArgs {
    /// Trained model file
    #[arg(long)]
    pub model: PathBuf,
    /// Held-out hyper-document corpus providing citation contexts
    #[arg(long)]
    pub test: PathBuf,
    /// i4o, i4i, or d2v
    #[arg(long, value_parser = strategy)]
    pub strategy: Option<Strategy>,
    #[arg(long)]
    pub top_k: Option<usize>,
    /// Keep only queries with at least one never-cited ground truth
    #[arg(long)]
    pub newcomer_only: bool,
    /// Context window for query extraction
    #[arg(long, default_value_t = 50)]
    pub window: usize,
    /// Write per-query outcomes as JSON lines
    #[arg(long)]
    pub per_query: Option<PathBuf>,
    /// Gradient steps for d2v inference
    #[arg(long)]
    pub infer_steps: Option<usize>,
    /// Seed for d2v inference
    #[arg(long)]
    pub seed: Option<u64>,
    /// TOML config file
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Args)]
pub struct EvalClfArgs {
    /// Trained model file
    #[arg(long)]
    pub model: PathBuf,
    /// Labels file: doc-id<TAB>label per line
    #[arg(long)]
    pub labels: PathBuf,
    /// Feature layout: in (dim k) or concat (IN ⊕ OUT, dim 2k)
    #[arg(long, value_parser = feature_mode)]
    pub features: Option<FeatureMode>,
    /// Keep only documents cited at least once in training
    #[arg(long)]
    pub cited_only: bool,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    /// Seed for fold assignment and classifier SGD
    #[arg(long)]
    pub seed: Option<u64>,
    /// TOML config file
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Args)]
pub struct RecommendArgs {
    /// Trained model file
    #[arg(long)]
    pub model: PathBuf,
    /// Context words, whitespace separated
    #[arg(long, conflicts_with = "context_file", required_unless_present = "context_file")]
    pub context: Option<String>,
    /// File containing the context words
    #[arg(long)]
    pub context_file: Option<PathBuf>,
    /// i4o, i4i, or d2v
    #[arg(long, value_parser = strategy)]
    pub strategy: Option<Strategy>,
    #[arg(long)]
    pub top_k: Option<usize>,
    /// Document ids to drop from the candidates (repeatable)
    #[arg(long)]
    pub exclude: Vec<String>,
    /// Gradient steps for d2v inference
    #[arg(long)]
    pub infer_steps: Option<usize>,
    /// Seed for d2v inference
    #[arg(long)]
    pub seed: Option<u64>,
    /// TOML config file
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Args)]
pub struct NnArgs {
    /// Trained model file
    #[arg(long)]
    pub model: PathBuf,
    /// Query word
    #[arg(long, conflicts_with = "doc", required_unless_present = "doc")]
    pub word: Option<String>,
    /// Query document id
    #[arg(long)]
    pub doc: Option<String>,
    /// Vector section: I (input) or O (output)
    #[arg(long, value_parser = section, default_value = "I")]
    pub section: Section,
    #[arg(long, default_value_t = 10)]
    pub top_k: usize,
}

#[derive(Args)]
pub struct ExportArgs {
    /// Trained model file
    #[arg(long)]
    pub model: PathBuf,
    /// Text destination
    #[arg(long)]
    pub output: PathBuf,
}
