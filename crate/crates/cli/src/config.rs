//! TOML run configuration and precedence resolution: CLI flag > config
//! file > HYPERDOC_SEED (seed only) > built-in default. The effective
//! configuration is echoed to stderr for provenance.

use std::path::Path;

use serde::Deserialize;

use hyperdoc::rank::{InferParams, Strategy};
use hyperdoc::train::TrainConfig;
use hyperdoc::ModelKind;

use crate::args::TrainOverrides;
use crate::error::CliError;

pub const SEED_ENV: &str = "HYPERDOC_SEED";

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    #[serde(default)]
    pub train: TrainSection,
    #[serde(default)]
    pub rank: RankSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    pub dim: Option<usize>,
    pub window: Option<usize>,
    pub epochs: Option<usize>,
    pub negatives: Option<usize>,
    pub alpha0: Option<f64>,
    pub alpha_min: Option<f64>,
    pub min_count: Option<u64>,
    pub subsample: Option<f64>,
    pub workers: Option<usize>,
    pub init: Option<String>,
    pub init_epochs: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RankSection {
    pub strategy: Option<String>,
    pub top_k: Option<usize>,
    pub infer_steps: Option<usize>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text)
            .map_err(|e| CliError::Config(format!("config file {}: {e}", path.display())))
    }
}

fn env_seed() -> Result<Option<u64>, CliError> {
    match std::env::var(SEED_ENV) {
        Ok(raw) => raw
            .parse::<u64>()
            .map(Some)
            .map_err(|_| CliError::Config(format!("{SEED_ENV} must be an unsigned integer, got `{raw}`"))),
        Err(_) => Ok(None),
    }
}

/// Seed precedence: flag > file > environment > built-in.
pub fn resolve_seed(flag: Option<u64>, file: &FileConfig, default: u64) -> Result<u64, CliError> {
    Ok(flag
        .or(file.seed)
        .or(env_seed()?)
        .unwrap_or(default))
}

/// Builds the effective training configuration for a model kind.
pub fn resolve_train(
    kind: ModelKind,
    file: &FileConfig,
    flags: &TrainOverrides,
) -> Result<TrainConfig, CliError> {
    let mut cfg = match kind {
        ModelKind::Hd2v => TrainConfig::hd2v_defaults(),
        _ => TrainConfig::default(),
    };
    let t = &file.train;
    let file_init = t
        .init
        .as_deref()
        .map(|s| s.parse().map_err(CliError::Config))
        .transpose()?;

    cfg.dim = flags.dim.or(t.dim).unwrap_or(cfg.dim);
    cfg.window = flags.window.or(t.window).unwrap_or(cfg.window);
    cfg.epochs = flags.epochs.or(t.epochs).unwrap_or(cfg.epochs);
    cfg.negatives = flags.negatives.or(t.negatives).unwrap_or(cfg.negatives);
    cfg.alpha0 = flags.alpha0.or(t.alpha0).unwrap_or(cfg.alpha0);
    cfg.alpha_min = flags.alpha_min.or(t.alpha_min).unwrap_or(cfg.alpha_min);
    cfg.min_count = flags.min_count.or(t.min_count).unwrap_or(cfg.min_count);
    cfg.subsample = flags.subsample.or(t.subsample).unwrap_or(cfg.subsample);
    cfg.workers = flags.workers.or(t.workers).unwrap_or(cfg.workers);
    cfg.init = flags.init.or(file_init).unwrap_or(cfg.init);
    cfg.init_epochs = flags.init_epochs.or(t.init_epochs).unwrap_or(cfg.init_epochs);
    cfg.seed = resolve_seed(flags.seed, file, cfg.seed)?;
    Ok(cfg)
}

/// Ranking parameters shared by eval-rec and recommend.
pub struct RankParams {
    pub strategy: Strategy,
    pub top_k: usize,
    pub infer: InferParams,
}

pub fn resolve_rank(
    strategy: Option<Strategy>,
    top_k: Option<usize>,
    infer_steps: Option<usize>,
    seed: Option<u64>,
    file: &FileConfig,
) -> Result<RankParams, CliError> {
    let file_strategy = file
        .rank
        .strategy
        .as_deref()
        .map(|s| s.parse().map_err(CliError::Config))
        .transpose()?;
    let defaults = InferParams::default();
    let infer = InferParams {
        steps: infer_steps.or(file.rank.infer_steps).unwrap_or(defaults.steps),
        seed: resolve_seed(seed, file, defaults.seed)?,
        ..defaults
    };
    Ok(RankParams {
        strategy: strategy.or(file_strategy).unwrap_or(Strategy::I4O),
        top_k: top_k.or(file.rank.top_k).unwrap_or(10),
        infer,
    })
}

pub fn echo_train(kind: ModelKind, cfg: &TrainConfig) {
    eprintln!("# effective config");
    eprintln!("kind = \"{kind}\"");
    eprintln!("dim = {}", cfg.dim);
    eprintln!("window = {}", cfg.window);
    eprintln!("epochs = {}", cfg.epochs);
    eprintln!("negatives = {}", cfg.negatives);
    eprintln!("alpha0 = {}", cfg.alpha0);
    eprintln!("alpha_min = {}", cfg.alpha_min);
    eprintln!("min_count = {}", cfg.min_count);
    eprintln!("subsample = {}", cfg.subsample);
    eprintln!("seed = {}", cfg.seed);
    eprintln!("workers = {}", cfg.workers);
    eprintln!("init = \"{}\"", cfg.init);
    eprintln!("init_epochs = {}", cfg.init_epochs);
}

pub fn echo_rank(params: &RankParams) {
    eprintln!("# effective config");
    eprintln!("strategy = \"{}\"", params.strategy);
    eprintln!("top_k = {}", params.top_k);
    eprintln!("infer_steps = {}", params.infer.steps);
    eprintln!("seed = {}", params.infer.seed);
}
