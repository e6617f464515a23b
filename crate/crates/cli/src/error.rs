//! Error classes and their exit codes: configuration (2), I/O (3), and
//! malformed input files (4).

use hyperdoc::corpus::CorpusError;
use hyperdoc::eval::EvalError;
use hyperdoc::model::ModelError;
use hyperdoc::rank::RankError;
use hyperdoc::train::TrainError;
use thiserror::Error;

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_FORMAT: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Format(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Io(_) => EXIT_IO,
            CliError::Format(_) => EXIT_FORMAT,
        }
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        match e {
            CorpusError::Io(io) => CliError::Io(io),
            other => CliError::Format(other.to_string()),
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::Io(io) => CliError::Io(io),
            other => CliError::Format(other.to_string()),
        }
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::InvalidConfig(_) => CliError::Config(e.to_string()),
            other => CliError::Format(other.to_string()),
        }
    }
}

impl From<RankError> for CliError {
    fn from(e: RankError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::RaggedFeatures => CliError::Format(e.to_string()),
            EvalError::Rank(r) => r.into(),
            other => CliError::Config(other.to_string()),
        }
    }
}
