use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("level generation impossible: {0}")]
    GenerationImpossible(String),

    #[error("level {level_id} has non-positive best value {best}; normalized score undefined")]
    UndefinedNormalization { level_id: u32, best: i64 },

    #[error("invalid reward function id {0} (expected 0..=35)")]
    InvalidRewardFunction(u32),

    #[error("invalid trajectory: {0}")]
    InvalidTrajectory(String),

    #[error("invalid level: {0}")]
    InvalidLevel(String),

    #[error("{what} is not ready: {why}")]
    NotReady { what: &'static str, why: String },

    #[error("degenerate training data: {0}")]
    DegenerateTraining(String),

    #[error("numerical degeneracy: {0}")]
    NumericalDegeneracy(String),

    #[error("training failed: {0}")]
    Training(String),

    #[error("split error: {0}")]
    Split(String),

    #[error("replay error: {0}")]
    Replay(String),

    #[error("sampling error: {0}")]
    Sampling(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }
}
