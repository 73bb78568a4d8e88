use thiserror::Error;

use crate::engine::log::LogError;
use crate::engine::replay::ReplayError;
use crate::engine::EngineError;
use crate::scenario::ScenarioError;

/// Top-level error for the CLI and service.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Log(#[from] LogError),
    #[error(transparent)]
    Replay(#[from] ReplayError),
    #[error("{0}")]
    Usage(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// Process exit code: 2 for a corrupt log, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Log(LogError::Corrupt { .. }) => 2,
            Error::Replay(r) if r.is_corrupt_log() => 2,
            _ => 1,
        }
    }
}
