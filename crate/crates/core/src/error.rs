//! Error type shared across the toolkit.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PdError {
    #[error("invalid network spec: {0}")]
    InvalidSpec(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("unknown game id `{0}`")]
    UnknownGame(String),

    #[error("unknown task id {0}")]
    UnknownTask(usize),

    #[error("action {action} out of range for action count {count}")]
    ActionOutOfRange { action: usize, count: usize },

    #[error("cannot step a terminal episode")]
    TerminalStep,

    #[error("replay memory is empty")]
    EmptyMemory,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("config error at line {line}: {msg}")]
    Config { line: usize, msg: String },

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("evaluation error: {0}")]
    Eval(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl PdError {
    /// Exit code grouping used by the CLI: config problems map to 1,
    /// everything else to 2.
    pub fn is_config_error(&self) -> bool {
        matches!(self, PdError::Config { .. } | PdError::InvalidArgument(_))
    }
}
