use thiserror::Error;

/// Errors raised by the model, estimation and policy layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum RogueError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("estimation error: {0}")]
    Estimation(String),
}

pub type Result<T> = std::result::Result<T, RogueError>;

pub(crate) fn config_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(RogueError::Config(msg.into()))
}
