use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Graph-level problems: cycles, dangling arrows, unknown variables.
    #[error("structural error: {0}")]
    Structural(String),
    /// Scenario or configuration values that do not validate.
    #[error("configuration error: {0}")]
    Config(String),
    /// An intervention on a variable the policy marks non-doable.
    #[error("policy error: {0}")]
    Policy(String),
    #[error("environment error: {0}")]
    Environment(String),
    #[error("evidence has zero probability under the network")]
    ZeroProbabilityEvidence,
    #[error("network has {variables} variables; exact enumeration supports at most {limit}")]
    Capacity { variables: usize, limit: usize },
    #[error("structure is not a polytree; use exact enumeration instead")]
    NotPolytree,
    /// Line-numbered diagnostic from one of the text formats (1-based line).
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
