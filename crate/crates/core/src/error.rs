use thiserror::Error;

/// Errors produced by the formation integrators and their analysis tools.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("edge ({0}, {0}) is a self-loop")]
    SelfLoop(usize),

    #[error("agent index {index} out of range for {num_agents} agents")]
    AgentOutOfRange { index: usize, num_agents: usize },

    #[error("({0}, {1}) is not an edge of the formation graph")]
    NotAnEdge(usize, usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("non-finite state at step {step}")]
    Diverged { step: usize },

    #[error("step size {h} exceeds the guarantee bound alpha = {alpha}")]
    GuaranteeViolated { h: f64, alpha: f64 },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
