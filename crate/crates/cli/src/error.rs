use thiserror::Error;

/// Failures surfaced by the command-line tool, each with a stable exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("diverged at step {step}")]
    Diverged { step: usize },

    #[error("step size {h} exceeds alpha = {alpha}; the energy guarantee does not apply")]
    Guarantee { h: f64, alpha: f64 },

    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    /// 0 success, 1 config error, 2 divergence, 3 I/O error.
    ///
    /// A step size outside the guarantee is an input error and exits with 1.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Guarantee { .. } => 1,
            CliError::Diverged { .. } => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl From<formation_vi::Error> for CliError {
    fn from(e: formation_vi::Error) -> Self {
        use formation_vi::Error as E;
        match e {
            E::Diverged { step } => CliError::Diverged { step },
            E::GuaranteeViolated { h, alpha } => CliError::Guarantee { h, alpha },
            E::Io(msg) => CliError::Io(msg),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
