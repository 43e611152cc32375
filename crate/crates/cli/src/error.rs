use momlab_core::Error as CoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Scenario or argument does not satisfy the schema.
    #[error("schema error: {0}")]
    Schema(String),
    /// CFL violation, boundary leakage or divergence.
    #[error("runtime error: {0}")]
    Runtime(String),
    #[error("admissibility rejection: {0}")]
    Inadmissible(String),
    /// A tolerance, verification check or convergence slope failed.
    #[error("check failed: {0}")]
    Failed(String),
    #[error("io error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Failed(_) => 1,
            CliError::Schema(_) => 2,
            CliError::Runtime(_) => 3,
            CliError::Inadmissible(_) => 4,
            CliError::Io(_) => 5,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        let msg = e.to_string();
        match e {
            CoreError::Cfl { .. } | CoreError::BoundaryLeakage { .. } | CoreError::NonFinite(_) | CoreError::Quadrature { .. } => {
                CliError::Runtime(msg)
            }
            CoreError::Inadmissible { .. } => CliError::Inadmissible(msg),
            CoreError::Io(_) => CliError::Io(msg),
            CoreError::DimensionMismatch { .. } | CoreError::InvalidInput(_) | CoreError::NotHermitian { .. } | CoreError::GridMismatch(_) => {
                CliError::Schema(msg)
            }
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
