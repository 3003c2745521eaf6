use thiserror::Error;

/// Failures of a lab run, each mapped to a process exit code.
#[derive(Debug, Error)]
pub enum LabError {
    #[error("config error: {0}")]
    Config(String),

    #[error("solver failure: {0}")]
    Solver(#[from] hartree::Error),

    #[error("{kind}: {}", failures.join("; "))]
    Failed { kind: FailureKind, failures: Vec<String> },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("plot error: {0}")]
    Plot(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureKind {
    Concordance,
    Stability,
}

impl std::fmt::Display for FailureKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FailureKind::Concordance => "CONCORDANCE_FAILURE",
            FailureKind::Stability => "STABILITY_FAILURE",
        })
    }
}

impl LabError {
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Failed { .. } => 2,
            LabError::Solver(_) => 3,
            LabError::Config(_) => 4,
            LabError::Io(_) | LabError::Csv(_) | LabError::Plot(_) => 1,
        }
    }
}

pub type LabResult<T> = std::result::Result<T, LabError>;
