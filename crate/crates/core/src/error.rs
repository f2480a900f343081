use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across the simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("unsupported polynomial degree {0} (supported: 1..=4)")]
    UnsupportedDegree(usize),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("singular matrix: {0}")]
    SingularMatrix(String),

    #[error("iterative solver did not converge (final relative residual {residual:.3e})")]
    SolverNotConverged { residual: f64 },

    #[error("degenerate level-set gradient in cell {cell}")]
    SingularGeometry { cell: usize },

    #[error("topology error: {0}")]
    Topology(String),

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("inclination angle undefined: second-moment anisotropy {ratio:.4} below 1.05")]
    UndefinedAngle { ratio: f64 },

    #[error("Picard iteration did not converge after {} iterations (last change {:.3e})", .history.len(), .history.last().copied().unwrap_or(f64::NAN))]
    PicardNotConverged { history: Vec<f64> },

    #[error("fixed-point coupling did not converge after {} iterations (last error {:.3e})", .trace.len(), .trace.last().copied().unwrap_or(f64::NAN))]
    FixedPointNotConverged { trace: Vec<f64> },

    #[error("step {step}: {source}")]
    AtStep {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },

    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Validation(Vec<String>),

    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// The innermost error, looking through step annotations.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtStep { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
