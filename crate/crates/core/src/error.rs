use thiserror::Error;

use crate::model::NodeId;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("graph: {0}")]
    Graph(String),

    #[error("unknown node {0}")]
    UnknownNode(NodeId),

    #[error("infeasible incentive bounds at facility {facility}: target interval [{lo}, {hi}] is empty")]
    InfeasibleIncentiveBounds { facility: NodeId, lo: f64, hi: f64 },

    #[error("projection did not converge within {sweeps} sweeps (residual {residual:.3e})")]
    ProjectionBudgetExceeded { sweeps: usize, residual: f64 },

    #[error("{path}: {message}")]
    Load { path: String, message: String },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn load(path: impl AsRef<std::path::Path>, message: impl Into<String>) -> Self {
        Error::Load { path: path.as_ref().display().to_string(), message: message.into() }
    }

    /// Process exit code for this error: 2 for data problems, 3 for invariant
    /// violations and solver failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Invariant(_) | Error::InfeasibleIncentiveBounds { .. } | Error::ProjectionBudgetExceeded { .. } => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
