use thiserror::Error;

pub type Result<T, E = CcpError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum CcpError {
    #[error("invalid instance: {}", .0.join("; "))]
    InvalidInstance(Vec<String>),

    #[error("removing region-infeasible scenarios drives tau to {adjusted}; the problem is robust or infeasible")]
    TauExhausted { adjusted: f64 },

    #[error("objective norm {0} is not supported by the projection oracle (only L2)")]
    UnsupportedObjective(String),

    #[error("projection oracle hit its iteration cap on subset {subset:?}")]
    OracleMaxIter { subset: Vec<usize> },

    #[error("inconsistent presolve state: {0}")]
    Inconsistent(String),

    #[error("{0}")]
    Config(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
