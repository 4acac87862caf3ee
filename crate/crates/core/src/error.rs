use thiserror::Error;

/// Errors raised by geometry validation, channel synthesis and the optimizers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum GmaError {
    #[error("degenerate array: M={m}, N={n} (need N >= 2 and M >= N)")]
    DegenerateArray { m: usize, n: usize },

    #[error("invalid array geometry: {0}")]
    InvalidGeometry(String),

    #[error("sparsity level {eta} outside 1..={eta_max}")]
    SparsityOutOfRange { eta: usize, eta_max: usize },

    #[error("position {y} m outside movable region [{y_min}, {y_max}]")]
    PositionOutOfRegion { y: f64, y_min: f64, y_max: f64 },

    #[error("path set is empty")]
    EmptyPaths,

    #[error("invalid path: {0}")]
    InvalidPath(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("user index {k} out of range for {users} users")]
    UserIndex { k: usize, users: usize },

    #[error("invalid link power: {0}")]
    InvalidPower(String),

    #[error("channel vector is zero; combiner undefined")]
    DegenerateChannel,

    #[error("interference-plus-noise covariance is not positive definite")]
    NotPositiveDefinite,

    #[error("infeasible layout: {0}")]
    InfeasibleLayout(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("csv error: {0}")]
    Csv(String),

    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, GmaError>;

impl From<csv::Error> for GmaError {
    fn from(e: csv::Error) -> Self {
        GmaError::Csv(e.to_string())
    }
}

impl From<std::io::Error> for GmaError {
    fn from(e: std::io::Error) -> Self {
        GmaError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for GmaError {
    fn from(e: serde_json::Error) -> Self {
        GmaError::Config(e.to_string())
    }
}
