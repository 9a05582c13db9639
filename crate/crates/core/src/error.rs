use thiserror::Error;

/// Errors raised by the analysis toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// An array dimension that must be a perfect square is not.
    #[error("dimension {0} is not a positive perfect square")]
    NotPerfectSquare(usize),

    /// Two dimensions that must agree do not.
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    /// A configuration value is out of its admissible range.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// The fixed power overhead consumes the whole budget.
    #[error("infeasible power budget: total {total} W does not exceed overhead {overhead} W")]
    InfeasibleBudget { total: f64, overhead: f64 },

    /// Optimizer or estimator parameters are out of range.
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// An exhaustive search would enumerate too many configurations.
    #[error("search space of 2^{0} configurations exceeds the 2^20 limit")]
    SearchTooLarge(usize),

    /// A column requested from a CSV table is absent.
    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
