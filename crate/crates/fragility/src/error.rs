//! Error type shared by every module of the crate.

use thiserror::Error;

/// Crate-wide error enum.
///
/// Variants group into three severities that the CLI maps onto exit codes:
/// configuration problems (bad arguments, bad config files, unsupported
/// requests), data problems (CSV ingestion, degenerate columns), and numeric
/// problems (inconsistent coefficient systems, undefined limits, failed
/// factorizations).
#[derive(Debug, Error)]
pub enum Error {
    /// A function argument violates its documented precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A model, partition or run configuration is malformed.
    #[error("configuration error: {0}")]
    Config(String),

    /// Input data cannot be ingested or is unusable.
    #[error("data error: {0}")]
    Data(String),

    /// A required extremal coefficient is absent from the working set.
    #[error("incomplete input: missing extremal coefficient for {0}")]
    MissingCoefficient(String),

    /// Coefficients passed validation individually but do not form a valid
    /// exponent-measure restriction (a derived probability went negative).
    #[error("inconsistent coefficients: {0}")]
    InconsistentCoefficients(String),

    /// A requested limit quantity does not exist for this input.
    #[error("undefined limit: {0}")]
    UndefinedLimit(String),

    /// The operation is not defined for this model family.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// A numeric routine failed (ill-conditioned matrix, degenerate order
    /// statistics, non positive definite input).
    #[error("numeric error: {0}")]
    Numeric(String),
}

pub type Result<T> = std::result::Result<T, Error>;
