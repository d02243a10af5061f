//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by solver construction, configuration and execution.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller passed arguments that violate an operation's contract.
    #[error("usage error: {0}")]
    Usage(String),

    /// Vector/matrix dimensions do not agree.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// A declared metric bound was violated by a sampled Rayleigh quotient.
    #[error(
        "metric bound violated: quotient {quotient} outside [{lower}, {upper}] on vector {vector:?}"
    )]
    MetricBound {
        quotient: f64,
        lower: f64,
        upper: f64,
        vector: Vec<f64>,
    },

    /// A numerical breakdown (non-finite value) was detected.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// Backtracking exhausted its trial budget. Finite termination is
    /// guaranteed for valid inputs, so this indicates an oracle bug or a
    /// floating-point breakdown upstream.
    #[error(
        "line search exhausted {budget} trials at iteration {iteration}; \
         the stepsize is guaranteed to exist, so this indicates an oracle bug \
         or numerical breakdown"
    )]
    LineSearchBudget { budget: usize, iteration: usize },

    /// The two independent reference routes disagree.
    #[error("reference inconsistency for {instance}: |{a} - {b}| > {tol}")]
    ReferenceInconsistency {
        instance: String,
        a: f64,
        b: f64,
        tol: f64,
    },

    /// The iterative oracle did not reach its certificate within budget.
    #[error("oracle failure: {0}")]
    OracleFailure(String),

    /// Configuration file rejected.
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
