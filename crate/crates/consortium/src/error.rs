use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Input outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Invalid model parameter set.
    #[error("invalid parameters: {0}")]
    Params(String),

    /// Requested point has no functional equilibrium / empty feasible set.
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// Dilution rate sits on a stability threshold; classification refused.
    #[error("bifurcation value: d = {d} within tolerance of threshold {threshold}")]
    Bifurcation { d: f64, threshold: f64 },

    /// Implicit stage solve or step advance failed.
    #[error("integration failed at step {step}: {message}")]
    Integration { step: usize, message: String },

    /// Iterative optimizer exhausted its sweep/iteration budget.
    #[error("optimization failed: {0}")]
    Optimization(String),

    /// Malformed configuration, scenario or tabular input.
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
