use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// An adaptive scheme could not reach the requested tolerance.
    #[error("quadrature did not converge: {0}")]
    NoConvergence(String),
    /// The requested quantity is a divergent integral.
    #[error("divergent integral: {0}")]
    Divergent(String),
    /// A linear or nonlinear solve failed.
    #[error("solver error: {0}")]
    Solver(String),
    /// An iteration hit its step budget before reaching tolerance.
    #[error("max iterations exceeded: {0}")]
    MaxIter(String),
    /// Structurally invalid input (sizes, orderings, ranges).
    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
