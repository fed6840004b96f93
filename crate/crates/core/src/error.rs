//! Error type shared by every module of the crate.

use thiserror::Error;

/// Errors raised by grid construction, linear algebra and the nonlinear solvers.
///
/// Non-convergence of Newton or monotone iterations is *not* an error: those
/// outcomes are reported through [`crate::solve::SolveReport::converged`].
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("shape mismatch: expected {expected} nodes, got {found}")]
    Shape { expected: usize, found: usize },

    #[error("value out of domain at node {node}: {detail}")]
    Domain { node: usize, detail: String },

    #[error("overflow at node {node}: exponent {exponent} exceeds the representable range")]
    Range { node: usize, exponent: f64 },

    #[error("singular or indefinite matrix: smallest pivot magnitude {min_pivot:e} (condition estimate {condition:e})")]
    Singular { min_pivot: f64, condition: f64 },

    #[error("operator is not positive definite after shift {shift}: pivot {pivot:e} at row {row}")]
    Definiteness { shift: f64, pivot: f64, row: usize },

    #[error("iteration did not converge after {iterations} steps (last residual {residual:e})")]
    Iteration { iterations: usize, residual: f64 },

    #[error("certificate check failed at node {node}: violation {violation:e}")]
    Certificate { node: usize, violation: f64 },

    #[error("orbit is unbounded: no turning point below energy {energy}")]
    UnboundedOrbit { energy: f64 },

    #[error("classification: {0}")]
    Classification(String),

    #[error("precondition failed: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;
