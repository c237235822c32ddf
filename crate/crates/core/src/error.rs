//! Error type shared by every module.

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("gamma pole at x = {0}")]
    Pole(f64),
    #[error("gamma overflow at x = {0}")]
    Overflow(f64),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("quadrature did not converge: value {value}, error estimate {err_est}")]
    NoConvergence { value: f64, err_est: f64 },
    #[error("parameter error: {0}")]
    Param(String),
    #[error("regime error: {0}")]
    Regime(String),
    #[error("weight quadrature failed in cell ({i}, {j}): value {value}, error estimate {err_est}")]
    Weight { i: usize, j: usize, value: f64, err_est: f64 },
    #[error("root bracketing failed: {0}")]
    Bracket(String),
    #[error("maximum iterations ({0}) exceeded")]
    MaxIter(usize),
    #[error("monotonicity violated at iteration {iter}, node {node}: {prev} -> {next}")]
    Monotonicity { iter: usize, node: usize, prev: f64, next: f64 },
    #[error("bound violated at node {node} (z = {z}): {what}")]
    BoundViolation { node: usize, z: f64, what: String },
    #[error("mesh mismatch: {0}")]
    MeshMismatch(String),
    #[error("profile has zero mass")]
    ZeroMass,
}

pub type Result<T> = std::result::Result<T, Error>;
