//! Self-similar profiles of the time-fractional porous medium equation
//! ∂ₜ^α u = Δ(u^m): similarity kernel, closed-form references, a monotone
//! discrete solver and a diagnostic suite.

pub mod closedform;
pub mod error;
pub mod kernel;
pub mod solver;
pub mod validate;
pub mod specfun;

pub use error::{Error, Result};
