//! Regularization of binary and simultaneous binary collisions in collinear
//! and planar-symmetric N-body subproblems, collision periodic orbits found
//! by shooting, and their linear stability from monodromy eigenvalues.

pub mod ad;
pub mod error;
pub mod integrate;
pub mod nbody;
pub mod regularize;

pub use error::{Error, Result};
pub mod problems;
pub mod orbits;
pub mod stability;
pub mod compare;
