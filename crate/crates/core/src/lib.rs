//! Simulation and security analysis of the AME(3,d) quantum bit-commitment
//! protocol.
//!
//! The crate is layered bottom-up:
//!
//! * [`register`], [`state`], [`schmidt`], [`fidelity`], [`gates`], [`random`]:
//!   dense qudit linear algebra over labeled registers.
//! * [`protocol`]: the commitment state, honest commit measurement,
//!   closed-form post-measurement states and opening verification.
//! * [`channels`]: Kraus channels, separable channels on a bipartition of
//!   Alice's register, and the commit measurement channels.
//! * [`adversary`]: switch probabilities, analytic bounds, the unrestricted
//!   attack and a separable-attack optimizer.

pub mod adversary;
pub mod channels;
pub mod error;
pub mod fidelity;
pub mod gates;
pub mod protocol;
pub mod random;
pub mod register;
pub mod schmidt;
pub mod state;

pub use error::{QbcError, Result};
pub use register::{Bipartition, RegisterShape};
pub use state::{DensityMatrix, Operator, StateVector, Tensor};

/// Comparison tolerances shared across the crate.
pub mod tol {
    /// Structural equalities (normalization, hermiticity, orthonormality).
    pub const STRUCTURAL: f64 = 1e-9;
    /// Round trips (permutation and inverse, product partial traces).
    pub const ROUND_TRIP: f64 = 1e-12;
    /// Slack allowed between an optimized probability and its analytic bound.
    pub const OPTIMIZER_SLACK: f64 = 1e-6;
}
