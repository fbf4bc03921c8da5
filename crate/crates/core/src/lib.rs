//! Geometry and statistics of random sequences of confocal prolate
//! hyperspheroids.
//!
//! A prolate hyperspheroid (PHS) in `R^n` is the set of points whose summed
//! distance to two foci is at most the transverse diameter `d`. Drawing a
//! uniform sample from one PHS and passing a new, confocal PHS through it
//! yields a strictly shrinking sequence of diameters that converges to the
//! interfocal distance `d_min`.
//!
//! Modules:
//! - [`coords`]: the prolate hyperspheroid coordinate system, its scale
//!   factors and volume density.
//! - [`measures`]: closed-form volumes, expectations and rates, plus the
//!   gamma/beta functions they need.
//! - [`sampling`]: uniform samplers over a PHS and the focal-sum diameter.
//! - [`sequence`]: simulation of the shrinking sequence and Monte Carlo
//!   estimators.
//! - [`verify`]: quadrature and Monte Carlo oracles for the closed forms.
//! - [`cli`]: the experiment runner behind the `prolate` binary.

pub mod cli;
pub mod coords;
mod error;
pub mod measures;
pub mod sampling;
pub mod sequence;
pub mod stats;
pub mod verify;

pub use coords::{CartesianPoint, PhsCoords, PhsShape, RigidTransform, ScaleFactors};
pub use error::{Error, Result};
pub use sampling::RandomStream;
pub use sequence::{MonteCarloEstimate, SequenceTrace};

/// Largest supported ambient dimension.
pub const MAX_DIMENSION: usize = 64;
