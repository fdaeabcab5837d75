//! Simulation engine and verification harness for an electrostatic MEMS
//! device with a hinged elastic top plate.
//!
//! The deformation of the plate follows a fourth-order semilinear parabolic
//! equation coupled to the electrostatic potential in the deformed gap,
//! solved on a fixed cylinder after a gap-normalizing change of variables.
//! The crate evolves the coupled system with an exact spectral semigroup and
//! exponential time stepping, monitors the gradient-flow energy balance, and
//! estimates the pull-in threshold by bisection over the voltage parameter.

pub mod energy;
pub mod error;
pub mod evolution;
pub mod grid;
pub mod operator;
pub mod potential;
pub mod sweep;

pub mod config;
pub mod output;
pub mod verify;

pub use error::{Result, SimError};
pub use grid::{CylinderGrid, PlateField, PlateGrid, SpectralField};
pub use potential::Parameters;
