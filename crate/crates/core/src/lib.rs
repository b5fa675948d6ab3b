//! Semiclassical coherent-state propagator for one-dimensional
//! harmonic-plus-quartic Hamiltonians.
//!
//! The semiclassical value is assembled from complex classical trajectories
//! found by RK4 shooting and steepest descent on the endpoint distance; an
//! independent exact propagator comes from diagonalizing the Hamiltonian in
//! an oscillator basis.

pub mod action;
pub mod cli;
pub mod config;
pub mod error;
pub mod integrator;
pub mod model;
pub mod oracle;
pub mod phase;
pub mod scsp;
mod quad;
pub mod shooting;

pub use error::{Error, Result};
