//! Driven, damped, anharmonic degenerate parametric oscillator: mean-field
//! phases, the complex steady-state potential, analytic switching times and
//! a truncated number-state Liouvillian for cross-checks.

pub mod error;
pub mod fock;
pub mod meanfield;
pub mod output;
pub mod params;
pub mod potential;
pub mod sweep;
pub mod tunneling;

pub use error::{Error, Result};
