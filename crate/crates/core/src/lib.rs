//! Simulation of the damped viscoelastic wave equation with a time-varying
//! delay in the velocity feedback.
//!
//! The crate provides kernels and their decay witnesses, the delay profile
//! and history buffer, finite-difference fields, the feasibility
//! certificate for the damping pair, the leapfrog solver with recursive or
//! direct memory convolution, and energy and decay-rate diagnostics.

pub mod cli;
pub mod config;
pub mod delay;
pub mod energy;
pub mod error;
pub mod feasibility;
pub mod field;
pub mod kernel;
pub mod solver;

pub use error::{Error, Result};
