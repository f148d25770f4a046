//! Spectral laboratory for 2D incompressible flow on the unit torus.
//!
//! The crate provides periodic scalar/velocity fields with cached spectra,
//! logarithmic-order semi-norms and kernel quadratic forms, pseudo-spectral
//! Euler/Navier-Stokes vorticity solvers, backward stochastic Lagrangian
//! flows with expectation reconstruction, and the experiment drivers that
//! tie them together into convergence-rate and propagation reports.

pub mod error;
pub mod experiments;
pub mod field;
pub mod grid;
pub mod init;
pub mod io;
pub mod kernel;
pub mod seminorm;
pub mod solver;
mod spectral;
pub mod stochastic;

pub use error::{Error, Result};
pub use field::{biot_savart, ScalarField, Spectrum, VelocityField};
pub use grid::GridSpec;
