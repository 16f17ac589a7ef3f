//! Numerical workbench for the inviscid limit of 2D incompressible flows on
//! the torus: exponential Orlicz norms, a pseudo-spectral Navier–Stokes /
//! Euler solver, relative-energy residuals and certified convergence rates.

// `!(x > 0.0)` is used on purpose so that NaN inputs are rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod field;
pub mod gronwall;
pub mod mollifier;
pub mod orlicz;
pub mod relative_energy;
pub mod solver;
pub mod sweep;

pub use error::{Error, Result};
