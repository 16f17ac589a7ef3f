//! Discrete fields on the torus `[0, 2π)²`.

mod grid;
pub mod ops;
pub mod random;
pub mod snapshot;
mod types;

pub use grid::{GridSpec, BOX_LENGTH, TORUS_MEASURE};
pub use ops::{
    divergence, gradient, leray_project, lexp_norm, lp_norm, max_spectral_divergence, sym_gradient,
    velocity_from_vorticity, vorticity, Exponent,
};
pub use types::{Magnitude, ScalarField, Spectrum, SymTensor2, VectorField2};
