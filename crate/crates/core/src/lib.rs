//! Pseudo-spectral simulation and normal-form analysis for periodic
//! Whitham-type equations `u_t + u u_x - L u_x = 0`, where `L` is a Fourier
//! multiplier with symbol `p(xi)`.

pub mod dispersion;
pub mod energy;
pub mod error;
pub mod evolve;
pub mod expr;
pub mod pseudoproduct;
pub mod scan;
pub mod spectral;

pub use error::{Error, Result};
