//! Spectral toolkit for the planar Dirac and Schrödinger operators in a
//! constant magnetic field.

pub mod dirac;
pub mod error;
pub mod estimates;
pub mod fields;
pub mod grid;
pub mod levels;
pub mod multipliers;
pub mod propagators;
pub mod specfun;
pub mod spectrum;

pub use error::{Error, Result};
