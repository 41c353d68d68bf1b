//! Pseudo-spectral simulation and verification toolkit for the dissipative
//! surface quasi-geostrophic equation on a periodic square.

pub mod error;
pub mod function_spaces;
pub mod harness;
pub mod initial_data;
pub mod io;
pub mod monitors;
pub mod par;
pub mod quadrature;
pub mod solver;
pub mod spectral;

pub use error::{Result, SqgError};
pub use spectral::{Field, GridSpec, SpectralField};
