//! Periodic grid, Fourier transforms and Fourier-multiplier operators.

mod fft;
mod field;
mod grid;
pub mod kernel;
mod ops;

pub use fft::{inverse, transform};
pub use field::{Field, ModeInfo, SpectralField};
pub use grid::GridSpec;
pub use ops::{
    apply_lambda, apply_lambda_mean_zero, convolve, dealias, dealias_in_place, dealias_keeps,
    derivative, divergence, gradient, padding_factor, riesz_velocity, riesz_velocity_spectral,
    upsample, MEAN_TOLERANCE,
};

/// Alias for [`GridSpec::new`].
pub fn make_grid(n: usize, length: f64) -> crate::Result<GridSpec> {
    GridSpec::new(n, length)
}
