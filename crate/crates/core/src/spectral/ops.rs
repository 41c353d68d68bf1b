use rustfft::num_complex::Complex64;

use super::fft::{inverse, transform};
use super::field::{Field, SpectralField};
use super::grid::GridSpec;
use crate::error::{Result, SqgError};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Relative size of a zero mode still treated as "mean zero" by negative powers.
pub const MEAN_TOLERANCE: f64 = 1e-14;

/// `Λ^a F`, i.e. multiplication by `|k|^a`.
///
/// For `a > 0` the zero mode is sent to 0. For `a < 0` the input must be
/// mean-zero (up to [`MEAN_TOLERANCE`] relative to its largest coefficient);
/// otherwise the operator is undefined.
pub fn apply_lambda(f: &SpectralField, a: f64) -> Result<SpectralField> {
    if a < 0.0 {
        let mean = f.coeffs()[0].norm();
        if mean > MEAN_TOLERANCE * f.max_abs().max(f64::MIN_POSITIVE) && mean > 0.0 {
            return Err(SqgError::NonZeroMean { mean });
        }
    }
    Ok(apply_lambda_mean_zero(f, a))
}

/// `Λ^a` acting on the mean-zero part, without the mean check.
pub fn apply_lambda_mean_zero(f: &SpectralField, a: f64) -> SpectralField {
    if a == 0.0 {
        return f.clone();
    }
    f.map_modes(|m, c| {
        if m.is_zero() {
            ZERO
        } else {
            c * m.kmag().powf(a)
        }
    })
}

/// Velocity `u = ℛ^⊥θ = (-ℛ₂θ, ℛ₁θ)` in spectral form.
pub fn riesz_velocity_spectral(theta: &SpectralField) -> (SpectralField, SpectralField) {
    let u1 = theta.map_modes(|m, c| {
        if m.is_zero() || m.nyquist {
            ZERO
        } else {
            -I * (m.k2 / m.kmag()) * c
        }
    });
    let u2 = theta.map_modes(|m, c| {
        if m.is_zero() || m.nyquist {
            ZERO
        } else {
            I * (m.k1 / m.kmag()) * c
        }
    });
    (u1, u2)
}

/// Velocity `u = ℛ^⊥θ` on the grid.
pub fn riesz_velocity(theta: &SpectralField) -> (Field, Field) {
    let (u1, u2) = riesz_velocity_spectral(theta);
    (inverse(&u1), inverse(&u2))
}

/// `(∂₁F, ∂₂F)`. The Nyquist row and column are dropped.
pub fn gradient(f: &SpectralField) -> (SpectralField, SpectralField) {
    let d1 = f.map_modes(|m, c| if m.nyquist { ZERO } else { I * m.k1 * c });
    let d2 = f.map_modes(|m, c| if m.nyquist { ZERO } else { I * m.k2 * c });
    (d1, d2)
}

/// Spectral divergence `∂₁A + ∂₂B`.
pub fn divergence(a: &SpectralField, b: &SpectralField) -> Result<SpectralField> {
    let (da, _) = gradient(a);
    let (_, db) = gradient(b);
    da.zip_with(&db, |x, y| x + y)
}

/// Whether mode `(m₁, m₂)` survives the 2/3 rule on an `n`-point grid.
pub fn dealias_keeps(n: usize, m1: i64, m2: i64) -> bool {
    3 * m1.unsigned_abs().max(m2.unsigned_abs()) as usize <= n
}

/// 2/3-rule truncation: zeroes modes with `max(|m₁|, |m₂|) > n/3`.
pub fn dealias(f: &SpectralField) -> SpectralField {
    let mut out = f.clone();
    dealias_in_place(&mut out);
    out
}

pub fn dealias_in_place(f: &mut SpectralField) {
    let n = f.grid().n();
    f.map_modes_in_place(|m, c| {
        if dealias_keeps(n, m.m1, m.m2) {
            c
        } else {
            ZERO
        }
    });
}

/// Periodic convolution `(f * g)(x) = ∫ f(y) g(x - y) dy` over the torus.
pub fn convolve(f: &Field, g: &Field) -> Result<Field> {
    f.grid().ensure_same(g.grid())?;
    let l = f.grid().length();
    let a = transform(f)?;
    let b = transform(g)?;
    Ok(inverse(&a.zip_with(&b, |x, y| x * y * (l * l))?))
}

/// Spectral derivative of a grid field along axis 0 (x₁) or 1 (x₂).
pub fn derivative(f: &Field, axis: usize) -> Result<Field> {
    let (d1, d2) = gradient(&transform(f)?);
    Ok(inverse(if axis == 0 { &d1 } else { &d2 }))
}

/// Band-limited interpolation of `f` onto a grid `factor` times finer.
pub fn upsample(f: &SpectralField, factor: usize) -> Result<Field> {
    if factor <= 1 {
        return Ok(inverse(f));
    }
    let fine = GridSpec::cached(f.grid().n() * factor, f.grid().length())?;
    Ok(inverse(&f.resample(&fine)?))
}

/// Smallest power-of-two refinement factor for which a spectrum with largest
/// active mode `mmax`, raised to the power `degree`, is alias-free.
pub fn padding_factor(n: usize, mmax: usize, degree: usize) -> usize {
    let need = 2 * degree * mmax + 2;
    let mut factor = 1;
    while n * factor < need {
        factor *= 2;
    }
    factor
}
