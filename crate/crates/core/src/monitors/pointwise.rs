//! Norms and residuals evaluated on zero-padded grids, exact for the
//! polynomial nonlinearities involved.

use crate::error::Result;
use crate::spectral::{
    apply_lambda_mean_zero, padding_factor, transform, upsample, Field, SpectralField,
};

/// Coefficients below this fraction of the largest are ignored when sizing padding.
const ACTIVE_THRESHOLD: f64 = 1e-13;

fn active_mode(theta_hat: &SpectralField) -> usize {
    theta_hat.max_active_mode(ACTIVE_THRESHOLD * theta_hat.max_abs())
}

/// `θ` sampled on a grid fine enough that `θ^degree` is alias-free.
pub fn padded_samples(theta_hat: &SpectralField, degree: usize) -> Result<Field> {
    let n = theta_hat.grid().n();
    upsample(theta_hat, padding_factor(n, active_mode(theta_hat), degree))
}

/// Sup of `|θ|` on a grid refined twice beyond the alias-free one.
pub fn refined_linf(theta_hat: &SpectralField) -> Result<f64> {
    let n = theta_hat.grid().n();
    let f = padding_factor(n, active_mode(theta_hat), 1).max(2);
    Ok(upsample(theta_hat, f)?.linf())
}

fn is_even_integer(p: f64) -> bool {
    p >= 2.0 && p.fract() == 0.0 && (p as u64) % 2 == 0
}

/// `‖θ‖_{L^p}^p`, exact for even integer `p`.
pub fn lp_power(theta_hat: &SpectralField, p: f64) -> Result<f64> {
    if p == 2.0 {
        return Ok(theta_hat.l2_squared());
    }
    let degree = if is_even_integer(p) {
        (p as usize) / 2
    } else {
        (p.ceil() as usize).max(2)
    };
    let f = padded_samples(theta_hat, degree)?;
    let dx = f.grid().dx();
    Ok(f.values().iter().map(|v| v.abs().powf(p)).sum::<f64>() * dx * dx)
}

pub fn lp_norm(theta_hat: &SpectralField, p: f64) -> Result<f64> {
    Ok(lp_power(theta_hat, p)?.powf(1.0 / p))
}

/// `‖Λ^{α/2}(|θ|^{p/2})‖²_{L²}`. For `p = 2` the signed `θ` is used, so the
/// `L²` budget is an identity; for `p = 4, 8` the power is a polynomial and
/// the value is exact on the padded grid.
pub fn lp_dissipation(theta_hat: &SpectralField, p: f64, alpha: f64) -> Result<f64> {
    let l = theta_hat.grid().length();
    let weight = |k1: f64, k2: f64| {
        let k = k1.hypot(k2);
        if k == 0.0 {
            0.0
        } else {
            k.powf(alpha)
        }
    };
    if p == 2.0 {
        return Ok(l * l * theta_hat.weighted_energy(weight));
    }
    let degree = if is_even_integer(p) {
        (p as usize) / 2
    } else {
        (p.ceil() as usize).max(2)
    };
    let fine = padded_samples(theta_hat, degree)?;
    let g = fine.map(|v| v.abs().powf(0.5 * p));
    Ok(l * l * transform(&g)?.weighted_energy(weight))
}

/// Convex test functions for the pointwise inequality `Λ^α g(θ) ≤ g'(θ) Λ^α θ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConvexFn {
    Square,
    Quartic,
}

impl ConvexFn {
    pub fn degree(&self) -> usize {
        match self {
            ConvexFn::Square => 2,
            ConvexFn::Quartic => 4,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ConvexFn::Square => "square",
            ConvexFn::Quartic => "quartic",
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        match self {
            ConvexFn::Square => x * x,
            ConvexFn::Quartic => x * x * x * x,
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        match self {
            ConvexFn::Square => 2.0 * x,
            ConvexFn::Quartic => 4.0 * x * x * x,
        }
    }
}

#[derive(Clone, Debug)]
pub struct CordobaResidual {
    /// `g'(θ)Λ^αθ - Λ^α g(θ)` on the padded grid.
    pub residual: Field,
    pub min: f64,
    pub argmin: usize,
    /// `max(1, ‖θ‖²_∞)`.
    pub scale: f64,
}

/// Residual of the pointwise convexity inequality, on a grid where `g(θ)` is
/// alias-free so that both sides are exact trigonometric polynomials.
pub fn cordoba_residual(
    theta_hat: &SpectralField,
    alpha: f64,
    g: ConvexFn,
) -> Result<CordobaResidual> {
    let fine = padded_samples(theta_hat, g.degree())?;
    let fine_hat = transform(&fine)?;
    let lt = crate::spectral::inverse(&apply_lambda_mean_zero(&fine_hat, alpha));
    let gt = fine.map(|v| g.value(v));
    let lg = crate::spectral::inverse(&apply_lambda_mean_zero(&transform(&gt)?, alpha));
    let mut residual = Field::zeros(fine.grid());
    let mut min = f64::INFINITY;
    let mut argmin = 0;
    for (i, r) in residual.values_mut().iter_mut().enumerate() {
        *r = g.derivative(fine.values()[i]) * lt.values()[i] - lg.values()[i];
        if *r < min {
            min = *r;
            argmin = i;
        }
    }
    let linf = fine.linf();
    Ok(CordobaResidual {
        residual,
        min,
        argmin,
        scale: linf.powi(2).max(1.0),
    })
}

/// Whether the top third of the spectrum carries more than `tol` of the
/// largest coefficient (field not resolved at grid scale).
pub fn under_resolved(theta_hat: &SpectralField, tol: f64) -> bool {
    let max = theta_hat.max_abs();
    if max == 0.0 {
        return false;
    }
    tail_max(theta_hat) > tol * max
}

fn tail_max(theta_hat: &SpectralField) -> f64 {
    let grid = theta_hat.grid();
    let n = grid.n();
    let mut worst: f64 = 0.0;
    for c in 0..grid.half() {
        for j in 0..n {
            if !crate::spectral::dealias_keeps(n, grid.mode(c), grid.mode(j)) {
                worst = worst.max(theta_hat.coeffs()[c * n + j].norm());
            }
        }
    }
    worst
}
