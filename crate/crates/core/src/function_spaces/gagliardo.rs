//! Real-space quadrature of the Gagliardo seminorm
//! `[f]²_s = ∫_T ∫_{ℝ²} |f(x+h) - f(x)|² / |h|^{2+2s} dh dx`
//! for periodic `f`, independent of any Fourier symbol.

use std::f64::consts::PI;

use super::norms::check_s;
use super::windows::radial_cutoff;
use crate::error::Result;
use crate::quadrature::{fractional_laplacian_constant, gauss_legendre, graded_rule};
use crate::spectral::Field;

/// Number of periodic images per direction summed explicitly in the kernel.
const IMAGE_SHELLS: i64 = 6;

/// Analytic ratio `[f]²_s / ‖Λ^s f‖²_{L²} = 2 / C_{2,2s}`.
pub fn gagliardo_constant(s: f64) -> f64 {
    2.0 / fractional_laplacian_constant(2.0 * s)
}

/// `[f]²_s` by direct quadrature over all grid offsets.
///
/// The `h`-integral over `ℝ²` is folded onto the torus using the periodised
/// kernel `Σ_p |h + pL|^{-2-2s}`. Near `h = 0` the quadratic model
/// `(∇f·h)²` (with `∇f` from fourth-order finite differences) is subtracted
/// under a smooth cutoff and its exact radial integral added back. Cost is
/// `O(n⁴)`.
pub fn gagliardo_seminorm(f: &Field, s: f64) -> Result<f64> {
    check_s(s)?;
    f.check_finite("gagliardo input")?;
    let grid = f.grid();
    let n = grid.n();
    let dx = grid.dx();
    let l = grid.length();
    let v = f.values();
    let dx2 = dx * dx;

    let diff = crate::par::map_range(n * n, |idx| {
        let (a, b) = (idx % n, idx / n);
        if a == 0 && b == 0 {
            return 0.0;
        }
        let mut acc = 0.0;
        for j in 0..n {
            let src = &v[j * n..(j + 1) * n];
            let dst = &v[((j + b) % n) * n..((j + b) % n + 1) * n];
            for i in 0..n - a {
                let d = dst[i + a] - src[i];
                acc += d * d;
            }
            for i in n - a..n {
                let d = dst[i + a - n] - src[i];
                acc += d * d;
            }
        }
        acc * dx2
    });

    let (g11, g12, g22) = gradient_moments(f);
    let r_cut = (l / 4.0).min(12.0 * dx);
    let weight = |r: f64| radial_cutoff(r, 0.5 * r_cut, r_cut);
    let p = -2.0 - 2.0 * s;
    let tail = lattice_tail(l, s);

    let body = crate::par::ordered_sum(n, |b| {
        let h2 = grid.centered(b);
        let mut acc = 0.0;
        for a in 0..n {
            if a == 0 && b == 0 {
                continue;
            }
            let h1 = grid.centered(a);
            let r = h1.hypot(h2);
            let mut kper = tail;
            for q2 in -IMAGE_SHELLS..=IMAGE_SHELLS {
                for q1 in -IMAGE_SHELLS..=IMAGE_SHELLS {
                    let y1 = h1 + q1 as f64 * l;
                    let y2 = h2 + q2 as f64 * l;
                    kper += (y1 * y1 + y2 * y2).powf(0.5 * p);
                }
            }
            let model = g11 * h1 * h1 + 2.0 * g12 * h1 * h2 + g22 * h2 * h2;
            acc += diff[b * n + a] * kper - weight(r) * model * r.powf(p);
        }
        acc * dx2
    });

    let (rs, ws) = graded_rule(r_cut, 40, 10);
    let radial: f64 = rs
        .iter()
        .zip(&ws)
        .map(|(&r, &w)| w * r.powf(1.0 - 2.0 * s) * weight(r))
        .sum();
    Ok(body + PI * (g11 + g22) * radial)
}

/// `∫ ∇f ∇fᵀ dx` from fourth-order central differences.
fn gradient_moments(f: &Field) -> (f64, f64, f64) {
    let grid = f.grid();
    let n = grid.n();
    let dx = grid.dx();
    let at = |i: isize, j: isize| {
        let ii = i.rem_euclid(n as isize) as usize;
        let jj = j.rem_euclid(n as isize) as usize;
        f.values()[jj * n + ii]
    };
    let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
    for j in 0..n as isize {
        for i in 0..n as isize {
            let d1 = (-at(i + 2, j) + 8.0 * at(i + 1, j) - 8.0 * at(i - 1, j) + at(i - 2, j))
                / (12.0 * dx);
            let d2 = (-at(i, j + 2) + 8.0 * at(i, j + 1) - 8.0 * at(i, j - 1) + at(i, j - 2))
                / (12.0 * dx);
            a += d1 * d1;
            b += d1 * d2;
            c += d2 * d2;
        }
    }
    let dx2 = dx * dx;
    (a * dx2, b * dx2, c * dx2)
}

/// Images beyond the explicit shells, approximated by the integral of the
/// kernel outside the square of half-width `(P + 1/2)L`, divided by the cell area.
fn lattice_tail(l: f64, s: f64) -> f64 {
    let half_width = (IMAGE_SHELLS as f64 + 0.5) * l;
    let (x, w) = gauss_legendre(24);
    let quarter = PI / 4.0;
    let angular: f64 = x
        .iter()
        .zip(&w)
        .map(|(&t, &wt)| {
            let th = 0.5 * quarter * (t + 1.0);
            0.5 * quarter * wt * th.cos().powf(2.0 * s)
        })
        .sum();
    8.0 * angular * half_width.powf(-2.0 * s) / (2.0 * s) / (l * l)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::GridSpec;

    #[test]
    fn constant_has_zero_seminorm() {
        let g = GridSpec::new(16, 4.0).unwrap();
        let v = gagliardo_seminorm(&Field::constant(&g, 2.5), 0.5).unwrap();
        assert!(v.abs() < 1e-12);
    }

    #[test]
    fn rejects_s_outside_unit_interval() {
        let g = GridSpec::new(16, 4.0).unwrap();
        assert!(gagliardo_seminorm(&Field::zeros(&g), 1.0).is_err());
        assert!(gagliardo_seminorm(&Field::zeros(&g), 0.0).is_err());
    }
}
