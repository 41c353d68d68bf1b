//! Randomized checks of the function-space lemmas, independent of any run.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex64;
use serde_json::json;

use super::checks::quantile;
use super::verdict::{Outcome, Verdict};
use crate::error::{Result, SqgError};
use crate::function_spaces::{
    commutator_apply, hs_uloc_norm, lambda_field, lp_uloc_norm, HsUlocVariant, WindowFamily,
};
use crate::initial_data::unit_bump;
use crate::quadrature::fractional_laplacian_constant;
use crate::spectral::{convolve, inverse, Field, GridSpec, SpectralField};

/// Random real field with `|ĉ(k)| ∝ |k|^{-β}` for `0 < |k| ≤ kcut`, scaled to unit sup.
pub fn random_spectral_field(grid: &GridSpec, rng: &mut ChaCha8Rng, beta: f64, kcut: f64) -> Field {
    let n = grid.n() as i64;
    let half = n / 2;
    let dk = 2.0 * PI / grid.length();
    let mut spec = SpectralField::zeros(grid);
    for m1 in 0..half {
        for m2 in (-half + 1)..half {
            if m1 == 0 && m2 <= 0 {
                continue;
            }
            let k = dk * ((m1 * m1 + m2 * m2) as f64).sqrt();
            if k > kcut {
                continue;
            }
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            spec.set_mode(m1, m2, Complex64::new(re, im) * k.powf(-beta));
        }
    }
    let f = inverse(&spec);
    let m = f.linf();
    if m > 0.0 {
        f.scale(1.0 / m)
    } else {
        f
    }
}

/// Mixture of one to four signed bumps with random centres and radii in `[0.3, 2]`.
pub fn random_bump_mixture(grid: &GridSpec, rng: &mut ChaCha8Rng) -> Field {
    let count = rng.random_range(1..=4);
    let l = grid.length();
    let bumps: Vec<(f64, f64, f64, f64)> = (0..count)
        .map(|_| {
            (
                rng.random::<f64>() * l,
                rng.random::<f64>() * l,
                rng.random_range(0.3..2.0),
                rng.random_range(-2.0..2.0),
            )
        })
        .collect();
    Field::from_fn(grid, |x, y| {
        bumps
            .iter()
            .map(|&(cx, cy, r, a)| {
                let dx = (x - cx + 0.5 * l).rem_euclid(l) - 0.5 * l;
                let dy = (y - cy + 0.5 * l).rem_euclid(l) - 0.5 * l;
                a * unit_bump(dx.hypot(dy) / r)
            })
            .sum()
    })
}

/// Rough field: white noise plus a random constant offset and a smooth part.
fn random_rough_field(grid: &GridSpec, rng: &mut ChaCha8Rng) -> Field {
    let offset: f64 = rng.random_range(-1.0..1.0);
    let smooth = random_spectral_field(grid, rng, 1.0, 4.0);
    let mut f = Field::zeros(grid);
    for (v, s) in f.values_mut().iter_mut().zip(smooth.values()) {
        let noise: f64 = rng.sample(StandardNormal);
        *v = offset + s + noise;
    }
    f
}

/// `‖f*g‖_{L^p_uloc} ≤ ‖f‖_{L¹}‖g‖_{L^p_uloc}` on random pairs, alternating `p ∈ {2, 4}`.
pub fn check_young_uloc(grid: &GridSpec, seed: u64, trials: usize, tol: f64) -> Result<Verdict> {
    let ratios: Vec<f64> = crate::par::map_range(trials, |t| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(t as u64));
        let p = if t % 2 == 0 { 2.0 } else { 4.0 };
        let f = random_bump_mixture(grid, &mut rng);
        let g = random_rough_field(grid, &mut rng);
        let lhs = lp_uloc_norm(&convolve(&f, &g)?, p)?.sup;
        let rhs = f.l1() * lp_uloc_norm(&g, p)?.sup;
        Ok(if rhs > 0.0 { lhs / rhs } else { 0.0 })
    })
    .into_iter()
    .collect::<Result<_>>()?;
    let worst = ratios.iter().cloned().fold(0.0, f64::max);
    Ok(Verdict::new(
        "young_uloc",
        json!({ "seed": seed, "trials": trials, "n": grid.n(), "L": grid.length() }),
        worst,
        1.0 + tol,
        Outcome::from_bool(worst <= 1.0 + tol),
        tol,
    ))
}

/// Empirical commutator bound for one window.
#[derive(Clone, Debug)]
pub struct CommutatorStudy {
    pub s: f64,
    pub ratios: Vec<f64>,
    /// `K_emp`, the largest observed ratio.
    pub k_emp: f64,
    pub p90: f64,
    pub verdict: Verdict,
}

/// `‖[Λ^s, φ]w‖_{L²_uloc} / ‖w‖_{L²_uloc}` over random `w` with spectral
/// slopes between `1/2` and `3`; stable when `max ≤ 2 · p90`.
pub fn check_commutator_bound(
    windows: &WindowFamily,
    s: f64,
    seed: u64,
    trials: usize,
) -> Result<CommutatorStudy> {
    if !(s > 0.0 && s < 1.0) {
        return Err(SqgError::InvalidParameter(format!(
            "s = {s} must lie in (0, 1)"
        )));
    }
    let grid = windows.grid();
    let phi = windows.window(0);
    let kmax = PI * grid.n() as f64 / grid.length();
    let ratios: Vec<f64> = crate::par::map_range(trials, |t| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(t as u64));
        let beta: f64 = rng.random_range(0.5..3.0);
        let w = random_spectral_field(grid, &mut rng, beta, kmax);
        let c = commutator_apply(&phi, s, &w)?;
        Ok(lp_uloc_norm(&c, 2.0)?.sup / lp_uloc_norm(&w, 2.0)?.sup)
    })
    .into_iter()
    .collect::<Result<_>>()?;
    let k_emp = ratios.iter().cloned().fold(0.0, f64::max);
    let p90 = quantile(&ratios, 0.9);
    let verdict = Verdict::new(
        "commutator_bound",
        json!({ "s": s, "seed": seed, "trials": trials }),
        k_emp,
        2.0 * p90,
        Outcome::from_bool(k_emp.is_finite() && k_emp <= 2.0 * p90),
        2.0,
    )
    .with_note(format!("K_emp = {k_emp:.4e}"));
    Ok(CommutatorStudy {
        s,
        ratios,
        k_emp,
        p90,
        verdict,
    })
}

/// `sup_φ A_φ(w) / sup_φ A(wφ)`, the ratio of the two `H^s_uloc` energies.
pub fn norm_equivalence_ratio(w: &Field, s: f64, windows: &WindowFamily) -> Result<f64> {
    let a = hs_uloc_norm(w, s, windows, HsUlocVariant::A)?.sup;
    let b = hs_uloc_norm(w, s, windows, HsUlocVariant::B)?.sup;
    Ok(if b > 0.0 { a / b } else { f64::NAN })
}

/// All ratios inside `[1/K, K]`.
pub fn check_norm_equivalence(ratios: &[f64], k: f64) -> Verdict {
    let hi = ratios.iter().cloned().fold(0.0, f64::max);
    let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let spread = hi.max(1.0 / lo);
    Verdict::new(
        "norm_equivalence",
        json!({ "trials": ratios.len(), "min": lo, "max": hi }),
        spread,
        k,
        Outcome::from_bool(spread.is_finite() && spread <= k),
        0.0,
    )
}

/// Tail of `Λφ` for a window centred at the origin.
#[derive(Clone, Debug)]
pub struct KernelDecay {
    /// Least-squares slope of `log|Λφ|` against `log|x|` on `5 ≤ |x| ≤ L/3`.
    pub slope: f64,
    /// `max |Λφ(x)| |x|³` over the annulus.
    pub tail_constant: f64,
    /// Largest ratio of `|Λφ|` to the image-summed envelope
    /// `C_{2,1}‖φ‖_{L¹} Σ_p (|x + pL| − ρ)^{-3}`, `ρ` the support radius.
    pub envelope_ratio: f64,
    pub verdict: Verdict,
}

const IMAGE_SHELLS: i64 = 8;

fn envelope(x: f64, y: f64, l: f64, rho: f64) -> f64 {
    let mut acc = 0.0;
    for p in -IMAGE_SHELLS..=IMAGE_SHELLS {
        for q in -IMAGE_SHELLS..=IMAGE_SHELLS {
            let d = (x + p as f64 * l).hypot(y + q as f64 * l) - rho;
            acc += d.powi(-3);
        }
    }
    // images beyond the summed square, bounded by the radial integral
    let r_out = (IMAGE_SHELLS as f64 + 0.5) * l - x.hypot(y) - rho;
    acc + 2.0 * PI / (l * l * r_out)
}

/// `|Λφ(x)| ≲ |x|^{-3}`: slope of the spectral `Λφ` on the annulus
/// `5 ≤ |x| ≤ L/3` at most `-2.7`, and `|Λφ|` below the envelope implied
/// by the positive kernel. Tori smaller than 32 are inconclusive.
pub fn check_kernel_decay(phi: &Field) -> Result<KernelDecay> {
    let grid = phi.grid();
    let l = grid.length();
    let n = grid.n();
    let params = json!({ "L": l, "n": n });
    let inconclusive = |note: &str| KernelDecay {
        slope: f64::NAN,
        tail_constant: f64::NAN,
        envelope_ratio: f64::NAN,
        verdict: Verdict::inconclusive("kernel_decay", params.clone(), note),
    };
    if l < 32.0 {
        return Ok(inconclusive("torus too small for a decade of tail"));
    }
    let lphi = lambda_field(phi, 1.0)?;
    if lphi.linf() <= 1e-13 * phi.linf().max(1.0) {
        return Ok(KernelDecay {
            slope: f64::NAN,
            tail_constant: 0.0,
            envelope_ratio: 0.0,
            verdict: Verdict::new("kernel_decay", params, 0.0, 0.0, Outcome::Pass, 0.0)
                .with_note("Λφ vanishes"),
        });
    }
    let mut rho: f64 = 0.0;
    for j in 0..n {
        for i in 0..n {
            if phi.at(i, j) != 0.0 {
                rho = rho.max(grid.radius(i, j));
            }
        }
    }
    let mass = phi.l1();
    let c1 = fractional_laplacian_constant(1.0);
    let (mut sx, mut sy, mut sxx, mut sxy, mut count) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let mut tail_constant: f64 = 0.0;
    let mut envelope_ratio: f64 = 0.0;
    for j in 0..n {
        for i in 0..n {
            let r = grid.radius(i, j);
            if !(r >= 5.0 && r <= l / 3.0) || r <= rho {
                continue;
            }
            let v = lphi.at(i, j).abs();
            tail_constant = tail_constant.max(v * r.powi(3));
            let env = c1 * mass * envelope(grid.centered(i), grid.centered(j), l, rho);
            envelope_ratio = envelope_ratio.max(v / env);
            if v > 0.0 {
                let (lx, ly) = (r.ln(), v.ln());
                sx += lx;
                sy += ly;
                sxx += lx * lx;
                sxy += lx * ly;
                count += 1.0;
            }
        }
    }
    let slope = (count * sxy - sx * sy) / (count * sxx - sx * sx);
    let ok = slope <= -2.7 && envelope_ratio <= 1.0;
    Ok(KernelDecay {
        slope,
        tail_constant,
        envelope_ratio,
        verdict: Verdict::new(
            "kernel_decay",
            params,
            slope,
            -2.7,
            Outcome::from_bool(ok),
            0.0,
        )
        .with_note(format!(
            "tail constant {tail_constant:.4e}, envelope ratio {envelope_ratio:.4}"
        )),
    })
}
