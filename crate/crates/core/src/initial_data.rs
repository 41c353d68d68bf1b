//! Initial data `θ₀ = Λ^s w₀` and its truncated, mollified family
//! `θ_{0,R,ε} = Λ^s(w₀ χ_R) * ρ_ε`.

use std::f64::consts::PI;
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SqgError};
use crate::function_spaces::{hs_uloc_norm, smooth_step, HsUlocVariant, WindowFamily};
use crate::quadrature::fractional_laplacian_constant;
use crate::spectral::{apply_lambda_mean_zero, inverse, transform, Field, GridSpec, SpectralField};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Generator {
    /// Random phases with `|ŵ(k)| ∝ |k|^{-β}`, optionally cut off at `|k| > kcut`.
    GaussianSpectrum { beta: f64, kcut: Option<f64> },
    /// Random-amplitude bumps of the given radius on a lattice of the given spacing.
    BumpLattice { spacing: f64, radius: f64 },
    /// `θ₀` a mean-zero dipole supported in `|x| ≤ 2`, `w₀ = Λ^{-s}θ₀`.
    Localized,
    /// `w₀ = cos(k·x)` for mode `(m₁, m₂)`.
    SingleMode { m1: i64, m2: i64 },
    /// `w₀` read from a snapshot file.
    File { path: PathBuf },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DataRecipe {
    pub generator: Generator,
    pub seed: u64,
    pub amplitude: f64,
    pub s: f64,
    /// When set, `w₀` is rescaled so that `‖Λ^s w₀‖_∞ = amplitude · target_linf`.
    pub target_linf: Option<f64>,
}

impl DataRecipe {
    /// Runs outside `1/2 < s < 1` are exploratory.
    pub fn is_exploratory(&self) -> bool {
        !(self.s > 0.5 && self.s < 1.0)
    }
}

fn mode_seed(seed: u64, m1: i64, m2: i64) -> u64 {
    // splitmix64 finaliser over the packed key
    let mut z = seed
        ^ (m1 as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (m2 as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `w₀` for a recipe; always mean-zero.
pub fn generate_w0(recipe: &DataRecipe, grid: &GridSpec) -> Result<Field> {
    let raw = match &recipe.generator {
        Generator::GaussianSpectrum { beta, kcut } => {
            gaussian_spectrum(grid, recipe.seed, *beta, *kcut, recipe.s)?
        }
        Generator::BumpLattice { spacing, radius } => {
            bump_lattice(grid, recipe.seed, *spacing, *radius)?
        }
        Generator::Localized => {
            let theta = localized_theta(grid, recipe.seed);
            inverse(&apply_lambda_mean_zero(&transform(&theta)?, -recipe.s))
        }
        Generator::SingleMode { m1, m2 } => {
            let mut spec = SpectralField::zeros(grid);
            spec.set_mode(*m1, *m2, Complex64::new(0.5, 0.0));
            inverse(&spec)
        }
        Generator::File { path } => {
            let snap = crate::io::snapshot::read_snapshot(path)?;
            grid.ensure_same(snap.field.grid())?;
            inverse(&transform(&snap.field)?.mean_zero())
        }
    };
    let scale = match recipe.target_linf {
        Some(target) => {
            let theta_linf = inverse(&apply_lambda_mean_zero(&transform(&raw)?, recipe.s)).linf();
            if theta_linf == 0.0 {
                0.0
            } else {
                recipe.amplitude * target / theta_linf
            }
        }
        None => recipe.amplitude,
    };
    Ok(raw.scale(scale))
}

fn gaussian_spectrum(
    grid: &GridSpec,
    seed: u64,
    beta: f64,
    kcut: Option<f64>,
    s: f64,
) -> Result<Field> {
    if beta <= 1.0 + s {
        return Err(SqgError::InvalidParameter(format!(
            "spectral slope beta = {beta} too small: Σ|k|^(-2β)(1+|k|²)^s diverges unless beta > 1 + s = {}",
            1.0 + s
        )));
    }
    let n = grid.n() as i64;
    let half = n / 2;
    let mut spec = SpectralField::zeros(grid);
    let dk = 2.0 * PI / grid.length();
    for m1 in 0..half {
        for m2 in (-half + 1)..half {
            if m1 == 0 && m2 <= 0 {
                continue;
            }
            let k = dk * ((m1 * m1 + m2 * m2) as f64).sqrt();
            if kcut.is_some_and(|c| k > c) {
                continue;
            }
            let mut rng = ChaCha8Rng::seed_from_u64(mode_seed(seed, m1, m2));
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            let amp = k.powf(-beta) / std::f64::consts::SQRT_2;
            spec.set_mode(m1, m2, Complex64::new(re * amp, im * amp));
        }
    }
    Ok(inverse(&spec))
}

/// `C^∞` bump equal to `exp(1 - 1/(1 - r²))` on the unit disk (peak 1).
pub fn unit_bump(r: f64) -> f64 {
    if r >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - r * r)).exp()
    }
}

fn bump_lattice(grid: &GridSpec, seed: u64, spacing: f64, radius: f64) -> Result<Field> {
    let l = grid.length();
    if !(spacing > 0.0 && radius > 0.0) || 2.0 * radius >= l {
        return Err(SqgError::InvalidParameter(format!(
            "bump lattice needs 0 < 2·radius < L and spacing > 0 (spacing {spacing}, radius {radius})"
        )));
    }
    let per_side = (l / spacing).round().max(1.0) as usize;
    let step = l / per_side as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amps: Vec<f64> = (0..per_side * per_side)
        .map(|_| rng.sample(StandardNormal))
        .collect();
    let f = Field::from_fn(grid, |x, y| {
        let mut acc = 0.0;
        for b in 0..per_side {
            for a in 0..per_side {
                let cx = (a as f64 + 0.5) * step;
                let cy = (b as f64 + 0.5) * step;
                let dx = wrap(x - cx, l);
                let dy = wrap(y - cy, l);
                acc += amps[b * per_side + a] * unit_bump(dx.hypot(dy) / radius);
            }
        }
        acc
    });
    let m = f.mean();
    Ok(f.map(|v| v - m))
}

fn wrap(d: f64, l: f64) -> f64 {
    d - l * (d / l).round()
}

/// Mean-zero dipole of two bumps of radius 1.1 at `±0.8·e(θ)`, with the
/// orientation `θ` drawn from the seed. Supported in `|x| ≤ 1.9`.
pub fn localized_theta(grid: &GridSpec, seed: u64) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let angle: f64 = rng.random::<f64>() * PI;
    let (c, s) = (0.8 * angle.cos(), 0.8 * angle.sin());
    Field::from_fn_centered(grid, |x, y| {
        unit_bump((x - c).hypot(y - s) / 1.1) - unit_bump((x + c).hypot(y + s) / 1.1)
    })
}

/// Truncation radius `R` and mollification width `ε`; `None` disables a stage.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TruncationParams {
    pub radius: Option<f64>,
    pub eps: Option<f64>,
}

impl TruncationParams {
    pub fn new(radius: f64, eps: f64) -> Self {
        Self {
            radius: Some(radius),
            eps: Some(eps),
        }
    }

    pub fn validate(&self, grid: &GridSpec) -> Result<()> {
        if let Some(r) = self.radius {
            check_radius(grid, r)?;
        }
        if let Some(e) = self.eps {
            check_eps(grid, e)?;
        }
        Ok(())
    }
}

fn check_radius(grid: &GridSpec, r: f64) -> Result<()> {
    if !(r > 1.0) {
        return Err(SqgError::InvalidParameter(format!(
            "truncation radius R = {r} must exceed 1"
        )));
    }
    if 2.0 * r >= 0.5 * grid.length() {
        return Err(SqgError::SupportOverflow(format!(
            "R must satisfy 2R < L/2 (R = {r}, L = {})",
            grid.length()
        )));
    }
    Ok(())
}

fn check_eps(grid: &GridSpec, eps: f64) -> Result<()> {
    if !(eps >= grid.dx() * (1.0 - 1e-12)) {
        return Err(SqgError::MollifierUnderResolved { eps, dx: grid.dx() });
    }
    Ok(())
}

/// Profile of `χ`: 1 on `r ≤ 1`, 0 on `r ≥ 2`.
pub fn chi_profile(r: f64) -> f64 {
    1.0 - smooth_step(r - 1.0)
}

/// `‖∇χ‖_∞` of the unit-scale cutoff, from a fine radial scan.
pub fn chi_gradient_bound() -> f64 {
    let samples = 20_000;
    let h = 1.0 / samples as f64;
    (0..samples)
        .map(|i| {
            let r = 1.0 + i as f64 * h;
            ((chi_profile(r + h) - chi_profile(r)) / h).abs()
        })
        .fold(0.0, f64::max)
}

/// `χ_R(x) = χ(|x|/R)` centred at the origin.
pub fn build_chi_r(grid: &GridSpec, radius: f64) -> Result<Field> {
    check_radius(grid, radius)?;
    Ok(Field::from_fn_centered(grid, |x, y| {
        chi_profile(x.hypot(y) / radius)
    }))
}

/// Sampled mollifier `ρ_ε` centred at the origin with unit discrete mass.
pub fn mollifier(grid: &GridSpec, eps: f64) -> Result<Field> {
    check_eps(grid, eps)?;
    let f = Field::from_fn_centered(grid, |x, y| unit_bump(x.hypot(y) / eps));
    let mass = f.integral();
    Ok(f.scale(1.0 / mass))
}

/// `f * ρ_ε`.
pub fn mollify(f: &Field, eps: f64) -> Result<Field> {
    let rho = mollifier(f.grid(), eps)?;
    crate::spectral::convolve(f, &rho)
}

#[derive(Clone, Debug)]
pub struct TruncatedData {
    pub theta0: Field,
    pub w0: Field,
    /// Mean of `θ_{0,R,ε}` before `Λ^{-s}` (dropped from `w`, kept here).
    pub residual_mean: f64,
}

/// `θ_{0,R,ε} = Λ^s(w₀ χ_R) * ρ_ε` and `w_{0,R,ε} = Λ^{-s}` of its mean-zero part.
pub fn build_truncated_data(
    w0: &Field,
    s: f64,
    params: &TruncationParams,
) -> Result<TruncatedData> {
    let grid = w0.grid();
    params.validate(grid)?;
    let truncated = match params.radius {
        Some(r) => w0.zip_map(&build_chi_r(grid, r)?, |a, b| a * b)?,
        None => w0.clone(),
    };
    let mut spec = apply_lambda_mean_zero(&transform(&truncated)?, s);
    if let Some(eps) = params.eps {
        let rho = transform(&mollifier(grid, eps)?)?;
        let l2 = grid.length() * grid.length();
        spec = spec.zip_with(&rho, |a, b| a * b * l2)?;
    }
    let residual_mean = spec.mean();
    let theta0 = inverse(&spec);
    let w = inverse(&apply_lambda_mean_zero(&spec.mean_zero(), -s));
    Ok(TruncatedData {
        theta0,
        w0: w,
        residual_mean,
    })
}

/// Pointwise bound constant from the commutator estimate for
/// `Λ^s(w₀χ_R) - χ_R Λ^s w₀`:
/// `‖θ_{0,R,ε}‖_∞ ≤ ‖θ₀‖_∞ + C · R^{-s}` with
/// `C = 2π C_{2,s} ‖w₀‖_∞ (‖∇χ‖_∞/(1-s) + 2/s)`.
pub fn truncation_bound_constant(s: f64, w0_linf: f64) -> f64 {
    2.0 * PI
        * fractional_laplacian_constant(s)
        * w0_linf
        * (chi_gradient_bound() / (1.0 - s) + 2.0 / s)
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub radius: f64,
    pub eps: f64,
    pub linf_theta: f64,
    pub hs_uloc_w: f64,
    pub flag: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundSweep {
    pub rows: Vec<SweepRow>,
    pub theta0_linf: f64,
    pub w0_linf: f64,
    /// `max (‖θ_{0,R,ε}‖_∞ - ‖θ₀‖_∞) R^s` over the sweep.
    pub c_fit: f64,
    pub any_flag: bool,
}

impl BoundSweep {
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["R", "eps", "linf_theta", "hs_uloc_w", "flag"])?;
        for r in &self.rows {
            w.write_record([
                r.radius.to_string(),
                r.eps.to_string(),
                format!("{:e}", r.linf_theta),
                format!("{:e}", r.hs_uloc_w),
                r.flag.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Grows monotonically and ends beyond twice its first value.
fn runaway(values: &[f64]) -> bool {
    values.len() >= 2
        && values.windows(2).all(|p| p[1] > p[0])
        && values[values.len() - 1] > 2.0 * values[0]
}

/// `(R, ε, ‖θ_{0,R,ε}‖_∞, ‖w_{0,R,ε}‖_{H^s_uloc})` over the product of the lists.
pub fn uniform_bound_sweep(
    w0: &Field,
    s: f64,
    radii: &[f64],
    eps_list: &[f64],
    windows: &WindowFamily,
) -> Result<BoundSweep> {
    if radii.windows(2).any(|p| p[1] <= p[0]) {
        return Err(SqgError::InvalidParameter(
            "R list must be strictly increasing".into(),
        ));
    }
    let grid = w0.grid();
    let theta0_linf = inverse(&apply_lambda_mean_zero(&transform(w0)?, s)).linf();
    let pairs: Vec<(f64, f64)> = radii
        .iter()
        .flat_map(|&r| eps_list.iter().map(move |&e| (r, e)))
        .collect();
    for &(r, e) in &pairs {
        TruncationParams::new(r, e).validate(grid)?;
    }
    let values = crate::par::map_slice(&pairs, |&(r, e)| {
        let data = build_truncated_data(w0, s, &TruncationParams::new(r, e))?;
        let hs = hs_uloc_norm(&data.w0, s, windows, HsUlocVariant::A)?.energy_norm();
        Ok::<_, SqgError>((data.theta0.linf(), hs))
    });
    let values: Vec<(f64, f64)> = values.into_iter().collect::<Result<_>>()?;
    let mut rows: Vec<SweepRow> = pairs
        .iter()
        .zip(&values)
        .map(|(&(r, e), &(linf, hs))| SweepRow {
            radius: r,
            eps: e,
            linf_theta: linf,
            hs_uloc_w: hs,
            flag: false,
        })
        .collect();
    for (ei, _) in eps_list.iter().enumerate() {
        let column: Vec<usize> = (0..radii.len())
            .map(|ri| ri * eps_list.len() + ei)
            .collect();
        let linf: Vec<f64> = column.iter().map(|&i| rows[i].linf_theta).collect();
        let hs: Vec<f64> = column.iter().map(|&i| rows[i].hs_uloc_w).collect();
        if runaway(&linf) || runaway(&hs) {
            for &i in &column {
                rows[i].flag = true;
            }
        }
    }
    let c_fit = rows
        .iter()
        .map(|r| (r.linf_theta - theta0_linf) * r.radius.powf(s))
        .fold(f64::NEG_INFINITY, f64::max);
    let any_flag = rows.iter().any(|r| r.flag);
    Ok(BoundSweep {
        rows,
        theta0_linf,
        w0_linf: w0.linf(),
        c_fit,
        any_flag,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_amplitude_gives_zero() {
        let g = GridSpec::new(32, 8.0).unwrap();
        let r = DataRecipe {
            generator: Generator::GaussianSpectrum {
                beta: 2.5,
                kcut: None,
            },
            seed: 1,
            amplitude: 0.0,
            s: 0.6,
            target_linf: None,
        };
        assert_eq!(generate_w0(&r, &g).unwrap().linf(), 0.0);
    }

    #[test]
    fn shallow_spectrum_rejected() {
        let g = GridSpec::new(32, 8.0).unwrap();
        let r = DataRecipe {
            generator: Generator::GaussianSpectrum {
                beta: 1.5,
                kcut: None,
            },
            seed: 1,
            amplitude: 1.0,
            s: 0.6,
            target_linf: None,
        };
        assert!(generate_w0(&r, &g).is_err());
    }

    #[test]
    fn chi_plateau_and_support() {
        let g = GridSpec::new(128, 64.0).unwrap();
        let chi = build_chi_r(&g, 8.0).unwrap();
        assert_eq!(chi.at(0, 0), 1.0);
        // |x| = 20 = 2.5R
        assert_eq!(chi.at(40, 0), 0.0);
        assert!(build_chi_r(&g, 16.0).is_err());
        assert!(build_chi_r(&g, 1.0).is_err());
    }

    #[test]
    fn mollifier_needs_resolution() {
        let g = GridSpec::new(64, 8.0).unwrap();
        let err = mollify(&Field::constant(&g, 1.0), 0.05).unwrap_err();
        assert!(err.to_string().contains("mollifier under-resolved"));
        let m = mollify(&Field::constant(&g, 2.0), 0.5).unwrap();
        assert!(m.values().iter().all(|v| (v - 2.0).abs() < 1e-13));
    }
}
