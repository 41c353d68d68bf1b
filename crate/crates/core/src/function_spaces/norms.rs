use std::fmt;
use std::io::Write;

use serde::Serialize;

use super::windows::WindowFamily;
use crate::error::{Result, SqgError};
use crate::spectral::{apply_lambda_mean_zero, inverse, transform, Field, GridSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NormId {
    LpUloc,
    HsUlocA,
    HsUlocB,
    Aphi,
    SpacetimeHs,
    SpacetimeL2,
}

impl fmt::Display for NormId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            NormId::LpUloc => "lp_uloc",
            NormId::HsUlocA => "hs_uloc_a",
            NormId::HsUlocB => "hs_uloc_b",
            NormId::Aphi => "a_phi",
            NormId::SpacetimeHs => "spacetime_hs_uloc",
            NormId::SpacetimeL2 => "spacetime_l2_uloc",
        };
        f.write_str(s)
    }
}

/// Per-window values of a uniformly local quantity together with their supremum.
#[derive(Clone, Debug, Serialize)]
pub struct NormReport {
    pub id: NormId,
    /// Exponent `p` for `L^p_uloc`, `s` for Sobolev variants.
    pub exponent: f64,
    pub values: Vec<f64>,
    pub sup: f64,
    pub argmax: usize,
}

impl NormReport {
    pub fn new(id: NormId, exponent: f64, values: Vec<f64>) -> Self {
        let mut argmax = 0;
        for (i, v) in values.iter().enumerate() {
            if *v > values[argmax] {
                argmax = i;
            }
        }
        let sup = values.get(argmax).copied().unwrap_or(0.0);
        Self {
            id,
            exponent,
            values,
            sup,
            argmax,
        }
    }

    /// Norm associated with an energy-type sup `A = (‖·‖² + ‖Λ^s ·‖²)/2`.
    pub fn energy_norm(&self) -> f64 {
        (2.0 * self.sup).sqrt()
    }

    /// CSV rows `(norm_id, s, window_index, value, sup_flag)`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["norm_id", "s", "window_index", "value", "sup_flag"])?;
        for (i, v) in self.values.iter().enumerate() {
            w.write_record([
                self.id.to_string(),
                self.exponent.to_string(),
                i.to_string(),
                format!("{v:e}"),
                (i == self.argmax).to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Sums of `g` over every `width × width` block of grid cells (periodic),
/// indexed by the block's lower-left corner.
pub(crate) fn block_sums(grid: &GridSpec, g: &[f64], width: usize) -> Vec<f64> {
    let n = grid.n();
    let rows = crate::par::map_range(n, |j| {
        let row = &g[j * n..(j + 1) * n];
        (0..n)
            .map(|i| (0..width).map(|d| row[(i + d) % n]).sum::<f64>())
            .collect::<Vec<_>>()
    });
    let mut out = vec![0.0; n * n];
    crate::par::for_each_chunk(&mut out, n, |j, dst| {
        for (i, d) in dst.iter_mut().enumerate() {
            *d = (0..width).map(|t| rows[(j + t) % n][i]).sum();
        }
    });
    out
}

fn unit_cell_points(grid: &GridSpec) -> Result<usize> {
    let ppu = 1.0 / grid.dx();
    let rounded = ppu.round();
    if (ppu - rounded).abs() > 1e-9 || rounded < 1.0 {
        return Err(SqgError::InvalidGrid(format!(
            "unit cells need an integer number of grid points per unit length, got {ppu}"
        )));
    }
    Ok(rounded as usize)
}

/// `‖f‖_{L^p_uloc}`: the supremum over every grid-aligned unit square of
/// `(∫_Q |f|^p)^{1/p}`; for `p = ∞` the global maximum.
pub fn lp_uloc_norm(f: &Field, p: f64) -> Result<NormReport> {
    if !(p >= 1.0) {
        return Err(SqgError::InvalidParameter(format!("p = {p} must be ≥ 1")));
    }
    if p.is_infinite() {
        return Ok(NormReport::new(NormId::LpUloc, p, vec![f.linf()]));
    }
    let grid = f.grid();
    let width = unit_cell_points(grid)?;
    let dx2 = grid.dx() * grid.dx();
    let powered: Vec<f64> = f.values().iter().map(|v| v.abs().powf(p) * dx2).collect();
    let sums = block_sums(grid, &powered, width);
    Ok(NormReport::new(
        NormId::LpUloc,
        p,
        sums.into_iter().map(|v| v.powf(1.0 / p)).collect(),
    ))
}

/// `‖f‖²_{H^s} = L² Σ (1 + |k|²)^s |c_k|²`.
pub fn hs_norm_squared(f: &Field, s: f64) -> Result<f64> {
    let spec = transform(f)?;
    let l = f.grid().length();
    Ok(l * l * spec.weighted_energy(|k1, k2| (1.0 + k1 * k1 + k2 * k2).powf(s)))
}

/// `‖Λ^s f‖²_{L²}` (homogeneous seminorm).
pub fn homogeneous_hs_squared(f: &Field, s: f64) -> Result<f64> {
    let spec = transform(f)?;
    let l = f.grid().length();
    Ok(l * l
        * spec.weighted_energy(|k1, k2| {
            let k2s = k1 * k1 + k2 * k2;
            if k2s == 0.0 {
                0.0
            } else {
                k2s.powf(s)
            }
        }))
}

/// `Λ^s f` on the grid (zero mode dropped).
pub fn lambda_field(f: &Field, s: f64) -> Result<Field> {
    Ok(inverse(&apply_lambda_mean_zero(&transform(f)?, s)))
}

/// `A_φ(w) = ∫ (w²/2 + |Λ^s w|²/2) φ` given `w` and `Λ^s w`.
pub fn a_phi_from_parts(w: &Field, lw: &Field, windows: &WindowFamily, k: usize) -> f64 {
    let (wv, lv) = (w.values(), lw.values());
    let dx = w.grid().dx();
    let mut acc = 0.0;
    windows.for_each_point(k, |idx, v| {
        acc += 0.5 * (wv[idx] * wv[idx] + lv[idx] * lv[idx]) * v
    });
    acc * dx * dx
}

/// `A_φ(w)` for an arbitrary window field `φ`.
pub fn energy_functional_aphi(w: &Field, s: f64, phi: &Field) -> Result<f64> {
    w.grid().ensure_same(phi.grid())?;
    let lw = lambda_field(w, s)?;
    let dx = w.grid().dx();
    let sum: f64 = w
        .values()
        .iter()
        .zip(lw.values())
        .zip(phi.values())
        .map(|((a, b), p)| 0.5 * (a * a + b * b) * p)
        .sum();
    Ok(sum * dx * dx)
}

/// `A(g) = (‖g‖² + ‖Λ^s g‖²)/2` over the whole torus.
pub fn energy_a(g: &Field, s: f64) -> Result<f64> {
    let spec = transform(g)?;
    let l = g.grid().length();
    Ok(0.5
        * l
        * l
        * spec.weighted_energy(|k1, k2| {
            let k2s = k1 * k1 + k2 * k2;
            1.0 + if k2s == 0.0 { 0.0 } else { k2s.powf(s) }
        }))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HsUlocVariant {
    /// `sup_φ A_φ(w)`
    A,
    /// `sup_φ A(wφ)`
    B,
}

/// Uniformly local `H^s` energy over a window family; values are energies
/// (`A`-functionals), see [`NormReport::energy_norm`].
pub fn hs_uloc_norm(
    f: &Field,
    s: f64,
    windows: &WindowFamily,
    variant: HsUlocVariant,
) -> Result<NormReport> {
    check_s(s)?;
    f.grid().ensure_same(windows.grid())?;
    match variant {
        HsUlocVariant::A => {
            let lw = lambda_field(f, s)?;
            let values =
                crate::par::map_range(windows.len(), |k| a_phi_from_parts(f, &lw, windows, k));
            Ok(NormReport::new(NormId::HsUlocA, s, values))
        }
        HsUlocVariant::B => {
            let values = crate::par::map_range(windows.len(), |k| {
                energy_a(&windows.multiply(k, f), s).expect("finite input checked")
            });
            f.check_finite("hs_uloc input")?;
            Ok(NormReport::new(NormId::HsUlocB, s, values))
        }
    }
}

/// `[Λ^s, φ] w = Λ^s(φw) - φ Λ^s w`.
pub fn commutator_apply(phi: &Field, s: f64, w: &Field) -> Result<Field> {
    let pw = phi.zip_map(w, |a, b| a * b)?;
    let a = lambda_field(&pw, s)?;
    let lw = lambda_field(w, s)?;
    let b = phi.zip_map(&lw, |a, b| a * b)?;
    a.zip_map(&b, |x, y| x - y)
}

/// `sup_φ ∫_0^T ∫ φ |Λ^s w|²` with trapezoidal time quadrature at spacing
/// `dt` (the sup is taken after the time integral).
pub fn spacetime_uloc_accumulate(
    snapshots: &[Field],
    s: f64,
    dt: f64,
    windows: &WindowFamily,
) -> Result<NormReport> {
    let densities: Vec<Vec<f64>> = snapshots
        .iter()
        .map(|w| {
            w.grid().ensure_same(windows.grid())?;
            let lw = lambda_field(w, s)?;
            Ok(lw.values().iter().map(|v| v * v).collect())
        })
        .collect::<Result<_>>()?;
    Ok(NormReport::new(
        NormId::SpacetimeHs,
        s,
        windowed_time_integral(&densities, dt, windows),
    ))
}

/// Per-window `∫_0^T ∫ φ g(t)` by the trapezoid rule; `densities[t]` are grid samples of `g(t)`.
pub fn windowed_time_integral(densities: &[Vec<f64>], dt: f64, windows: &WindowFamily) -> Vec<f64> {
    if densities.is_empty() {
        return vec![0.0; windows.len()];
    }
    if densities.len() == 1 {
        return windows
            .integrate_all(&densities[0])
            .into_iter()
            .map(|v| v * dt)
            .collect();
    }
    let per_time: Vec<Vec<f64>> = densities.iter().map(|d| windows.integrate_all(d)).collect();
    let last = per_time.len() - 1;
    (0..windows.len())
        .map(|k| {
            per_time
                .iter()
                .enumerate()
                .map(|(t, row)| {
                    let w = if t == 0 || t == last { 0.5 } else { 1.0 };
                    w * row[k]
                })
                .sum::<f64>()
                * dt
        })
        .collect()
}

pub(crate) fn check_s(s: f64) -> Result<()> {
    if s > 0.0 && s < 1.0 {
        Ok(())
    } else {
        Err(SqgError::InvalidParameter(format!(
            "s = {s} must lie in (0, 1)"
        )))
    }
}
