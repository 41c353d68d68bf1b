use rustfft::num_complex::Complex64;
use sha2::{Digest, Sha256};

use super::grid::GridSpec;
use crate::error::{Result, SqgError};

/// Real samples of one scalar on the grid, row-major: `values[j * n + i]`
/// sits at `(x₁, x₂) = (i·dx, j·dx)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    grid: GridSpec,
    values: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: &GridSpec) -> Self {
        Self {
            grid: grid.clone(),
            values: vec![0.0; grid.len()],
        }
    }

    pub fn constant(grid: &GridSpec, c: f64) -> Self {
        Self {
            grid: grid.clone(),
            values: vec![c; grid.len()],
        }
    }

    pub fn from_values(grid: &GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(SqgError::GridMismatch(format!(
                "expected {} samples, got {}",
                grid.len(),
                values.len()
            )));
        }
        Ok(Self {
            grid: grid.clone(),
            values,
        })
    }

    /// Samples `f(x₁, x₂)` at the grid nodes `[0, L)²`.
    pub fn from_fn(grid: &GridSpec, f: impl Fn(f64, f64) -> f64) -> Self {
        let n = grid.n();
        let mut values = Vec::with_capacity(grid.len());
        for j in 0..n {
            for i in 0..n {
                values.push(f(grid.coord(i), grid.coord(j)));
            }
        }
        Self {
            grid: grid.clone(),
            values,
        }
    }

    /// Samples `f` at minimal-image coordinates in `[-L/2, L/2)²`, so that
    /// compactly supported profiles are centred on the origin of the torus.
    pub fn from_fn_centered(grid: &GridSpec, f: impl Fn(f64, f64) -> f64) -> Self {
        let n = grid.n();
        let mut values = Vec::with_capacity(grid.len());
        for j in 0..n {
            for i in 0..n {
                values.push(f(grid.centered(i), grid.centered(j)));
            }
        }
        Self {
            grid: grid.clone(),
            values,
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.grid.n() + i]
    }

    pub fn check_finite(&self, what: &'static str) -> Result<()> {
        match self.values.iter().position(|v| !v.is_finite()) {
            Some(index) => Err(SqgError::NonFinite { what, index }),
            None => Ok(()),
        }
    }

    pub fn linf(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Grid index of the largest `|value|`.
    pub fn argmax_abs(&self) -> usize {
        let mut best = 0;
        for (i, v) in self.values.iter().enumerate() {
            if v.abs() > self.values[best].abs() {
                best = i;
            }
        }
        best
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// `∫ f dx` by the (spectrally exact) rectangle rule.
    pub fn integral(&self) -> f64 {
        let dx = self.grid.dx();
        self.values.iter().sum::<f64>() * dx * dx
    }

    pub fn l1(&self) -> f64 {
        let dx = self.grid.dx();
        self.values.iter().map(|v| v.abs()).sum::<f64>() * dx * dx
    }

    pub fn l2(&self) -> f64 {
        let dx = self.grid.dx();
        (self.values.iter().map(|v| v * v).sum::<f64>() * dx * dx).sqrt()
    }

    pub fn lp(&self, p: f64) -> f64 {
        if p.is_infinite() {
            return self.linf();
        }
        let dx = self.grid.dx();
        (self.values.iter().map(|v| v.abs().powf(p)).sum::<f64>() * dx * dx).powf(1.0 / p)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.grid.ensure_same(&other.grid)?;
        Ok(Self {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    /// Periodic shift by whole grid cells: `out(x) = self(x - (di, dj)·dx)`.
    pub fn shifted(&self, di: isize, dj: isize) -> Self {
        let n = self.grid.n() as isize;
        let mut values = vec![0.0; self.values.len()];
        for j in 0..n {
            let sj = (j - dj).rem_euclid(n);
            for i in 0..n {
                let si = (i - di).rem_euclid(n);
                values[(j * n + i) as usize] = self.values[(sj * n + si) as usize];
            }
        }
        Self {
            grid: self.grid.clone(),
            values,
        }
    }

    /// SHA-256 of the little-endian sample bytes, hex-encoded.
    pub fn content_hash(&self) -> String {
        let mut hasher = Sha256::new();
        for v in &self.values {
            hasher.update(v.to_le_bytes());
        }
        hasher
            .finalize()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

/// Half-spectrum Fourier coefficients of a real field.
///
/// Coefficients follow the Fourier-series convention
/// `f(x) = Σ_m c_m e^{i k_m·x}`, i.e. `c_m = n⁻² Σ_x f(x) e^{-i k_m·x}`, so
/// that `cos(x₁)` on a `2π` torus has `c = 1/2` on modes `(±1, 0)`. With this
/// normalisation Parseval reads `mean(f²) = Σ_m |c_m|²` with no extra
/// factors. Only columns `m₁ = 0..=n/2` are stored (layout
/// `coeffs[c * n + j]`); negative `m₁` follow from conjugate symmetry.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    grid: GridSpec,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(grid: &GridSpec) -> Self {
        Self {
            grid: grid.clone(),
            coeffs: vec![Complex64::new(0.0, 0.0); grid.spectral_len()],
        }
    }

    pub(crate) fn from_raw(grid: &GridSpec, coeffs: Vec<Complex64>) -> Self {
        debug_assert_eq!(coeffs.len(), grid.spectral_len());
        Self {
            grid: grid.clone(),
            coeffs,
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Coefficient of signed mode `(m₁, m₂)`.
    pub fn mode(&self, m1: i64, m2: i64) -> Complex64 {
        let n = self.grid.n() as i64;
        let half = n / 2;
        let (c, r, conj) = if (0..=half).contains(&m1) {
            (m1, m2, false)
        } else if m1 == -half {
            (half, m2, false)
        } else {
            (-m1, -m2, true)
        };
        let j = r.rem_euclid(n) as usize;
        let v = self.coeffs[c as usize * self.grid.n() + j];
        if conj {
            v.conj()
        } else {
            v
        }
    }

    /// Sets a mode and its conjugate partner so the field stays real.
    pub fn set_mode(&mut self, m1: i64, m2: i64, value: Complex64) {
        let n = self.grid.n();
        let half = (n / 2) as i64;
        let (c, r, v) = if m1 >= 0 && m1 <= half {
            (m1, m2, value)
        } else {
            (-m1, -m2, value.conj())
        };
        let j = r.rem_euclid(n as i64) as usize;
        self.coeffs[c as usize * n + j] = v;
        if c == 0 || c == half {
            let jc = (-r).rem_euclid(n as i64) as usize;
            self.coeffs[c as usize * n + jc] = v.conj();
            if jc == j {
                self.coeffs[c as usize * n + j].im = 0.0;
            }
        }
    }

    /// Zero-mode coefficient (the grid mean).
    pub fn mean(&self) -> f64 {
        self.coeffs[0].re
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.norm()))
    }

    pub fn check_finite(&self, what: &'static str) -> Result<()> {
        match self
            .coeffs
            .iter()
            .position(|c| !(c.re.is_finite() && c.im.is_finite()))
        {
            Some(index) => Err(SqgError::NonFinite { what, index }),
            None => Ok(()),
        }
    }

    /// Multiplicity of stored column `c` in the full spectrum.
    pub(crate) fn column_weight(&self, c: usize) -> f64 {
        if c == 0 || c == self.grid.n() / 2 {
            1.0
        } else {
            2.0
        }
    }

    /// `Σ_m w(k) |c_m|²` over the full spectrum.
    pub fn weighted_energy(&self, weight: impl Fn(f64, f64) -> f64 + Sync) -> f64 {
        let n = self.grid.n();
        let grid = &self.grid;
        crate::par::ordered_sum(grid.half(), |c| {
            let k1 = grid.wavenumber(c);
            let col = &self.coeffs[c * n..(c + 1) * n];
            let mut acc = 0.0;
            for (j, z) in col.iter().enumerate() {
                acc += weight(k1, grid.wavenumber(j)) * z.norm_sqr();
            }
            acc * self.column_weight(c)
        })
    }

    /// `Σ_m |c_m|²`, equal to the grid mean of `f²`.
    pub fn energy(&self) -> f64 {
        self.weighted_energy(|_, _| 1.0)
    }

    /// `‖f‖²_{L²}` over the torus (`L² · Σ|c|²`).
    pub fn l2_squared(&self) -> f64 {
        let l = self.grid.length();
        l * l * self.energy()
    }

    /// Applies `f(k₁, k₂, m₁, m₂, c) -> c'` to every stored coefficient.
    pub fn map_modes(&self, f: impl Fn(ModeInfo, Complex64) -> Complex64 + Sync) -> Self {
        let mut out = self.clone();
        out.map_modes_in_place(f);
        out
    }

    pub fn map_modes_in_place(&mut self, f: impl Fn(ModeInfo, Complex64) -> Complex64 + Sync) {
        let grid = self.grid.clone();
        let n = grid.n();
        crate::par::for_each_chunk(&mut self.coeffs, n, |c, col| {
            let k1 = grid.wavenumber(c);
            let m1 = grid.mode(c);
            let nyq1 = grid.is_nyquist(c);
            for (j, z) in col.iter_mut().enumerate() {
                let info = ModeInfo {
                    k1,
                    k2: grid.wavenumber(j),
                    m1,
                    m2: grid.mode(j),
                    nyquist: nyq1 || grid.is_nyquist(j),
                };
                *z = f(info, *z);
            }
        });
    }

    pub fn zip_with(
        &self,
        other: &SpectralField,
        f: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Result<Self> {
        self.grid.ensure_same(&other.grid)?;
        Ok(Self {
            grid: self.grid.clone(),
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            grid: self.grid.clone(),
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    /// Copy of this field with the zero mode removed.
    pub fn mean_zero(&self) -> Self {
        let mut out = self.clone();
        out.coeffs[0] = Complex64::new(0.0, 0.0);
        out
    }

    /// Largest `max(|m₁|, |m₂|)` over coefficients with magnitude above `threshold`.
    pub fn max_active_mode(&self, threshold: f64) -> usize {
        let n = self.grid.n();
        let mut best = 0usize;
        for c in 0..self.grid.half() {
            let m1 = self.grid.mode(c).unsigned_abs() as usize;
            for j in 0..n {
                if self.coeffs[c * n + j].norm() > threshold {
                    let m2 = self.grid.mode(j).unsigned_abs() as usize;
                    best = best.max(m1.max(m2));
                }
            }
        }
        best
    }

    /// Spectral interpolation / truncation onto another grid of the same
    /// side length. Modes with `|m| < min(n, n')/2` are copied; the rest are
    /// zero, so the source Nyquist row and column are dropped.
    pub fn resample(&self, target: &GridSpec) -> Result<SpectralField> {
        if target.length() != self.grid.length() {
            return Err(SqgError::GridMismatch(
                "resampling requires equal side lengths".into(),
            ));
        }
        let lim = (self.grid.n().min(target.n()) / 2) as i64;
        let mut out = SpectralField::zeros(target);
        let tn = target.n();
        for c in 0..lim as usize {
            for m2 in (-lim + 1)..lim {
                let v = self.mode(c as i64, m2);
                let j = m2.rem_euclid(tn as i64) as usize;
                out.coeffs[c * tn + j] = v;
            }
        }
        Ok(out)
    }
}

/// Per-mode data handed to [`SpectralField::map_modes`].
#[derive(Clone, Copy, Debug)]
pub struct ModeInfo {
    pub k1: f64,
    pub k2: f64,
    pub m1: i64,
    pub m2: i64,
    /// Mode lies on the Nyquist row or column.
    pub nyquist: bool,
}

impl ModeInfo {
    pub fn kmag(&self) -> f64 {
        self.k1.hypot(self.k2)
    }

    pub fn is_zero(&self) -> bool {
        self.m1 == 0 && self.m2 == 0
    }
}
