use crate::error::{Result, SqgError};
use crate::spectral::{Field, GridSpec};

/// `exp(-1/t)` glue, zero for `t ≤ 0`.
fn glue(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        (-1.0 / t).exp()
    }
}

/// C^∞ step: 0 for `t ≤ 0`, 1 for `t ≥ 1`, monotone in between.
pub fn smooth_step(t: f64) -> f64 {
    let a = glue(t);
    let b = glue(1.0 - t);
    if a + b == 0.0 {
        0.0
    } else {
        a / (a + b)
    }
}

/// Radial cutoff equal to 1 on `r ≤ inner` and 0 on `r ≥ outer`.
pub fn radial_cutoff(r: f64, inner: f64, outer: f64) -> f64 {
    1.0 - smooth_step((r - inner) / (outer - inner))
}

/// Window profile shape.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum WindowProfile {
    /// Plateau `|x| ≤ 2`, support `|x| ≤ 3`.
    Phi0,
    /// Plateau `|x| ≤ 3`, support `|x| ≤ 4`.
    Psi0,
    Custom {
        inner: f64,
        outer: f64,
    },
}

impl WindowProfile {
    pub fn radii(&self) -> (f64, f64) {
        match *self {
            WindowProfile::Phi0 => (2.0, 3.0),
            WindowProfile::Psi0 => (3.0, 4.0),
            WindowProfile::Custom { inner, outer } => (inner, outer),
        }
    }

    pub fn name(&self) -> String {
        match *self {
            WindowProfile::Phi0 => "phi0".into(),
            WindowProfile::Psi0 => "psi0".into(),
            WindowProfile::Custom { inner, outer } => format!("custom({inner},{outer})"),
        }
    }

    pub fn value(&self, r: f64) -> f64 {
        let (a, b) = self.radii();
        radial_cutoff(r, a, b)
    }

    /// `sup |d/dr profile|`, sampled finely on the transition band.
    pub fn gradient_bound(&self) -> f64 {
        let (a, b) = self.radii();
        let samples = 20_000;
        let h = (b - a) / samples as f64;
        (0..samples)
            .map(|i| {
                let r = a + i as f64 * h;
                ((self.value(r + h) - self.value(r)) / h).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Integer-lattice translates `φ(· - k)` of a radial window, stored as one
/// sparse stencil shared by all centres.
#[derive(Clone, Debug)]
pub struct WindowFamily {
    grid: GridSpec,
    profile: WindowProfile,
    points_per_unit: usize,
    cells: usize,
    stencil: Vec<(isize, isize, f64)>,
    gradient_bound: f64,
}

impl WindowFamily {
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn profile(&self) -> WindowProfile {
        self.profile
    }

    /// Number of windows (one per lattice point of the torus).
    pub fn len(&self) -> usize {
        self.cells * self.cells
    }

    pub fn is_empty(&self) -> bool {
        self.cells == 0
    }

    /// Grid points per unit length.
    pub fn points_per_unit(&self) -> usize {
        self.points_per_unit
    }

    /// Lattice cells per side (`L`).
    pub fn cells_per_side(&self) -> usize {
        self.cells
    }

    pub fn gradient_bound(&self) -> f64 {
        self.gradient_bound
    }

    /// Lattice coordinates of window `k`.
    pub fn center(&self, k: usize) -> (usize, usize) {
        (k % self.cells, k / self.cells)
    }

    pub fn stencil(&self) -> &[(isize, isize, f64)] {
        &self.stencil
    }

    /// Calls `f(grid_index, φ_k value)` over the support of window `k`.
    pub fn for_each_point(&self, k: usize, mut f: impl FnMut(usize, f64)) {
        let n = self.grid.n() as isize;
        let (ci, cj) = self.center(k);
        let (bi, bj) = (
            (ci * self.points_per_unit) as isize,
            (cj * self.points_per_unit) as isize,
        );
        for &(di, dj, v) in &self.stencil {
            let i = (bi + di).rem_euclid(n);
            let j = (bj + dj).rem_euclid(n);
            f((j * n + i) as usize, v);
        }
    }

    /// `∫ g φ_k dx`.
    pub fn integrate(&self, k: usize, g: &[f64]) -> f64 {
        let dx = self.grid.dx();
        let mut acc = 0.0;
        self.for_each_point(k, |idx, v| acc += g[idx] * v);
        acc * dx * dx
    }

    /// `∫ g φ_k dx` for every window.
    pub fn integrate_all(&self, g: &[f64]) -> Vec<f64> {
        crate::par::map_range(self.len(), |k| self.integrate(k, g))
    }

    /// Dense samples of window `k`.
    pub fn window(&self, k: usize) -> Field {
        let mut out = Field::zeros(&self.grid);
        let vals = out.values_mut();
        self.for_each_point(k, |idx, v| vals[idx] = v);
        out
    }

    /// `g · φ_k` on the grid.
    pub fn multiply(&self, k: usize, g: &Field) -> Field {
        let mut out = Field::zeros(&self.grid);
        let vals = out.values_mut();
        self.for_each_point(k, |idx, v| vals[idx] = g.values()[idx] * v);
        out
    }
}

/// Builds the lattice window family. The torus side must be an integer
/// number of unit cells, each holding a whole number of grid points, and
/// large enough that a window does not overlap its own periodic image.
pub fn build_windows(grid: &GridSpec, profile: WindowProfile) -> Result<WindowFamily> {
    let (inner, outer) = profile.radii();
    if !(inner > 0.0 && outer > inner) {
        return Err(SqgError::InvalidParameter(format!(
            "window radii must satisfy 0 < inner < outer, got ({inner}, {outer})"
        )));
    }
    let l = grid.length();
    let cells = l.round();
    if (l - cells).abs() > 1e-9 || cells < 1.0 {
        return Err(SqgError::InvalidGrid(format!(
            "window lattice needs an integer side length, got L = {l}"
        )));
    }
    let cells = cells as usize;
    if grid.n() % cells != 0 {
        return Err(SqgError::InvalidGrid(format!(
            "n = {} is not a multiple of L = {cells}",
            grid.n()
        )));
    }
    if l < 2.0 * outer + 2.0 {
        return Err(SqgError::SupportOverflow(format!(
            "torus side {l} too small for window support radius {outer} (need L ≥ {})",
            2.0 * outer + 2.0
        )));
    }
    let ppu = grid.n() / cells;
    let dx = grid.dx();
    let reach = (outer / dx).ceil() as isize;
    let mut stencil = Vec::new();
    for dj in -reach..=reach {
        for di in -reach..=reach {
            let r = (di as f64 * dx).hypot(dj as f64 * dx);
            let v = profile.value(r);
            if v > 0.0 {
                stencil.push((di, dj, v));
            }
        }
    }
    Ok(WindowFamily {
        grid: grid.clone(),
        profile,
        points_per_unit: ppu,
        cells,
        stencil,
        gradient_bound: profile.gradient_bound(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smooth_step_limits() {
        assert_eq!(smooth_step(-0.1), 0.0);
        assert_eq!(smooth_step(1.2), 1.0);
        assert!((smooth_step(0.5) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn phi0_plateau_and_support() {
        let g = GridSpec::new(128, 32.0).unwrap();
        let w = build_windows(&g, WindowProfile::Phi0).unwrap();
        assert_eq!(w.len(), 32 * 32);
        let f = w.window(0);
        assert_eq!(f.at(0, 0), 1.0);
        // |x| = 3.5
        assert_eq!(f.at(14, 0), 0.0);
        assert!(f.values().iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn psi0_covers_phi0() {
        let g = GridSpec::new(64, 16.0).unwrap();
        let p = build_windows(&g, WindowProfile::Phi0).unwrap().window(5);
        let q = build_windows(&g, WindowProfile::Psi0).unwrap().window(5);
        let prod = p.zip_map(&q, |a, b| a * b).unwrap();
        assert_eq!(prod, p);
    }

    #[test]
    fn rejects_small_or_fractional_torus() {
        assert!(build_windows(&GridSpec::new(64, 6.0).unwrap(), WindowProfile::Phi0).is_err());
        assert!(build_windows(&GridSpec::new(64, 10.5).unwrap(), WindowProfile::Phi0).is_err());
        assert!(build_windows(&GridSpec::new(60, 8.0).unwrap(), WindowProfile::Phi0).is_err());
        assert!(build_windows(&GridSpec::new(64, 8.0).unwrap(), WindowProfile::Phi0).is_ok());
    }

    #[test]
    fn gradient_bound_is_recorded() {
        let b = WindowProfile::Phi0.gradient_bound();
        // steepest slope of the exp-glue step over a unit band
        assert!(b > 1.5 && b < 3.0, "{b}");
    }
}
