use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use rustfft::{Fft, FftPlanner};

use crate::error::{Result, SqgError};

pub(crate) struct FftPlans {
    pub r2c: Arc<dyn RealToComplex<f64>>,
    pub c2r: Arc<dyn ComplexToReal<f64>>,
    pub forward: Arc<dyn Fft<f64>>,
    pub backward: Arc<dyn Fft<f64>>,
}

/// Uniform periodic discretization of the torus `[0, L)²` with `n` points per axis.
///
/// Index `i` along an axis sits at `x = i·dx` and carries the mode number
/// `m ∈ [-n/2, n/2)`; the physical wavenumber is `k = 2πm/L`.
#[derive(Clone)]
pub struct GridSpec {
    n: usize,
    length: f64,
    dx: f64,
    wavenumbers: Arc<[f64]>,
    pub(crate) plans: Arc<FftPlans>,
}

impl GridSpec {
    pub const MIN_POINTS: usize = 16;

    pub fn new(n: usize, length: f64) -> Result<Self> {
        if n < Self::MIN_POINTS {
            return Err(SqgError::InvalidGrid(format!(
                "n = {n} is below the minimum of {}",
                Self::MIN_POINTS
            )));
        }
        if n % 2 != 0 {
            return Err(SqgError::InvalidGrid(format!("n = {n} must be even")));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(SqgError::InvalidGrid(format!(
                "side length L = {length} must be positive"
            )));
        }
        let wavenumbers: Arc<[f64]> = (0..n)
            .map(|i| 2.0 * PI * mode_number(n, i) as f64 / length)
            .collect();
        let mut real_planner = RealFftPlanner::<f64>::new();
        let mut planner = FftPlanner::<f64>::new();
        let plans = FftPlans {
            r2c: real_planner.plan_fft_forward(n),
            c2r: real_planner.plan_fft_inverse(n),
            forward: planner.plan_fft_forward(n),
            backward: planner.plan_fft_inverse(n),
        };
        Ok(Self {
            n,
            length,
            dx: length / n as f64,
            wavenumbers,
            plans: Arc::new(plans),
        })
    }

    /// Like [`GridSpec::new`], but shares FFT plans with earlier grids of the same shape.
    pub fn cached(n: usize, length: f64) -> Result<Self> {
        static CACHE: OnceLock<Mutex<HashMap<(usize, u64), GridSpec>>> = OnceLock::new();
        let key = (n, length.to_bits());
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(g) = cache.lock().expect("grid cache poisoned").get(&key) {
            return Ok(g.clone());
        }
        let g = Self::new(n, length)?;
        cache
            .lock()
            .expect("grid cache poisoned")
            .insert(key, g.clone());
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    /// Number of stored spectral columns (`n/2 + 1`, real-to-complex layout).
    pub fn half(&self) -> usize {
        self.n / 2 + 1
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn spectral_len(&self) -> usize {
        self.half() * self.n
    }

    /// Signed mode number of axis index `i`.
    pub fn mode(&self, i: usize) -> i64 {
        mode_number(self.n, i)
    }

    /// Physical wavenumber of axis index `i`.
    pub fn wavenumber(&self, i: usize) -> f64 {
        self.wavenumbers[i]
    }

    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    /// Axis index of signed mode `m`.
    pub fn index_of_mode(&self, m: i64) -> usize {
        m.rem_euclid(self.n as i64) as usize
    }

    pub fn coord(&self, i: usize) -> f64 {
        i as f64 * self.dx
    }

    /// Minimal-image coordinate of axis index `i` relative to the origin, in `[-L/2, L/2)`.
    pub fn centered(&self, i: usize) -> f64 {
        let x = self.coord(i);
        if i >= self.n / 2 {
            x - self.length
        } else {
            x
        }
    }

    /// Periodic distance from the origin of grid point `(i, j)` (`i` along x₁).
    pub fn radius(&self, i: usize, j: usize) -> f64 {
        self.centered(i).hypot(self.centered(j))
    }

    /// `true` at the Nyquist index, where odd multipliers are not representable.
    pub fn is_nyquist(&self, i: usize) -> bool {
        i == self.n / 2
    }

    pub fn same_as(&self, other: &GridSpec) -> bool {
        self.n == other.n && self.length == other.length
    }

    pub fn ensure_same(&self, other: &GridSpec) -> Result<()> {
        if self.same_as(other) {
            Ok(())
        } else {
            Err(SqgError::GridMismatch(format!("{self:?} vs {other:?}")))
        }
    }
}

impl PartialEq for GridSpec {
    fn eq(&self, other: &Self) -> bool {
        self.same_as(other)
    }
}

impl fmt::Debug for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GridSpec")
            .field("n", &self.n)
            .field("length", &self.length)
            .finish()
    }
}

fn mode_number(n: usize, i: usize) -> i64 {
    if i < n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}
