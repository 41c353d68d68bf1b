//! Integrating-factor RK4 for `∂_t θ + u·∇θ + κΛ^α θ = 0`, `u = ℛ^⊥θ`.

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SqgError};
use crate::function_spaces::WindowFamily;
use crate::initial_data::TruncationParams;
use crate::monitors::checks::Trajectory;
use crate::monitors::ledger::{ledger_row, LedgerRow};
use crate::spectral::{
    dealias, divergence, inverse, riesz_velocity, transform, Field, GridSpec, SpectralField,
};

/// Floor on `max|u|` in the CFL formula.
pub const SPEED_FLOOR: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    /// Dissipation order `α ∈ (0, 2]`.
    pub alpha: f64,
    /// Dissipation coefficient `κ`; 0 gives pure transport.
    pub dissipation: f64,
    pub cfl: f64,
    pub dt_max: f64,
    /// Constant step, bypassing the adaptive choice (still CFL-checked).
    pub fixed_dt: Option<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            dissipation: 1.0,
            cfl: 0.4,
            dt_max: 0.01,
            fixed_dt: None,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 2.0) {
            return Err(SqgError::InvalidParameter(format!(
                "alpha = {} must lie in (0, 2]",
                self.alpha
            )));
        }
        if !(self.dissipation >= 0.0 && self.dissipation.is_finite()) {
            return Err(SqgError::InvalidParameter(format!(
                "dissipation coefficient {} must be finite and ≥ 0",
                self.dissipation
            )));
        }
        if !(self.cfl > 0.0 && self.dt_max > 0.0) {
            return Err(SqgError::InvalidParameter(
                "cfl and dt_max must be positive".into(),
            ));
        }
        if let Some(dt) = self.fixed_dt {
            if !(dt > 0.0) {
                return Err(SqgError::InvalidParameter(format!(
                    "fixed dt = {dt} must be positive"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct SimState {
    pub t: f64,
    pub theta_hat: SpectralField,
    pub alpha: f64,
    pub s: f64,
    pub params: TruncationParams,
}

impl SimState {
    pub fn new(theta0: &Field, alpha: f64, s: f64, params: TruncationParams) -> Result<Self> {
        Ok(Self {
            t: 0.0,
            theta_hat: transform(theta0)?,
            alpha,
            s,
            params,
        })
    }

    pub fn grid(&self) -> &GridSpec {
        self.theta_hat.grid()
    }

    pub fn theta(&self) -> Field {
        inverse(&self.theta_hat)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StepStats {
    pub dt: f64,
    pub cfl_number: f64,
    pub max_u: f64,
    /// `Σ|c|²` removed by dealiasing the step's input.
    pub dealias_removed: f64,
}

/// `max |u|` over the grid for `u = ℛ^⊥θ`.
pub fn max_speed(theta_hat: &SpectralField) -> f64 {
    let (u1, u2) = riesz_velocity(theta_hat);
    u1.values()
        .iter()
        .zip(u2.values())
        .fold(0.0, |m, (a, b)| m.max(a.hypot(*b)))
}

/// `c · dx / max(speed, floor)`, capped at `dt_max`.
pub fn cfl_dt_from_speed(speed: f64, dx: f64, c: f64, dt_max: f64) -> f64 {
    (c * dx / speed.max(SPEED_FLOOR)).min(dt_max)
}

pub fn cfl_dt(state: &SimState, c: f64, dt_max: f64) -> f64 {
    cfl_dt_from_speed(max_speed(&state.theta_hat), state.grid().dx(), c, dt_max)
}

/// `-dealias(ik·(uθ)^)` for dealiased `θ`, the conservation form of `-u·∇θ`.
pub fn compute_rhs_nonlinear(theta_hat: &SpectralField) -> Result<SpectralField> {
    theta_hat.check_finite("theta_hat")?;
    let th = dealias(theta_hat);
    let theta = inverse(&th);
    let (u1, u2) = riesz_velocity(&th);
    let f1 = u1.zip_map(&theta, |a, b| a * b)?;
    let f2 = u2.zip_map(&theta, |a, b| a * b)?;
    let div = divergence(&transform(&f1)?, &transform(&f2)?)?;
    Ok(dealias(&div).scale(-1.0))
}

/// `-dealias((u·∇θ)^)`, the advective form; kept as an independent oracle.
pub fn advective_rhs(theta_hat: &SpectralField) -> Result<SpectralField> {
    let th = dealias(theta_hat);
    let (u1, u2) = riesz_velocity(&th);
    let (g1, g2) = crate::spectral::gradient(&th);
    let (g1, g2) = (inverse(&g1), inverse(&g2));
    let mut adv = Field::zeros(th.grid());
    for (i, v) in adv.values_mut().iter_mut().enumerate() {
        *v = u1.values()[i] * g1.values()[i] + u2.values()[i] * g2.values()[i];
    }
    Ok(dealias(&transform(&adv)?).scale(-1.0))
}

/// Precomputed dissipation symbol `κ|k|^α` in the spectral layout.
#[derive(Clone, Debug)]
pub struct Stepper {
    grid: GridSpec,
    symbol: Vec<f64>,
    config: SolverConfig,
}

impl Stepper {
    pub fn new(grid: &GridSpec, config: &SolverConfig) -> Result<Self> {
        config.validate()?;
        let n = grid.n();
        let mut symbol = vec![0.0; grid.spectral_len()];
        for c in 0..grid.half() {
            let k1 = grid.wavenumber(c);
            for j in 0..n {
                let k2 = grid.wavenumber(j);
                symbol[c * n + j] = config.dissipation * k1.hypot(k2).powf(config.alpha);
            }
        }
        Ok(Self {
            grid: grid.clone(),
            symbol,
            config: config.clone(),
        })
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    fn factors(&self, tau: f64) -> Vec<f64> {
        self.symbol.iter().map(|s| (-s * tau).exp()).collect()
    }

    /// Exact linear decay `e^{-κ|k|^α τ}` applied to `F`.
    pub fn decay(&self, f: &SpectralField, tau: f64) -> SpectralField {
        let e = self.factors(tau);
        SpectralField::from_raw(
            &self.grid,
            f.coeffs().iter().zip(&e).map(|(c, e)| c * e).collect(),
        )
    }

    /// One step of size `dt`; fails if `dt` exceeds the CFL limit.
    pub fn step(&self, state: &SimState, dt: f64) -> Result<(SimState, StepStats)> {
        if !(dt > 0.0) {
            return Err(SqgError::InvalidParameter(format!(
                "dt = {dt} must be positive"
            )));
        }
        state
            .theta_hat
            .check_finite("theta_hat")
            .map_err(|e| blow_up(state.t, e))?;
        let speed = max_speed(&state.theta_hat);
        let limit = self.config.cfl * self.grid.dx() / speed.max(SPEED_FLOOR);
        if dt > limit * (1.0 + 1e-12) {
            return Err(SqgError::CflViolation { dt, limit });
        }
        let removed = state.theta_hat.energy() - dealias(&state.theta_hat).energy();

        let eh = self.factors(0.5 * dt);
        let e1 = self.factors(dt);
        let y = state.theta_hat.coeffs();
        let n_of = |v: Vec<Complex64>| -> Result<Vec<Complex64>> {
            let f = SpectralField::from_raw(&self.grid, v);
            Ok(compute_rhs_nonlinear(&f)
                .map_err(|e| blow_up(state.t, e))?
                .coeffs()
                .to_vec())
        };
        let h = dt;
        let k1 = n_of(y.to_vec())?;
        let k2 = n_of(
            (0..y.len())
                .map(|i| eh[i] * (y[i] + 0.5 * h * k1[i]))
                .collect(),
        )?;
        let k3 = n_of(
            (0..y.len())
                .map(|i| eh[i] * y[i] + 0.5 * h * k2[i])
                .collect(),
        )?;
        let k4 = n_of(
            (0..y.len())
                .map(|i| e1[i] * y[i] + h * eh[i] * k3[i])
                .collect(),
        )?;
        let next: Vec<Complex64> = (0..y.len())
            .map(|i| {
                e1[i] * y[i] + h / 6.0 * (e1[i] * k1[i] + 2.0 * eh[i] * (k2[i] + k3[i]) + k4[i])
            })
            .collect();
        let theta_hat = SpectralField::from_raw(&self.grid, next);
        theta_hat
            .check_finite("theta_hat")
            .map_err(|e| blow_up(state.t + dt, e))?;
        Ok((
            SimState {
                t: state.t + dt,
                theta_hat,
                alpha: state.alpha,
                s: state.s,
                params: state.params,
            },
            StepStats {
                dt,
                cfl_number: dt * speed / self.grid.dx(),
                max_u: speed,
                dealias_removed: removed,
            },
        ))
    }

    /// Step size the adaptive loop would pick now.
    pub fn choose_dt(&self, state: &SimState) -> f64 {
        match self.config.fixed_dt {
            Some(dt) => dt,
            None => cfl_dt(state, self.config.cfl, self.config.dt_max),
        }
    }
}

fn blow_up(time: f64, e: SqgError) -> SqgError {
    SqgError::BlowUp {
        time,
        reason: e.to_string(),
    }
}

/// Single step with a default-configured stepper.
pub fn step(state: &SimState, dt: f64, config: &SolverConfig) -> Result<(SimState, StepStats)> {
    Stepper::new(state.grid(), config)?.step(state, dt)
}

#[derive(Clone, Debug)]
pub struct SnapshotRecord {
    pub t: f64,
    pub theta_hat: SpectralField,
    pub theta: Field,
}

#[derive(Clone, Debug)]
pub struct AbortInfo {
    pub time: f64,
    pub reason: String,
    pub last_good: SnapshotRecord,
}

/// Horizon, snapshot spacing and diagnostics for one run.
#[derive(Clone, Debug)]
pub struct RunSpec {
    pub t_final: f64,
    pub cadence: f64,
    pub s: f64,
    pub params: TruncationParams,
    pub windows: Option<WindowFamily>,
}

#[derive(Clone, Debug)]
pub struct Simulation {
    pub config: SolverConfig,
    pub s: f64,
    pub params: TruncationParams,
    pub snapshots: Vec<SnapshotRecord>,
    pub ledger: Vec<LedgerRow>,
    pub steps: usize,
    pub max_step_dt: f64,
    pub abort: Option<AbortInfo>,
    /// Run outside the critical case or the `1/2 < s < 1` range.
    pub exploratory: bool,
}

impl Simulation {
    pub fn grid(&self) -> &GridSpec {
        self.snapshots[0].theta.grid()
    }

    pub fn final_state(&self) -> &SnapshotRecord {
        self.snapshots
            .last()
            .expect("at least the initial snapshot")
    }

    pub fn trajectory(&self) -> Trajectory<'_> {
        Trajectory {
            snapshots: &self.snapshots,
            alpha: self.config.alpha,
            dissipation: self.config.dissipation,
            s: self.s,
            step_dt: self.max_step_dt,
        }
    }

    /// Uniform snapshot spacing (0 with a single snapshot).
    pub fn cadence(&self) -> f64 {
        if self.snapshots.len() < 2 {
            0.0
        } else {
            self.snapshots[1].t - self.snapshots[0].t
        }
    }
}

/// Advances `θ₀` to `t_final`, storing snapshots and ledger rows at uniform
/// times `k · cadence`. Steps are shortened to land on snapshot times. A
/// non-finite state ends the run early with the last good snapshot kept in
/// [`Simulation::abort`].
pub fn run_simulation(theta0: &Field, config: &SolverConfig, run: &RunSpec) -> Result<Simulation> {
    let stepper = Stepper::new(theta0.grid(), config)?;
    if !(run.t_final >= 0.0 && run.cadence > 0.0) {
        return Err(SqgError::InvalidParameter(
            "T must be ≥ 0 and the snapshot cadence positive".into(),
        ));
    }
    let count = (run.t_final / run.cadence).round() as usize;
    if ((count as f64) * run.cadence - run.t_final).abs() > 1e-9 * run.t_final.max(1.0) {
        return Err(SqgError::InvalidParameter(format!(
            "T = {} is not a whole number of snapshot intervals {}",
            run.t_final, run.cadence
        )));
    }
    let mut state = SimState::new(theta0, config.alpha, run.s, run.params)?;
    let exploratory = config.alpha != 1.0 || !(run.s > 0.5 && run.s < 1.0);
    let mut sim = Simulation {
        config: config.clone(),
        s: run.s,
        params: run.params,
        snapshots: Vec::with_capacity(count + 1),
        ledger: Vec::with_capacity(count + 1),
        steps: 0,
        max_step_dt: 0.0,
        abort: None,
        exploratory,
    };
    let record = |st: &SimState| SnapshotRecord {
        t: st.t,
        theta_hat: st.theta_hat.clone(),
        theta: st.theta(),
    };
    let dissipation_rate = |th: &SpectralField| {
        let l = th.grid().length();
        l * l
            * th.weighted_energy(|k1, k2| {
                let k = k1.hypot(k2);
                if k == 0.0 {
                    0.0
                } else {
                    k.powf(config.alpha)
                }
            })
    };

    let mut h_cum = 0.0;
    let mut rate = dissipation_rate(&state.theta_hat);
    let mut last_dt = 0.0;
    sim.snapshots.push(record(&state));
    sim.ledger.push(ledger_row(
        &sim.snapshots[0],
        0.0,
        0.0,
        run.s,
        config.alpha,
        run.windows.as_ref(),
    )?);
    for k in 1..=count {
        let target = k as f64 * run.cadence;
        while state.t < target - 1e-12 * target.max(1.0) {
            let dt = stepper.choose_dt(&state).min(target - state.t);
            match stepper.step(&state, dt) {
                Ok((next, stats)) => {
                    let next_rate = dissipation_rate(&next.theta_hat);
                    h_cum += 0.5 * stats.dt * (rate + next_rate);
                    rate = next_rate;
                    last_dt = stats.dt;
                    sim.steps += 1;
                    sim.max_step_dt = sim.max_step_dt.max(stats.dt);
                    state = next;
                }
                Err(SqgError::BlowUp { time, reason }) => {
                    sim.abort = Some(AbortInfo {
                        time,
                        reason,
                        last_good: record(&state),
                    });
                    return Ok(sim);
                }
                Err(e) => return Err(e),
            }
        }
        state.t = target;
        let rec = record(&state);
        sim.ledger.push(ledger_row(
            &rec,
            last_dt,
            h_cum,
            run.s,
            config.alpha,
            run.windows.as_ref(),
        )?);
        sim.snapshots.push(rec);
    }
    Ok(sim)
}
