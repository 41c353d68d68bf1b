//! Checks evaluated over a stored trajectory.

use serde_json::json;

use super::ledger::{w_from_theta, LedgerRow};
use super::pointwise::{cordoba_residual, lp_dissipation, lp_power, under_resolved, ConvexFn};
use super::verdict::{Outcome, Verdict, Witness};
use crate::error::Result;
use crate::function_spaces::{a_phi_from_parts, windowed_time_integral, WindowFamily};
use crate::par::{map_range, map_slice};
use crate::solver::{compute_rhs_nonlinear, SnapshotRecord};
use crate::spectral::{
    apply_lambda_mean_zero, dealias, dealias_keeps, gradient, inverse, riesz_velocity, Field,
    SpectralField,
};

/// Top-third spectral content (relative) above which a field counts as under-resolved.
pub const TAIL_TOLERANCE: f64 = 1e-3;

/// Snapshots of one run with the parameters needed to interpret them.
#[derive(Clone, Copy, Debug)]
pub struct Trajectory<'a> {
    pub snapshots: &'a [SnapshotRecord],
    pub alpha: f64,
    pub dissipation: f64,
    pub s: f64,
    /// Largest solver step, used to judge whether snapshots are dense enough.
    pub step_dt: f64,
}

impl Trajectory<'_> {
    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn cadence(&self) -> f64 {
        if self.snapshots.len() < 2 {
            0.0
        } else {
            self.snapshots[1].t - self.snapshots[0].t
        }
    }

    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|r| r.t).collect()
    }

    fn dense_enough(&self) -> bool {
        self.snapshots.len() >= 2 && self.cadence() <= 10.0 * self.step_dt * (1.0 + 1e-9)
    }

    fn params(&self) -> serde_json::Value {
        json!({
            "alpha": self.alpha,
            "kappa": self.dissipation,
            "s": self.s,
            "snapshots": self.snapshots.len(),
            "cadence": self.cadence(),
        })
    }
}

/// Location of `max|θ|` and the content hash of the snapshot nearest to `t`.
pub fn snapshot_witness(traj: &Trajectory<'_>, t: f64) -> Witness {
    let Some(rec) = traj
        .snapshots
        .iter()
        .min_by(|a, b| (a.t - t).abs().total_cmp(&(b.t - t).abs()))
    else {
        return Witness {
            time: Some(t),
            ..Witness::default()
        };
    };
    let idx = rec.theta.argmax_abs();
    let g = rec.theta.grid();
    let n = g.n();
    Witness {
        time: Some(rec.t),
        location: Some((g.coord(idx % n), g.coord(idx / n))),
        field_hash: Some(rec.theta.content_hash()),
    }
}

fn trapezoid(values: &[f64], dt: f64) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => 0.0,
        m => dt * (0.5 * (values[0] + values[m - 1]) + values[1..m - 1].iter().sum::<f64>()),
    }
}

fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len();
    if m % 2 == 1 {
        v[m / 2]
    } else {
        0.5 * (v[m / 2 - 1] + v[m / 2])
    }
}

/// `q`-th quantile by linear interpolation between order statistics.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
}

/// `max_t ‖θ(t)‖_∞ ≤ ‖θ₀‖_∞ (1 + tol)`.
pub fn check_max_principle(ledger: &[LedgerRow], tol: f64) -> Verdict {
    let params = json!({ "rows": ledger.len() });
    if ledger.len() < 2 {
        return Verdict::inconclusive("max_principle", params, "fewer than two ledger rows");
    }
    let l0 = ledger[0].linf;
    let mut worst = l0;
    let mut at = ledger[0].t;
    for r in &ledger[1..] {
        if !(r.linf <= worst) {
            worst = r.linf;
            at = r.t;
        }
    }
    let bound = l0 * (1.0 + tol);
    let v = Verdict::new(
        "max_principle",
        params,
        worst,
        bound,
        Outcome::from_bool(worst <= bound),
        tol,
    );
    v.with_witness(Witness {
        time: Some(at),
        ..Witness::default()
    })
}

/// `‖θ₀‖_∞ - ‖θ(t)‖_∞` per ledger row.
pub fn max_principle_margins(ledger: &[LedgerRow]) -> Vec<f64> {
    match ledger.first() {
        Some(r0) => ledger.iter().map(|r| r0.linf - r.linf).collect(),
        None => Vec::new(),
    }
}

/// `(‖θ(t)‖_p^p, 2κ ∫_0^t ‖Λ^{α/2}|θ|^{p/2}‖² ds)` at every snapshot.
pub fn lp_budget_series(traj: &Trajectory<'_>, p: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let powers: Vec<f64> = map_slice(traj.snapshots, |r| lp_power(&r.theta_hat, p))
        .into_iter()
        .collect::<Result<_>>()?;
    let rates: Vec<f64> = map_slice(traj.snapshots, |r| {
        lp_dissipation(&r.theta_hat, p, traj.alpha)
    })
    .into_iter()
    .collect::<Result<_>>()?;
    let dt = traj.cadence();
    let mut cum = Vec::with_capacity(rates.len());
    let mut acc = 0.0;
    for j in 0..rates.len() {
        if j > 0 {
            acc += 0.5 * dt * (rates[j - 1] + rates[j]);
        }
        cum.push(2.0 * traj.dissipation * acc);
    }
    Ok((powers, cum))
}

/// `‖θ(t)‖_p^p + 2κ∫_0^t‖Λ^{α/2}(|θ|^{p/2})‖² ≤ ‖θ₀‖_p^p (1 + tol)` at every
/// snapshot. Without dissipation the norm must also stay within `tol` of its
/// initial value from below.
pub fn check_lp_dissipation(traj: &Trajectory<'_>, p: f64, tol: f64) -> Result<Verdict> {
    let id = format!("lp_dissipation_p{p}");
    let mut params = traj.params();
    params["p"] = json!(p);
    if !traj.dense_enough() {
        return Ok(Verdict::inconclusive(
            &id,
            params,
            "snapshot cadence exceeds 10 solver steps",
        ));
    }
    let (powers, cum) = lp_budget_series(traj, p)?;
    let rhs = powers[0];
    let lhs: Vec<f64> = powers.iter().zip(&cum).map(|(a, b)| a + b).collect();
    let (mut worst, mut at) = (lhs[0], 0);
    for (j, v) in lhs.iter().enumerate() {
        if !(*v <= worst) {
            worst = *v;
            at = j;
        }
    }
    let bound = rhs * (1.0 + tol);
    let mut ok = worst <= bound;
    let mut note = String::new();
    if traj.dissipation == 0.0 {
        let low = lhs.iter().cloned().fold(f64::INFINITY, f64::min);
        ok &= low >= rhs * (1.0 - tol);
        note = format!("transport only, min/initial = {:.6}", low / rhs);
    }
    Ok(
        Verdict::new(&id, params, worst, bound, Outcome::from_bool(ok), tol)
            .with_witness(snapshot_witness(traj, traj.snapshots[at].t))
            .with_note(note),
    )
}

/// `L²` balance `|‖θ(t)‖² + 2κ∫‖Λ^{α/2}θ‖² − ‖θ₀‖²| ≤ tol ‖θ₀‖²`.
pub fn check_l2_balance(traj: &Trajectory<'_>, tol: f64) -> Result<Verdict> {
    let params = traj.params();
    if !traj.dense_enough() {
        return Ok(Verdict::inconclusive(
            "l2_balance",
            params,
            "snapshot cadence exceeds 10 solver steps",
        ));
    }
    let (powers, cum) = lp_budget_series(traj, 2.0)?;
    let rhs = powers[0];
    let mut worst = 0.0;
    let mut at = 0;
    for j in 0..powers.len() {
        let rel = if rhs > 0.0 {
            (powers[j] + cum[j] - rhs).abs() / rhs
        } else {
            (powers[j] + cum[j]).abs()
        };
        if rel > worst {
            worst = rel;
            at = j;
        }
    }
    Ok(Verdict::new(
        "l2_balance",
        params,
        worst,
        tol,
        Outcome::from_bool(worst <= tol),
        tol,
    )
    .with_witness(snapshot_witness(traj, traj.snapshots[at].t)))
}

/// Pointwise `g'(θ)Λ^αθ − Λ^α g(θ) ≥ −tol · max(1, ‖θ‖²_∞)`.
pub fn check_cordoba(
    theta_hat: &SpectralField,
    alpha: f64,
    g: ConvexFn,
    tol: f64,
) -> Result<Verdict> {
    let id = format!("cordoba_{}", g.name());
    let params = json!({ "alpha": alpha, "g": g.name(), "n": theta_hat.grid().n() });
    if under_resolved(theta_hat, TAIL_TOLERANCE) {
        return Ok(Verdict::inconclusive(
            &id,
            params,
            "field under-resolved at grid scale",
        ));
    }
    let r = cordoba_residual(theta_hat, alpha, g)?;
    let bound = tol * r.scale;
    let fine = r.residual.grid();
    let nf = fine.n();
    let witness = Witness {
        time: None,
        location: Some((fine.coord(r.argmin % nf), fine.coord(r.argmin / nf))),
        field_hash: Some(inverse(theta_hat).content_hash()),
    };
    Ok(Verdict::new(
        &id,
        params,
        -r.min,
        bound,
        Outcome::from_bool(r.min >= -bound),
        tol,
    )
    .with_witness(witness))
}

/// Per-snapshot windowed energies `A_φ(w)` and the four terms of the
/// time-derivative split
/// `∫φwΛ^{-s}N − κ∫φwΛ^αw + ∫φθN − κ∫φθΛ^αθ` (`N` the discrete transport
/// term, `θ` mean-free). On the grid their sum is exactly `dA_φ/dt`.
#[derive(Clone, Debug)]
pub struct EnergySeries {
    pub times: Vec<f64>,
    /// `aphi[j][k]` for snapshot `j`, window `k`.
    pub aphi: Vec<Vec<f64>>,
    /// `sup_φ A_φ` per snapshot, the squared `H^s_uloc` norm used by the checks.
    pub sup: Vec<f64>,
    pub terms: Vec<[Vec<f64>; 4]>,
}

impl EnergySeries {
    pub fn compute(traj: &Trajectory<'_>, windows: &WindowFamily) -> Result<Self> {
        let rows: Vec<(Vec<f64>, [Vec<f64>; 4])> = traj
            .snapshots
            .iter()
            .map(|rec| energy_row(&rec.theta_hat, traj, windows))
            .collect::<Result<_>>()?;
        let mut aphi = Vec::with_capacity(rows.len());
        let mut terms = Vec::with_capacity(rows.len());
        for (a, t) in rows {
            aphi.push(a);
            terms.push(t);
        }
        let sup = aphi
            .iter()
            .map(|a| a.iter().cloned().fold(0.0, f64::max))
            .collect();
        Ok(Self {
            times: traj.times(),
            aphi,
            sup,
            terms,
        })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    fn cadence(&self) -> f64 {
        if self.times.len() < 2 {
            0.0
        } else {
            self.times[1] - self.times[0]
        }
    }

    /// `max_φ (A_φ^{j+1} − A_φ^j)/Δt / sup_φ A_φ^j`; rows with zero energy are skipped.
    pub fn growth_rates(&self) -> Vec<f64> {
        let dt = self.cadence();
        (0..self.len().saturating_sub(1))
            .filter(|&j| self.sup[j] > 0.0)
            .map(|j| {
                let d = self.aphi[j + 1]
                    .iter()
                    .zip(&self.aphi[j])
                    .map(|(b, a)| (b - a) / dt)
                    .fold(f64::NEG_INFINITY, f64::max);
                d / self.sup[j]
            })
            .collect()
    }
}

fn energy_row(
    theta_hat: &SpectralField,
    traj: &Trajectory<'_>,
    windows: &WindowFamily,
) -> Result<(Vec<f64>, [Vec<f64>; 4])> {
    let s = traj.s;
    let kappa = traj.dissipation;
    let th = theta_hat.mean_zero();
    let w_hat = w_from_theta(theta_hat, s);
    let w = inverse(&w_hat);
    let theta = inverse(&th);
    let aphi = map_range(windows.len(), |k| a_phi_from_parts(&w, &theta, windows, k));

    let n_hat = compute_rhs_nonlinear(theta_hat)?;
    let ln = inverse(&apply_lambda_mean_zero(&n_hat, -s));
    let nf = inverse(&n_hat);
    let law = inverse(&apply_lambda_mean_zero(&w_hat, traj.alpha));
    let lat = inverse(&apply_lambda_mean_zero(&th, traj.alpha));
    let prod = |a: &Field, b: &Field, c: f64| -> Vec<f64> {
        a.values()
            .iter()
            .zip(b.values())
            .map(|(x, y)| c * x * y)
            .collect()
    };
    let dens = [
        prod(&w, &ln, 1.0),
        prod(&w, &law, -kappa),
        prod(&theta, &nf, 1.0),
        prod(&theta, &lat, -kappa),
    ];
    let terms = dens.map(|d| windows.integrate_all(&d));
    Ok((aphi, terms))
}

/// Outcome of the windowed energy inequality check.
#[derive(Clone, Debug)]
pub struct EnergyCheck {
    pub stability: Verdict,
    pub decomposition: Verdict,
    /// `max_j C_j`; 0 when every row has zero energy.
    pub c_emp: f64,
    pub rates: Vec<f64>,
}

/// Five-point centred derivative of `f` at `j`.
fn d5(f: impl Fn(usize) -> f64, j: usize, h: f64) -> f64 {
    (f(j - 2) - 8.0 * f(j - 1) + 8.0 * f(j + 1) - f(j + 2)) / (12.0 * h)
}

/// Growth constant `C_emp` of `∂_t A_φ(w) ≤ C ‖w‖²_{H^s_uloc}` and the
/// consistency of the four-term split with the finite-difference derivative.
///
/// The running estimate `C_emp(t) = max_{t_j ≤ t} C_j` must settle: its final
/// value may not exceed `factor` times its median over the run. A run whose
/// windowed energies never grow (`C_emp ≤ 0`) passes. The split is compared
/// against the five-point centred derivative of `A_φ`, in max norm over
/// windows. Where that reference is itself unresolved (the split error does
/// not exceed the gap between the five- and three-point stencils) the
/// verdict is inconclusive rather than failed.
pub fn check_energy_inequality(series: &EnergySeries, factor: f64, split_tol: f64) -> EnergyCheck {
    let rates = series.growth_rates();
    let params = json!({ "snapshots": series.len(), "factor": factor });
    let running: Vec<f64> = rates
        .iter()
        .scan(f64::NEG_INFINITY, |m, &r| {
            *m = m.max(r);
            Some(*m)
        })
        .collect();
    let c_emp = running.last().copied().unwrap_or(0.0);
    let med = median(&running);
    let stability = if rates.is_empty() {
        Verdict::new(
            "energy_inequality",
            params.clone(),
            0.0,
            0.0,
            Outcome::Pass,
            factor,
        )
        .with_note("zero energy, C_emp reported as 0")
    } else {
        let bound = if c_emp <= 0.0 { 0.0 } else { factor * med };
        let ok = c_emp.is_finite() && c_emp <= bound;
        Verdict::new(
            "energy_inequality",
            params.clone(),
            c_emp,
            bound,
            Outcome::from_bool(ok),
            factor,
        )
        .with_note(format!("median running C_emp {med:.4e}"))
    };

    let decomposition = if series.len() < 5 {
        Verdict::inconclusive("energy_split", params, "fewer than five snapshots")
    } else {
        let dt = series.cadence();
        let mut worst: f64 = 0.0;
        let mut at = 0.0;
        // rows failing only because the stencils disagree with each other
        let mut unresolved_only = true;
        for j in 2..series.len() - 2 {
            let windows = series.aphi[j].len();
            let mut err: f64 = 0.0;
            let mut spread: f64 = 0.0;
            let mut scale: f64 = 0.0;
            for k in 0..windows {
                let fd = d5(|i| series.aphi[i][k], j, dt);
                let fd3 = (series.aphi[j + 1][k] - series.aphi[j - 1][k]) / (2.0 * dt);
                let sum: f64 = series.terms[j].iter().map(|t| t[k]).sum();
                err = err.max((fd - sum).abs());
                spread = spread.max((fd - fd3).abs());
                scale = scale.max(fd.abs()).max(sum.abs());
            }
            let rel = if scale > 0.0 { err / scale } else { 0.0 };
            if rel > split_tol && err > spread {
                unresolved_only = false;
            }
            if rel > worst {
                worst = rel;
                at = series.times[j];
            }
        }
        let outcome = if worst <= split_tol {
            Outcome::Pass
        } else if unresolved_only {
            Outcome::Inconclusive
        } else {
            Outcome::Fail
        };
        let v = Verdict::new("energy_split", params, worst, split_tol, outcome, split_tol)
            .with_witness(Witness {
                time: Some(at),
                ..Witness::default()
            });
        if outcome == Outcome::Inconclusive {
            v.with_note("snapshot cadence too coarse to resolve dA/dt")
        } else {
            v
        }
    };
    EnergyCheck {
        stability,
        decomposition,
        c_emp,
        rates,
    }
}

/// Exponential envelope `‖w(t)‖² ≤ ‖w₀‖² e^{Ĉt}` with
/// `Ĉ = max_t log(‖w(t)‖²/‖w₀‖²)/t`, and `Ĉ ≤ C_emp + tol |C_emp|` when the
/// differential constant is supplied.
pub fn check_gronwall_envelope(
    series: &EnergySeries,
    c_emp: Option<f64>,
    tol: f64,
) -> (Verdict, f64) {
    let params = json!({ "snapshots": series.len(), "c_emp": c_emp });
    if series.len() < 10 {
        return (
            Verdict::inconclusive("gronwall_envelope", params, "fewer than ten snapshots"),
            f64::NAN,
        );
    }
    let s0 = series.sup[0];
    if !(s0 > 0.0) {
        return (
            Verdict::inconclusive("gronwall_envelope", params, "w0 = 0, skipped"),
            f64::NAN,
        );
    }
    let t0 = series.times[0];
    let mut c_hat = f64::NEG_INFINITY;
    let mut at = t0;
    for j in 1..series.len() {
        let r = (series.sup[j] / s0).ln() / (series.times[j] - t0);
        if r > c_hat {
            c_hat = r;
            at = series.times[j];
        }
    }
    let enveloped = (1..series.len())
        .all(|j| series.sup[j] <= s0 * (c_hat * (series.times[j] - t0)).exp() * (1.0 + 1e-12));
    let (bound, ok) = match c_emp {
        Some(c) => {
            let b = c + tol * c.abs();
            (b, enveloped && c_hat <= b)
        }
        None => (c_hat, enveloped && c_hat.is_finite()),
    };
    (
        Verdict::new(
            "gronwall_envelope",
            params,
            c_hat,
            bound,
            Outcome::from_bool(ok),
            tol,
        )
        .with_witness(Witness {
            time: Some(at),
            ..Witness::default()
        }),
        c_hat,
    )
}

/// `sup_φ ∫_0^T ∫ φ g(t)` for grid densities `g(t)` at the trajectory's cadence.
fn spacetime_sup(densities: &[Vec<f64>], dt: f64, windows: &WindowFamily) -> f64 {
    windowed_time_integral(densities, dt, windows)
        .into_iter()
        .fold(0.0, f64::max)
}

/// Budget ratio
/// `K = [sup_t ‖w‖² + sup_φ∫∫φ|Λ^{α/2}θ|²] / [‖w₀‖² + ∫_0^T ‖w‖²]`.
/// With `k_ref` the run must satisfy `LHS ≤ k_ref · RHS`; otherwise the
/// verdict only records `K`.
pub fn check_l2_hhalf_budget(
    traj: &Trajectory<'_>,
    series: &EnergySeries,
    windows: &WindowFamily,
    k_ref: Option<f64>,
) -> (Verdict, f64) {
    let params = json!({ "snapshots": traj.len(), "k_ref": k_ref });
    if !traj.dense_enough() {
        return (
            Verdict::inconclusive(
                "l2_hhalf_budget",
                params,
                "snapshot cadence exceeds 10 solver steps",
            ),
            f64::NAN,
        );
    }
    let dt = traj.cadence();
    let dens: Vec<Vec<f64>> = map_slice(traj.snapshots, |r| {
        let f = inverse(&apply_lambda_mean_zero(&r.theta_hat, 0.5 * traj.alpha));
        f.values().iter().map(|v| v * v).collect()
    });
    let diss = spacetime_sup(&dens, dt, windows);
    let sup_s = series.sup.iter().cloned().fold(0.0, f64::max);
    let lhs = sup_s + diss;
    let rhs = series.sup[0] + trapezoid(&series.sup, dt);
    let k = if rhs > 0.0 { lhs / rhs } else { 0.0 };
    let bound = k_ref.map_or(lhs, |kr| kr * rhs);
    let ok = k.is_finite() && lhs <= bound;
    (
        Verdict::new(
            "l2_hhalf_budget",
            params,
            lhs,
            bound,
            Outcome::from_bool(ok),
            0.0,
        )
        .with_note(format!("K = {k:.6}")),
        k,
    )
}

/// Ratio `‖u‖_{(L²_tL²)_uloc} / ‖w‖_{L²_t H^s_uloc}`, each squared norm the
/// sup over windows of the time-integrated windowed density.
pub fn riesz_uloc_ratio(traj: &Trajectory<'_>, windows: &WindowFamily) -> f64 {
    let dt = traj.cadence();
    let u_dens: Vec<Vec<f64>> = map_slice(traj.snapshots, |r| {
        let (u1, u2) = riesz_velocity(&r.theta_hat);
        u1.values()
            .iter()
            .zip(u2.values())
            .map(|(a, b)| a * a + b * b)
            .collect()
    });
    let w_dens: Vec<Vec<f64>> = map_slice(traj.snapshots, |r| {
        let w = inverse(&w_from_theta(&r.theta_hat, traj.s));
        let th = inverse(&r.theta_hat.mean_zero());
        w.values()
            .iter()
            .zip(th.values())
            .map(|(a, b)| a * a + b * b)
            .collect()
    });
    let (num, den) = if traj.len() == 1 {
        (
            windows
                .integrate_all(&u_dens[0])
                .into_iter()
                .fold(0.0, f64::max),
            windows
                .integrate_all(&w_dens[0])
                .into_iter()
                .fold(0.0, f64::max),
        )
    } else {
        (
            spacetime_sup(&u_dens, dt, windows),
            spacetime_sup(&w_dens, dt, windows),
        )
    };
    if den > 0.0 {
        (num / den).sqrt()
    } else {
        0.0
    }
}

/// Records the Riesz ratio; with `k_ref` it must not exceed it.
pub fn check_riesz_uloc(
    traj: &Trajectory<'_>,
    windows: &WindowFamily,
    k_ref: Option<f64>,
) -> (Verdict, f64) {
    let ratio = riesz_uloc_ratio(traj, windows);
    let bound = k_ref.unwrap_or(ratio);
    let params = json!({ "snapshots": traj.len(), "k_ref": k_ref });
    (
        Verdict::new(
            "riesz_uloc",
            params,
            ratio,
            bound,
            Outcome::from_bool(ratio.is_finite() && ratio <= bound),
            0.0,
        ),
        ratio,
    )
}

/// Across-run stability of a fitted constant: `max ≤ factor · median`.
pub fn check_stability(id: &str, values: &[f64], factor: f64) -> Verdict {
    let params = json!({ "values": values, "factor": factor });
    if values.is_empty() {
        return Verdict::inconclusive(id, params, "no values");
    }
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let bound = factor * median(values);
    Verdict::new(
        id,
        params,
        max,
        bound,
        Outcome::from_bool(max.is_finite() && max <= bound),
        factor,
    )
}

fn l2_grid(f: &Field) -> f64 {
    f.values().iter().map(|v| v * v).sum::<f64>().sqrt() * f.grid().dx()
}

/// Residual of the weak form tested against `η` at one snapshot.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeakFormSample {
    pub t: f64,
    pub residual: f64,
    /// `|D₅ − D₃| + ‖(1−P)(uθ)‖‖(1−P)∇η‖ + ‖uθ − u_Pθ_P‖‖∇η‖`, `P` the
    /// dealiasing projector.
    pub budget: f64,
    /// Largest term magnitude, for the round-off floor.
    pub scale: f64,
}

/// `d/dt∫θη − ∫θ u·∇η + κ∫Λ^{α/2}η Λ^{α/2}θ` at each interior snapshot,
/// with the time derivative from the five-point centred stencil.
pub fn weak_form_samples(traj: &Trajectory<'_>, eta: &Field) -> Result<Vec<WeakFormSample>> {
    let m = traj.len();
    if m < 5 {
        return Ok(Vec::new());
    }
    let grid = eta.grid();
    let n = grid.n();
    let dx2 = grid.dx() * grid.dx();
    let eta_hat = crate::spectral::transform(eta)?;
    let (g1, g2) = gradient(&eta_hat);
    let (e1, e2) = (inverse(&g1), inverse(&g2));
    let tail = |f: &SpectralField| {
        f.map_modes(|md, c| {
            if dealias_keeps(n, md.m1, md.m2) {
                rustfft::num_complex::Complex64::new(0.0, 0.0)
            } else {
                c
            }
        })
    };
    let tail_norm = l2_grid(&inverse(&tail(&g1))).hypot(l2_grid(&inverse(&tail(&g2))));
    let grad_norm = l2_grid(&e1).hypot(l2_grid(&e2));
    let le = inverse(&apply_lambda_mean_zero(&eta_hat, 0.5 * traj.alpha));

    let pairing: Vec<f64> = traj
        .snapshots
        .iter()
        .map(|r| {
            r.theta
                .values()
                .iter()
                .zip(eta.values())
                .map(|(a, b)| a * b)
                .sum::<f64>()
                * dx2
        })
        .collect();
    let abs_pairing: Vec<f64> = traj
        .snapshots
        .iter()
        .map(|r| {
            r.theta
                .values()
                .iter()
                .zip(eta.values())
                .map(|(a, b)| (a * b).abs())
                .sum::<f64>()
                * dx2
        })
        .collect();
    let dt = traj.cadence();
    let rows = map_range(m - 4, |q| {
        let j = q + 2;
        let rec = &traj.snapshots[j];
        let theta = &rec.theta;
        let (u1, u2) = riesz_velocity(&rec.theta_hat);
        let th_d = dealias(&rec.theta_hat);
        let (v1, v2) = riesz_velocity(&th_d);
        let theta_d = inverse(&th_d);
        let f1 = u1.zip_map(theta, |a, b| a * b)?;
        let f2 = u2.zip_map(theta, |a, b| a * b)?;
        let mut nl = 0.0;
        let mut dflux2 = 0.0;
        for i in 0..theta.values().len() {
            let (a, b) = (f1.values()[i], f2.values()[i]);
            nl += a * e1.values()[i] + b * e2.values()[i];
            let d1 = a - v1.values()[i] * theta_d.values()[i];
            let d2 = b - v2.values()[i] * theta_d.values()[i];
            dflux2 += d1 * d1 + d2 * d2;
        }
        nl *= dx2;
        let flux_tail = l2_grid(&inverse(&tail(&crate::spectral::transform(&f1)?)))
            .hypot(l2_grid(&inverse(&tail(&crate::spectral::transform(&f2)?))));
        let lt = inverse(&apply_lambda_mean_zero(&rec.theta_hat, 0.5 * traj.alpha));
        let diss = traj.dissipation
            * lt.values()
                .iter()
                .zip(le.values())
                .map(|(a, b)| a * b)
                .sum::<f64>()
            * dx2;
        let d5v = d5(|i| pairing[i], j, dt);
        let d3v = (pairing[j + 1] - pairing[j - 1]) / (2.0 * dt);
        let budget =
            (d5v - d3v).abs() + flux_tail * tail_norm + dflux2.sqrt() * grid.dx() * grad_norm;
        Ok(WeakFormSample {
            t: rec.t,
            residual: d5v - nl + diss,
            budget,
            // The difference quotient loses precision relative to ∫|θη|/Δt.
            scale: d5v.abs().max(nl.abs()).max(diss.abs()).max(
                abs_pairing[j - 2..=j + 2]
                    .iter()
                    .cloned()
                    .fold(0.0, f64::max)
                    / dt,
            ),
        })
    });
    rows.into_iter().collect()
}

/// Passes when every `|R| ≤ factor · budget + 1e-10 · scale`.
pub fn check_weak_form_residual(
    traj: &Trajectory<'_>,
    eta: &Field,
    label: &str,
    factor: f64,
) -> Result<Verdict> {
    let id = "weak_form_residual";
    let mut params = traj.params();
    params["eta"] = json!(label);
    let rows = weak_form_samples(traj, eta)?;
    if rows.is_empty() {
        return Ok(Verdict::inconclusive(
            id,
            params,
            "fewer than five snapshots",
        ));
    }
    let mut worst = 0.0;
    let mut at = rows[0];
    for r in &rows {
        let allowed = factor * r.budget + 1e-10 * r.scale;
        let ratio = if allowed > 0.0 {
            r.residual.abs() / allowed
        } else if r.residual == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        if !(ratio <= worst) {
            worst = ratio;
            at = *r;
        }
    }
    Ok(Verdict::new(
        id,
        params,
        worst,
        1.0,
        Outcome::from_bool(worst <= 1.0),
        factor,
    )
    .with_witness(snapshot_witness(traj, at.t))
    .with_note(format!(
        "|R| = {:.3e}, budget = {:.3e}",
        at.residual.abs(),
        at.budget
    )))
}
