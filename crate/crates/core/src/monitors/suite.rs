use serde::{Deserialize, Serialize};
use serde_json::json;

use super::checks::{
    check_energy_inequality, check_gronwall_envelope, check_l2_balance, check_l2_hhalf_budget,
    check_lp_dissipation, check_max_principle, check_riesz_uloc, check_weak_form_residual,
    EnergySeries, Trajectory,
};
use super::ledger::LedgerRow;
use super::verdict::{Outcome, Verdict};
use crate::error::Result;
use crate::function_spaces::WindowFamily;

/// Toggles and tolerances for the per-run checks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonitorSettings {
    pub max_principle: bool,
    pub lp_dissipation: bool,
    pub cordoba: bool,
    pub energy: bool,
    pub budget: bool,
    pub riesz: bool,
    pub weak_form: bool,
    pub max_principle_tol: f64,
    pub lp_tol: f64,
    pub balance_tol: f64,
    pub cordoba_tol: f64,
    pub split_tol: f64,
    pub stability_factor: f64,
    pub gronwall_tol: f64,
    pub weak_form_factor: f64,
    /// Number of translated windows used as weak-form test functions.
    pub weak_form_tests: usize,
}

impl Default for MonitorSettings {
    fn default() -> Self {
        Self {
            max_principle: true,
            lp_dissipation: true,
            cordoba: true,
            energy: true,
            budget: true,
            riesz: true,
            weak_form: true,
            max_principle_tol: 1e-3,
            lp_tol: 1e-2,
            balance_tol: 5e-3,
            cordoba_tol: 1e-6,
            split_tol: 0.02,
            stability_factor: 2.0,
            gronwall_tol: 0.05,
            weak_form_factor: 3.0,
            weak_form_tests: 5,
        }
    }
}

/// Empirical constants fitted from one run.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct FittedConstants {
    pub c_emp: Option<f64>,
    pub c_hat: Option<f64>,
    pub budget_k: Option<f64>,
    pub riesz_k: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct RunChecks {
    pub verdicts: Vec<Verdict>,
    pub constants: FittedConstants,
}

impl RunChecks {
    pub fn any_failed(&self) -> bool {
        self.verdicts.iter().any(|v| v.outcome.is_fail())
    }
}

/// Pointwise convexity residual over every ledger row: `max cordoba_viol ≤ tol`.
pub fn check_cordoba_ledger(ledger: &[LedgerRow], tol: f64) -> Verdict {
    let mut worst = 0.0;
    let mut at = 0.0;
    for r in ledger {
        if !(r.cordoba_viol <= worst) {
            worst = r.cordoba_viol;
            at = r.t;
        }
    }
    Verdict::new(
        "cordoba_snapshots",
        json!({ "rows": ledger.len() }),
        worst,
        tol,
        Outcome::from_bool(worst <= tol),
        tol,
    )
    .with_witness(super::verdict::Witness {
        time: Some(at),
        ..Default::default()
    })
}

/// Every enabled per-run check, in a fixed order.
pub fn run_checks(
    traj: &Trajectory<'_>,
    ledger: &[LedgerRow],
    windows: Option<&WindowFamily>,
    settings: &MonitorSettings,
) -> Result<RunChecks> {
    let mut verdicts = Vec::new();
    let mut constants = FittedConstants::default();
    if settings.max_principle {
        let mut v = check_max_principle(ledger, settings.max_principle_tol);
        if v.outcome.is_fail() {
            let t = v.witness.as_ref().and_then(|w| w.time).unwrap_or(0.0);
            v.witness = Some(super::checks::snapshot_witness(traj, t));
        }
        verdicts.push(v);
    }
    if settings.lp_dissipation {
        verdicts.push(check_l2_balance(traj, settings.balance_tol)?);
        for p in [2.0, 4.0, 8.0] {
            verdicts.push(check_lp_dissipation(traj, p, settings.lp_tol)?);
        }
    }
    if settings.cordoba {
        verdicts.push(check_cordoba_ledger(ledger, settings.cordoba_tol));
    }
    let Some(windows) = windows else {
        if settings.energy || settings.budget || settings.riesz || settings.weak_form {
            verdicts.push(Verdict::inconclusive(
                "windowed_checks",
                json!({}),
                "no window family for this grid",
            ));
        }
        return Ok(RunChecks {
            verdicts,
            constants,
        });
    };
    if settings.energy || settings.budget {
        let series = EnergySeries::compute(traj, windows)?;
        if settings.energy {
            let e = check_energy_inequality(&series, settings.stability_factor, settings.split_tol);
            let (g, c_hat) = check_gronwall_envelope(&series, Some(e.c_emp), settings.gronwall_tol);
            constants.c_emp = Some(e.c_emp);
            constants.c_hat = c_hat.is_finite().then_some(c_hat);
            verdicts.push(e.stability);
            verdicts.push(e.decomposition);
            verdicts.push(g);
        }
        if settings.budget {
            let (v, k) = check_l2_hhalf_budget(traj, &series, windows, None);
            constants.budget_k = k.is_finite().then_some(k);
            verdicts.push(v);
        }
    }
    if settings.riesz {
        let (v, k) = check_riesz_uloc(traj, windows, None);
        constants.riesz_k = Some(k);
        verdicts.push(v);
    }
    if settings.weak_form && settings.weak_form_tests > 0 {
        let stride = (windows.len() / settings.weak_form_tests).max(1);
        for q in 0..settings.weak_form_tests.min(windows.len()) {
            let k = q * stride;
            let eta = windows.window(k);
            let (ci, cj) = windows.center(k);
            verdicts.push(check_weak_form_residual(
                traj,
                &eta,
                &format!("phi({ci},{cj})"),
                settings.weak_form_factor,
            )?);
        }
    }
    Ok(RunChecks {
        verdicts,
        constants,
    })
}
