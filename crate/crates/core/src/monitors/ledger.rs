use std::io::Write;

use serde::{Deserialize, Serialize};

use super::pointwise::{cordoba_residual, lp_norm, refined_linf, ConvexFn};
use crate::error::Result;
use crate::function_spaces::{a_phi_from_parts, WindowFamily};
use crate::solver::SnapshotRecord;
use crate::spectral::{
    apply_lambda_mean_zero, gradient, inverse, riesz_velocity, transform, SpectralField,
};

/// One row of the per-run time series.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LedgerRow {
    pub t: f64,
    pub dt: f64,
    pub linf: f64,
    pub l2: f64,
    pub lp4: f64,
    pub lp8: f64,
    /// `∫_0^t ‖Λ^{α/2}θ‖²_{L²} ds` accumulated per step.
    pub h_half_cum: f64,
    /// `sup_φ A_φ(w)`, NaN when no windows were configured.
    #[serde(rename = "Aphi_sup")]
    pub aphi_sup: f64,
    /// `max(0, -min residual) / scale` over the square and quartic tests.
    pub cordoba_viol: f64,
    pub divu_max: f64,
}

/// `w = Λ^{-s}` of the mean-zero part of `θ`.
pub fn w_from_theta(theta_hat: &SpectralField, s: f64) -> SpectralField {
    apply_lambda_mean_zero(&theta_hat.mean_zero(), -s)
}

pub(crate) fn ledger_row(
    rec: &SnapshotRecord,
    dt: f64,
    h_half_cum: f64,
    s: f64,
    alpha: f64,
    windows: Option<&WindowFamily>,
) -> Result<LedgerRow> {
    let th = &rec.theta_hat;
    let aphi_sup = match windows {
        Some(w) => {
            let wf = inverse(&w_from_theta(th, s));
            let lw = inverse(&th.mean_zero());
            crate::par::map_range(w.len(), |k| a_phi_from_parts(&wf, &lw, w, k))
                .into_iter()
                .fold(f64::NEG_INFINITY, f64::max)
        }
        None => f64::NAN,
    };
    let mut cordoba_viol: f64 = 0.0;
    for g in [ConvexFn::Square, ConvexFn::Quartic] {
        let r = cordoba_residual(th, alpha, g)?;
        cordoba_viol = cordoba_viol.max((-r.min).max(0.0) / r.scale);
    }
    let (u1, u2) = riesz_velocity(th);
    let (d11, _) = gradient(&transform(&u1)?);
    let (_, d22) = gradient(&transform(&u2)?);
    let div = inverse(&d11.zip_with(&d22, |a, b| a + b)?);
    Ok(LedgerRow {
        t: rec.t,
        dt,
        linf: refined_linf(th)?,
        l2: th.l2_squared().sqrt(),
        lp4: lp_norm(th, 4.0)?,
        lp8: lp_norm(th, 8.0)?,
        h_half_cum,
        aphi_sup,
        cordoba_viol,
        divu_max: div.linf(),
    })
}

pub fn write_ledger_csv<W: Write>(rows: &[LedgerRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_ledger_csv<R: std::io::Read>(input: R) -> Result<Vec<LedgerRow>> {
    let mut r = csv::Reader::from_reader(input);
    let mut rows = Vec::new();
    for rec in r.deserialize() {
        rows.push(rec?);
    }
    Ok(rows)
}
