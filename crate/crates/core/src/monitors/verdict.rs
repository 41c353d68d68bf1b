use std::fmt;
use std::io::Write;

use serde::Serialize;

use crate::error::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Pass,
    Fail,
    /// Preconditions not met; neither pass nor fail.
    Inconclusive,
    /// Convergence observed but slower than the target rate.
    Slow,
}

impl Outcome {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Outcome::Pass
        } else {
            Outcome::Fail
        }
    }

    pub fn is_fail(&self) -> bool {
        *self == Outcome::Fail
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Pass => "pass",
            Outcome::Fail => "fail",
            Outcome::Inconclusive => "inconclusive",
            Outcome::Slow => "slow",
        })
    }
}

/// Where a check was decided.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Witness {
    pub time: Option<f64>,
    pub location: Option<(f64, f64)>,
    pub field_hash: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Verdict {
    pub check_id: String,
    pub params: serde_json::Value,
    pub measured: f64,
    pub bound: f64,
    /// `bound - measured`; negative means the bound is exceeded.
    pub margin: f64,
    pub outcome: Outcome,
    pub tol: f64,
    pub witness: Option<Witness>,
    pub note: String,
}

impl Verdict {
    pub fn new(
        check_id: &str,
        params: serde_json::Value,
        measured: f64,
        bound: f64,
        outcome: Outcome,
        tol: f64,
    ) -> Self {
        Self {
            check_id: check_id.to_string(),
            params,
            measured,
            bound,
            margin: bound - measured,
            outcome,
            tol,
            witness: None,
            note: String::new(),
        }
    }

    pub fn inconclusive(check_id: &str, params: serde_json::Value, note: &str) -> Self {
        let mut v = Self::new(
            check_id,
            params,
            f64::NAN,
            f64::NAN,
            Outcome::Inconclusive,
            0.0,
        );
        v.margin = 0.0;
        v.note = note.to_string();
        v
    }

    pub fn with_witness(mut self, w: Witness) -> Self {
        self.witness = Some(w);
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }

    pub fn passed(&self) -> bool {
        self.outcome == Outcome::Pass
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<28} {:<12} measured={:.6e} bound={:.6e} margin={:.3e} tol={:.1e}",
            self.check_id,
            self.outcome.to_string(),
            self.measured,
            self.bound,
            self.margin,
            self.tol
        )?;
        if let Some(w) = &self.witness {
            if let Some(t) = w.time {
                write!(f, " t={t:.4}")?;
            }
            if let Some((x, y)) = w.location {
                write!(f, " x=({x:.3},{y:.3})")?;
            }
            if let Some(h) = &w.field_hash {
                write!(f, " hash={}", &h[..h.len().min(12)])?;
            }
        }
        if !self.note.is_empty() {
            write!(f, " [{}]", self.note)?;
        }
        Ok(())
    }
}

/// `verdicts.csv`: `check_id, params_json, measured, bound, margin, pass, tol`.
pub fn write_verdicts_csv<W: Write>(verdicts: &[Verdict], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "check_id",
        "params_json",
        "measured",
        "bound",
        "margin",
        "pass",
        "tol",
    ])?;
    for v in verdicts {
        w.write_record([
            v.check_id.clone(),
            v.params.to_string(),
            format!("{:e}", v.measured),
            format!("{:e}", v.bound),
            format!("{:e}", v.margin),
            v.outcome.to_string(),
            format!("{:e}", v.tol),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Plain-text report, one verdict per line plus a tally.
pub fn summary_text(verdicts: &[Verdict]) -> String {
    let mut out = String::new();
    for v in verdicts {
        out.push_str(&v.to_string());
        out.push('\n');
    }
    let fails = verdicts.iter().filter(|v| v.outcome.is_fail()).count();
    out.push_str(&format!("{} checks, {} failed\n", verdicts.len(), fails));
    out
}
