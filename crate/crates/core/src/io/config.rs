//! Sectioned run configuration in TOML.
//!
//! ```toml
//! [grid]
//! n = 128
//! L = 32
//!
//! [physics]
//! alpha = 1.0
//! s = 0.75
//!
//! [data]
//! generator = "gaussian_spectrum"
//! seed = 7
//! beta = 2.5
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Result, SqgError};
use crate::harness::SweepPlan;
use crate::initial_data::{DataRecipe, Generator, TruncationParams};
use crate::monitors::MonitorSettings;
use crate::solver::SolverConfig;
use crate::spectral::GridSpec;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub n: usize,
    #[serde(rename = "L")]
    pub length: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhysicsSection {
    pub alpha: f64,
    pub s: f64,
    pub kappa: f64,
}

impl Default for PhysicsSection {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            s: 0.75,
            kappa: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    /// `gaussian_spectrum`, `bump_lattice`, `localized`, `single_mode` or `file`.
    pub generator: String,
    pub seed: u64,
    pub amplitude: f64,
    pub target_linf: Option<f64>,
    pub beta: Option<f64>,
    pub kcut: Option<f64>,
    pub spacing: Option<f64>,
    pub radius: Option<f64>,
    pub m1: Option<i64>,
    pub m2: Option<i64>,
    pub path: Option<PathBuf>,
}

impl Default for DataSection {
    fn default() -> Self {
        Self {
            generator: "gaussian_spectrum".into(),
            seed: 0,
            amplitude: 1.0,
            target_linf: None,
            beta: Some(2.5),
            kcut: None,
            spacing: None,
            radius: None,
            m1: None,
            m2: None,
            path: None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TruncationSection {
    #[serde(rename = "R")]
    pub radius: Option<f64>,
    pub eps: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeSection {
    #[serde(rename = "T")]
    pub t_final: f64,
    pub cfl: f64,
    pub dt_max: f64,
    pub snapshot_cadence: f64,
    pub fixed_dt: Option<f64>,
}

impl Default for TimeSection {
    fn default() -> Self {
        Self {
            t_final: 1.0,
            cfl: 0.4,
            dt_max: 0.01,
            snapshot_cadence: 0.05,
            fixed_dt: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub directory: PathBuf,
    /// Subset of `csv`, `bin`, `png`.
    pub formats: Vec<String>,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("runs"),
            formats: vec!["csv".into(), "bin".into()],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(rename = "R_list")]
    pub radii: Vec<f64>,
    pub eps_list: Vec<f64>,
    pub r0: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridSection,
    #[serde(default)]
    pub physics: PhysicsSection,
    #[serde(default)]
    pub data: DataSection,
    #[serde(default)]
    pub truncation: TruncationSection,
    #[serde(default)]
    pub time: TimeSection,
    #[serde(default)]
    pub monitors: MonitorSettings,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
}

const FORMATS: [&str; 3] = ["csv", "bin", "png"];

/// 1-based `(line, column)` of byte offset `pos`.
fn line_col(text: &str, pos: usize) -> (usize, usize) {
    let pos = pos.min(text.len());
    let before = &text[..pos];
    let line = before.matches('\n').count() + 1;
    let col = before.rfind('\n').map_or(pos, |i| pos - i - 1) + 1;
    (line, col)
}

/// Position of `key = ...` inside `[section]`, else of the section header, else line 1.
fn locate(text: &str, section: &str, key: &str) -> (usize, usize) {
    let header = format!("[{section}]");
    let mut in_section = false;
    let mut header_line = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim_start();
        if line.starts_with('[') {
            in_section = line.trim_end() == header;
            if in_section {
                header_line = Some(i + 1);
            }
            continue;
        }
        if in_section {
            if let Some(rest) = line.strip_prefix(key) {
                if rest.trim_start().starts_with('=') {
                    return (i + 1, raw.len() - line.len() + 1);
                }
            }
        }
    }
    (header_line.unwrap_or(1), 1)
}

fn config_error(text: &str, section: &str, key: &str, message: impl Into<String>) -> SqgError {
    let (line, column) = locate(text, section, key);
    SqgError::Config {
        line,
        column,
        message: message.into(),
    }
}

/// Parses and validates a configuration; the first problem is reported with
/// its line and column.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map_or((1, 1), |s| line_col(text, s.start));
        SqgError::Config {
            line,
            column,
            message: e.message().to_string(),
        }
    })?;
    cfg.validate_with(text)?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text)
}

impl RunConfig {
    /// Canonical TOML; [`parse_config`] of the result gives back `self`.
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| SqgError::InvalidParameter(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let text = self.to_toml()?;
        self.validate_with(&text)
    }

    fn validate_with(&self, text: &str) -> Result<()> {
        let grid = GridSpec::new(self.grid.n, self.grid.length)
            .map_err(|e| config_error(text, "grid", "n", e.to_string()))?;
        let p = &self.physics;
        if !(p.s > 0.0 && p.s < 1.0) {
            return Err(config_error(
                text,
                "physics",
                "s",
                format!("s = {} outside the admissible range 0 < s < 1", p.s),
            ));
        }
        if !(p.alpha > 0.0 && p.alpha <= 2.0) {
            return Err(config_error(
                text,
                "physics",
                "alpha",
                format!(
                    "alpha = {} outside the admissible range 0 < alpha <= 2",
                    p.alpha
                ),
            ));
        }
        if !(p.kappa >= 0.0 && p.kappa.is_finite()) {
            return Err(config_error(
                text,
                "physics",
                "kappa",
                format!("kappa = {} must be finite and non-negative", p.kappa),
            ));
        }
        self.generator()
            .map_err(|(key, msg)| config_error(text, "data", key, msg))?;
        if let Some(r) = self.truncation.radius {
            TruncationParams {
                radius: Some(r),
                eps: None,
            }
            .validate(&grid)
            .map_err(|e| config_error(text, "truncation", "R", e.to_string()))?;
        }
        if let Some(e) = self.truncation.eps {
            TruncationParams {
                radius: None,
                eps: Some(e),
            }
            .validate(&grid)
            .map_err(|err| config_error(text, "truncation", "eps", err.to_string()))?;
        }
        let t = &self.time;
        if !(t.t_final >= 0.0 && t.snapshot_cadence > 0.0) {
            return Err(config_error(
                text,
                "time",
                "T",
                "T must be non-negative and snapshot_cadence positive",
            ));
        }
        let count = (t.t_final / t.snapshot_cadence).round();
        if (count * t.snapshot_cadence - t.t_final).abs() > 1e-9 * t.t_final.max(1.0) {
            return Err(config_error(
                text,
                "time",
                "snapshot_cadence",
                format!(
                    "T = {} is not a whole number of snapshot intervals {}",
                    t.t_final, t.snapshot_cadence
                ),
            ));
        }
        self.solver_config()
            .validate()
            .map_err(|e| config_error(text, "time", "cfl", e.to_string()))?;
        for f in &self.output.formats {
            if !FORMATS.contains(&f.as_str()) {
                return Err(config_error(
                    text,
                    "output",
                    "formats",
                    format!("unknown output format '{f}' (expected csv, bin or png)"),
                ));
            }
        }
        if let Some(sw) = &self.sweep {
            if let Some(plan) = self.sweep_plan() {
                plan.validate().map_err(|e| {
                    let key = match e {
                        SqgError::MollifierUnderResolved { .. } => "eps_list",
                        _ if sw.r0 >= sw.radii.iter().cloned().fold(f64::INFINITY, f64::min) => {
                            "r0"
                        }
                        _ => "R_list",
                    };
                    config_error(text, "sweep", key, e.to_string())
                })?;
            }
        }
        Ok(())
    }

    pub fn grid_spec(&self) -> Result<GridSpec> {
        GridSpec::new(self.grid.n, self.grid.length)
    }

    /// The generator named in `[data]`, or the offending key and a message.
    fn generator(&self) -> std::result::Result<Generator, (&'static str, String)> {
        let d = &self.data;
        let need = |v: Option<f64>, key: &'static str| {
            v.ok_or((key, format!("generator '{}' needs '{key}'", d.generator)))
        };
        match d.generator.as_str() {
            "gaussian_spectrum" => Ok(Generator::GaussianSpectrum {
                beta: need(d.beta, "beta")?,
                kcut: d.kcut,
            }),
            "bump_lattice" => Ok(Generator::BumpLattice {
                spacing: need(d.spacing, "spacing")?,
                radius: need(d.radius, "radius")?,
            }),
            "localized" => Ok(Generator::Localized),
            "single_mode" => Ok(Generator::SingleMode {
                m1: d
                    .m1
                    .ok_or(("m1", "generator 'single_mode' needs 'm1'".to_string()))?,
                m2: d
                    .m2
                    .ok_or(("m2", "generator 'single_mode' needs 'm2'".to_string()))?,
            }),
            "file" => Ok(Generator::File {
                path: d
                    .path
                    .clone()
                    .ok_or(("path", "generator 'file' needs 'path'".to_string()))?,
            }),
            other => Err(("generator", format!("unknown generator '{other}'"))),
        }
    }

    pub fn recipe(&self) -> Result<DataRecipe> {
        let generator = self
            .generator()
            .map_err(|(_, m)| SqgError::InvalidParameter(m))?;
        Ok(DataRecipe {
            generator,
            seed: self.data.seed,
            amplitude: self.data.amplitude,
            s: self.physics.s,
            target_linf: self.data.target_linf,
        })
    }

    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            alpha: self.physics.alpha,
            dissipation: self.physics.kappa,
            cfl: self.time.cfl,
            dt_max: self.time.dt_max,
            fixed_dt: self.time.fixed_dt,
        }
    }

    pub fn truncation(&self) -> TruncationParams {
        TruncationParams {
            radius: self.truncation.radius,
            eps: self.truncation.eps,
        }
    }

    pub fn wants(&self, format: &str) -> bool {
        self.output.formats.iter().any(|f| f == format)
    }

    /// Sweep plan from `[sweep]`, if present.
    pub fn sweep_plan(&self) -> Option<SweepPlan> {
        let sw = self.sweep.as_ref()?;
        Some(SweepPlan {
            recipe: self.recipe().ok()?,
            solver: self.solver_config(),
            n: self.grid.n,
            length: self.grid.length,
            radii: sw.radii.clone(),
            eps_list: sw.eps_list.clone(),
            t_final: self.time.t_final,
            cadence: self.time.snapshot_cadence,
            omega_radius: sw.r0,
        })
    }
}
