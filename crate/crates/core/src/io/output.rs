//! Run directories and the root `manifest.json`.
//!
//! ```text
//! <root>/manifest.json
//! <root>/<run>/config.toml
//! <root>/<run>/run.json
//! <root>/<run>/ledger.csv
//! <root>/<run>/verdicts.csv
//! <root>/<run>/summary.txt
//! <root>/<run>/snapshots/snap_00000.bin
//! <root>/<run>/png/snap_00000.png
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{parse_config, RunConfig};
use super::render::{symmetric_range, write_png};
use super::snapshot::{read_snapshot, write_snapshot, Snapshot};
use crate::error::{Result, SqgError};
use crate::function_spaces::{build_windows, WindowFamily, WindowProfile};
use crate::initial_data::{build_truncated_data, generate_w0};
use crate::monitors::ledger::ledger_row;
use crate::monitors::{
    check_max_principle, read_ledger_csv, run_checks, summary_text, write_ledger_csv,
    write_verdicts_csv, FittedConstants, LedgerRow, Outcome, RunChecks, Trajectory, Verdict,
};
use crate::solver::{run_simulation, RunSpec, Simulation, SnapshotRecord};
use crate::spectral::transform;

/// Solver facts needed to re-check a stored run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub steps: usize,
    pub max_step_dt: f64,
    pub exploratory: bool,
    pub aborted: Option<String>,
    pub final_hash: String,
    pub constants: Option<FittedConstantsRecord>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FittedConstantsRecord {
    pub c_emp: Option<f64>,
    pub c_hat: Option<f64>,
    pub budget_k: Option<f64>,
    pub riesz_k: Option<f64>,
}

impl From<&FittedConstants> for FittedConstantsRecord {
    fn from(c: &FittedConstants) -> Self {
        Self {
            c_emp: c.c_emp,
            c_hat: c.c_hat,
            budget_k: c.budget_k,
            riesz_k: c.riesz_k,
        }
    }
}

/// `φ₀` windows when the grid admits them and a windowed check is enabled.
pub fn config_windows(cfg: &RunConfig) -> Result<Option<WindowFamily>> {
    let m = &cfg.monitors;
    if !(m.energy || m.budget || m.riesz || m.weak_form) {
        return Ok(None);
    }
    Ok(build_windows(&cfg.grid_spec()?, WindowProfile::Phi0).ok())
}

/// Builds `θ_{0,R,ε}` from the config and integrates it.
pub fn simulate_config(cfg: &RunConfig) -> Result<(Simulation, Option<WindowFamily>)> {
    cfg.validate()?;
    let grid = cfg.grid_spec()?;
    let w0 = generate_w0(&cfg.recipe()?, &grid)?;
    let data = build_truncated_data(&w0, cfg.physics.s, &cfg.truncation())?;
    let windows = config_windows(cfg)?;
    let spec = RunSpec {
        t_final: cfg.time.t_final,
        cadence: cfg.time.snapshot_cadence,
        s: cfg.physics.s,
        params: cfg.truncation(),
        windows: windows.clone(),
    };
    let sim = run_simulation(&data.theta0, &cfg.solver_config(), &spec)?;
    Ok((sim, windows))
}

pub fn snapshot_path(dir: &Path, index: usize) -> PathBuf {
    dir.join("snapshots").join(format!("snap_{index:05}.bin"))
}

fn sorted_files(dir: &Path, ext: &str) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == ext))
        .collect();
    files.sort();
    Ok(files)
}

/// Writes config, ledger, metadata and (per `output.formats`) snapshots and images.
pub fn write_run(
    dir: &Path,
    cfg: &RunConfig,
    sim: &Simulation,
    constants: Option<&FittedConstants>,
) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("config.toml"), cfg.to_toml()?)?;
    write_ledger_csv(&sim.ledger, fs::File::create(dir.join("ledger.csv"))?)?;
    let meta = RunMeta {
        steps: sim.steps,
        max_step_dt: sim.max_step_dt,
        exploratory: sim.exploratory,
        aborted: sim
            .abort
            .as_ref()
            .map(|a| format!("t = {}: {}", a.time, a.reason)),
        final_hash: sim.final_state().theta.content_hash(),
        constants: constants.map(FittedConstantsRecord::from),
    };
    write_meta(dir, &meta)?;
    if cfg.wants("bin") {
        fs::create_dir_all(dir.join("snapshots"))?;
        for (i, rec) in sim.snapshots.iter().enumerate() {
            write_snapshot(
                &snapshot_path(dir, i),
                &Snapshot {
                    t: rec.t,
                    alpha: sim.config.alpha,
                    s: sim.s,
                    name: "theta".into(),
                    field: rec.theta.clone(),
                },
            )?;
        }
    }
    if cfg.wants("png") {
        render_snapshots(sim.snapshots.iter().map(|r| &r.theta), &dir.join("png"))?;
    }
    Ok(())
}

/// One PNG per field, sharing the colour range of the first.
pub fn render_snapshots<'a>(
    fields: impl Iterator<Item = &'a crate::spectral::Field>,
    out_dir: &Path,
) -> Result<usize> {
    fs::create_dir_all(out_dir)?;
    let mut range = None;
    let mut count = 0;
    for (i, f) in fields.enumerate() {
        let r = *range.get_or_insert_with(|| symmetric_range(f));
        write_png(f, &out_dir.join(format!("snap_{i:05}.png")), Some(r))?;
        count += 1;
    }
    Ok(count)
}

pub fn write_meta(dir: &Path, meta: &RunMeta) -> Result<()> {
    fs::write(dir.join("run.json"), serde_json::to_string_pretty(meta)?)?;
    Ok(())
}

pub fn write_verdicts(dir: &Path, verdicts: &[Verdict]) -> Result<()> {
    write_verdicts_csv(verdicts, fs::File::create(dir.join("verdicts.csv"))?)?;
    fs::write(dir.join("summary.txt"), summary_text(verdicts))?;
    Ok(())
}

/// A run directory read back from disk.
#[derive(Clone, Debug)]
pub struct StoredRun {
    pub config: RunConfig,
    pub meta: RunMeta,
    pub ledger: Vec<LedgerRow>,
    pub snapshots: Vec<SnapshotRecord>,
}

impl StoredRun {
    pub fn trajectory(&self) -> Trajectory<'_> {
        Trajectory {
            snapshots: &self.snapshots,
            alpha: self.config.physics.alpha,
            dissipation: self.config.physics.kappa,
            s: self.config.physics.s,
            step_dt: self.meta.max_step_dt,
        }
    }

    /// Ledger rows recomputed from the stored snapshots; `dt` and the
    /// cumulative dissipation are taken from the stored ledger.
    pub fn recompute_ledger(&self, windows: Option<&WindowFamily>) -> Result<Vec<LedgerRow>> {
        if self.snapshots.len() != self.ledger.len() {
            return Err(SqgError::Snapshot(format!(
                "{} snapshots but {} ledger rows",
                self.snapshots.len(),
                self.ledger.len()
            )));
        }
        let rows = crate::par::map_range(self.snapshots.len(), |i| {
            ledger_row(
                &self.snapshots[i],
                self.ledger[i].dt,
                self.ledger[i].h_half_cum,
                self.config.physics.s,
                self.config.physics.alpha,
                windows,
            )
        });
        rows.into_iter().collect()
    }

    /// Re-runs the configured checks on recomputed ledger rows, plus a
    /// consistency check of the stored ledger against the snapshots.
    pub fn verify(&self) -> Result<RunChecks> {
        if self.snapshots.is_empty() {
            return Err(SqgError::Snapshot(
                "run directory has no binary snapshots to verify".into(),
            ));
        }
        let windows = config_windows(&self.config)?;
        let ledger = self.recompute_ledger(windows.as_ref())?;
        let mut checks = run_checks(
            &self.trajectory(),
            &ledger,
            windows.as_ref(),
            &self.config.monitors,
        )?;
        let mut worst: f64 = 0.0;
        for (a, b) in self.ledger.iter().zip(&ledger) {
            for (x, y) in [
                (a.t, b.t),
                (a.linf, b.linf),
                (a.l2, b.l2),
                (a.lp4, b.lp4),
                (a.lp8, b.lp8),
            ] {
                let d = (x - y).abs() / y.abs().max(1e-300);
                worst = worst.max(if d.is_nan() { f64::INFINITY } else { d });
            }
        }
        let tol = 1e-9;
        checks.verdicts.push(Verdict::new(
            "ledger_consistency",
            serde_json::json!({ "rows": ledger.len() }),
            worst,
            tol,
            Outcome::from_bool(worst <= tol),
            tol,
        ));
        if self.config.monitors.max_principle {
            let mut v = check_max_principle(&self.ledger, self.config.monitors.max_principle_tol);
            v.check_id = "max_principle_stored_ledger".into();
            checks.verdicts.push(v);
        }
        Ok(checks)
    }
}

pub fn read_meta(dir: &Path) -> Result<RunMeta> {
    Ok(serde_json::from_str(&fs::read_to_string(
        dir.join("run.json"),
    )?)?)
}

pub fn load_run(dir: &Path) -> Result<StoredRun> {
    let config = parse_config(&fs::read_to_string(dir.join("config.toml"))?)?;
    let meta = read_meta(dir)?;
    let ledger = read_ledger_csv(fs::File::open(dir.join("ledger.csv"))?)?;
    let snap_dir = dir.join("snapshots");
    let mut snapshots = Vec::new();
    if snap_dir.is_dir() {
        for path in sorted_files(&snap_dir, "bin")? {
            let snap = read_snapshot(&path)?;
            snapshots.push(SnapshotRecord {
                t: snap.t,
                theta_hat: transform(&snap.field)?,
                theta: snap.field,
            });
        }
    }
    Ok(StoredRun {
        config,
        meta,
        ledger,
        snapshots,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub kind: String,
    pub path: PathBuf,
    pub final_hash: String,
    pub passed: Option<bool>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub runs: Vec<ManifestEntry>,
}

pub fn read_manifest(root: &Path) -> Result<Manifest> {
    let path = root.join("manifest.json");
    if !path.exists() {
        return Ok(Manifest::default());
    }
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

/// Adds or replaces the entry with the same id.
pub fn update_manifest(root: &Path, entry: ManifestEntry) -> Result<()> {
    fs::create_dir_all(root)?;
    let mut m = read_manifest(root)?;
    m.runs.retain(|e| e.id != entry.id);
    m.runs.push(entry);
    m.runs.sort_by(|a, b| a.id.cmp(&b.id));
    fs::write(
        root.join("manifest.json"),
        serde_json::to_string_pretty(&m)?,
    )?;
    Ok(())
}

/// Writes every member of a sweep under `dir` plus `sweep_manifest.json`
/// and (when no member aborted) `cauchy_table.csv`.
pub fn write_sweep(
    dir: &Path,
    cfg: &RunConfig,
    result: &crate::harness::SweepResult,
) -> Result<()> {
    fs::create_dir_all(dir)?;
    for m in &result.members {
        let mut member_cfg = cfg.clone();
        member_cfg.sweep = None;
        member_cfg.truncation.radius = Some(m.radius);
        member_cfg.truncation.eps = Some(m.eps);
        write_run(&dir.join(m.id()), &member_cfg, &m.sim, None)?;
    }
    fs::write(
        dir.join("sweep_manifest.json"),
        serde_json::to_string_pretty(&result.manifest())?,
    )?;
    if let Some(table) = &result.table {
        table.write_csv(fs::File::create(dir.join("cauchy_table.csv"))?)?;
    }
    Ok(())
}
