//! `(R, ε)` sweeps, Cauchy tables and resolution studies.

use std::io::Write;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Result, SqgError};
use crate::function_spaces::WindowFamily;
use crate::initial_data::{build_truncated_data, generate_w0, DataRecipe, TruncationParams};
use crate::monitors::{Outcome, Verdict};
use crate::solver::{run_simulation, RunSpec, Simulation, SolverConfig};
use crate::spectral::{transform, Field, GridSpec};

/// Cauchy ratio at or below which a sweep counts as converging geometrically.
pub const CAUCHY_RATIO_TARGET: f64 = 0.7;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPlan {
    pub recipe: DataRecipe,
    pub solver: SolverConfig,
    pub n: usize,
    #[serde(rename = "L")]
    pub length: f64,
    /// Truncation radii; consecutive differences follow this order.
    pub radii: Vec<f64>,
    pub eps_list: Vec<f64>,
    pub t_final: f64,
    pub cadence: f64,
    /// Radius `r₀` of the comparison ball `Ω = {|x| ≤ r₀}`.
    pub omega_radius: f64,
}

impl SweepPlan {
    pub fn grid(&self) -> Result<GridSpec> {
        GridSpec::new(self.n, self.length)
    }

    /// `(R, ε)` pairs in run order: `ε` varies fastest.
    pub fn members(&self) -> Vec<(f64, f64)> {
        self.radii
            .iter()
            .flat_map(|&r| self.eps_list.iter().map(move |&e| (r, e)))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.radii.is_empty() || self.eps_list.is_empty() {
            return Err(SqgError::InvalidParameter(
                "R and eps lists must be nonempty".into(),
            ));
        }
        let grid = self.grid()?;
        for (r, e) in self.members() {
            TruncationParams::new(r, e).validate(&grid)?;
        }
        let r_min = self.radii.iter().cloned().fold(f64::INFINITY, f64::min);
        if !(self.omega_radius > 0.0 && self.omega_radius < r_min) {
            return Err(SqgError::InvalidParameter(format!(
                "comparison radius r0 = {} must satisfy 0 < r0 < min R = {r_min}",
                self.omega_radius
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct MemberRun {
    pub radius: f64,
    pub eps: f64,
    pub sim: Simulation,
    /// Content hash of the final `θ`.
    pub final_hash: String,
}

impl MemberRun {
    pub fn id(&self) -> String {
        format!("R{}_eps{}", self.radius, self.eps)
    }
}

/// Pairwise `(L²_t L²(Ω))` distances between sweep members.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CauchyTable {
    pub labels: Vec<(f64, f64)>,
    pub distances: Vec<Vec<f64>>,
    /// `d(member i, member i+1)` in run order.
    pub consecutive: Vec<f64>,
}

impl CauchyTable {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// `cauchy_table.csv`: one row per ordered pair, then the consecutive column.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["R_i", "eps_i", "R_j", "eps_j", "distance", "consecutive"])?;
        for i in 0..self.len() {
            for j in 0..self.len() {
                let cons = j == i + 1;
                w.write_record([
                    self.labels[i].0.to_string(),
                    self.labels[i].1.to_string(),
                    self.labels[j].0.to_string(),
                    self.labels[j].1.to_string(),
                    format!("{:e}", self.distances[i][j]),
                    cons.to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct SweepResult {
    pub plan: SweepPlan,
    pub members: Vec<MemberRun>,
    /// `None` when a member run blew up.
    pub table: Option<CauchyTable>,
    pub abort_reason: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ManifestEntry {
    pub id: String,
    #[serde(rename = "R")]
    pub radius: f64,
    pub eps: f64,
    pub final_hash: String,
    pub aborted: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepManifest<'a> {
    pub plan: &'a SweepPlan,
    pub runs: Vec<ManifestEntry>,
    pub abort_reason: Option<&'a str>,
}

impl SweepResult {
    pub fn manifest(&self) -> SweepManifest<'_> {
        SweepManifest {
            plan: &self.plan,
            runs: self
                .members
                .iter()
                .map(|m| ManifestEntry {
                    id: m.id(),
                    radius: m.radius,
                    eps: m.eps,
                    final_hash: m.final_hash.clone(),
                    aborted: m.sim.abort.is_some(),
                })
                .collect(),
            abort_reason: self.abort_reason.as_deref(),
        }
    }
}

/// Initial `θ` of one sweep member.
pub fn member_theta0(w0: &Field, s: f64, radius: f64, eps: f64) -> Result<Field> {
    Ok(build_truncated_data(w0, s, &TruncationParams::new(radius, eps))?.theta0)
}

/// Runs every `(R, ε)` member concurrently from the same `w₀` and solver
/// configuration and tabulates their distances on `Ω`.
pub fn run_sweep(plan: &SweepPlan, windows: Option<&WindowFamily>) -> Result<SweepResult> {
    plan.validate()?;
    let grid = plan.grid()?;
    let w0 = generate_w0(&plan.recipe, &grid)?;
    let members = plan.members();
    let runs: Vec<MemberRun> = crate::par::map_slice(&members, |&(r, e)| {
        let theta0 = member_theta0(&w0, plan.recipe.s, r, e)?;
        let spec = RunSpec {
            t_final: plan.t_final,
            cadence: plan.cadence,
            s: plan.recipe.s,
            params: TruncationParams::new(r, e),
            windows: windows.cloned(),
        };
        let sim = run_simulation(&theta0, &plan.solver, &spec)?;
        let final_hash = sim.final_state().theta.content_hash();
        Ok(MemberRun {
            radius: r,
            eps: e,
            sim,
            final_hash,
        })
    })
    .into_iter()
    .collect::<Result<_>>()?;
    if let Some(bad) = runs.iter().find(|m| m.sim.abort.is_some()) {
        let reason = format!(
            "{} aborted: {}",
            bad.id(),
            bad.sim
                .abort
                .as_ref()
                .map(|a| a.reason.as_str())
                .unwrap_or("")
        );
        return Ok(SweepResult {
            plan: plan.clone(),
            members: runs,
            table: None,
            abort_reason: Some(reason),
        });
    }
    let table = cauchy_table(&runs, plan.omega_radius)?;
    Ok(SweepResult {
        plan: plan.clone(),
        members: runs,
        table: Some(table),
        abort_reason: None,
    })
}

/// `(∫_0^T ∫_Ω |θ_a − θ_b|²)^{1/2}` by the trapezoid rule over aligned snapshots.
pub fn omega_distance(a: &Simulation, b: &Simulation, r0: f64) -> Result<f64> {
    if a.snapshots.len() != b.snapshots.len() {
        return Err(SqgError::InvalidParameter(
            "runs have different snapshot counts".into(),
        ));
    }
    let grid = a.grid().clone();
    grid.ensure_same(b.grid())?;
    let n = grid.n();
    let mask: Vec<usize> = (0..n * n)
        .filter(|&idx| grid.radius(idx % n, idx / n) <= r0)
        .collect();
    let dx2 = grid.dx() * grid.dx();
    let dt = a.cadence();
    let m = a.snapshots.len();
    let mut acc = 0.0;
    for (j, (sa, sb)) in a.snapshots.iter().zip(&b.snapshots).enumerate() {
        let (va, vb) = (sa.theta.values(), sb.theta.values());
        let local: f64 = mask.iter().map(|&i| (va[i] - vb[i]).powi(2)).sum::<f64>() * dx2;
        let w = if m == 1 {
            1.0
        } else if j == 0 || j == m - 1 {
            0.5 * dt
        } else {
            dt
        };
        acc += w * local;
    }
    Ok(acc.sqrt())
}

/// Symmetric table with exact zero diagonal; each pair is computed once.
pub fn cauchy_table(runs: &[MemberRun], r0: f64) -> Result<CauchyTable> {
    let m = runs.len();
    let pairs: Vec<(usize, usize)> = (0..m)
        .flat_map(|i| (i + 1..m).map(move |j| (i, j)))
        .collect();
    let values: Vec<f64> = crate::par::map_slice(&pairs, |&(i, j)| {
        omega_distance(&runs[i].sim, &runs[j].sim, r0)
    })
    .into_iter()
    .collect::<Result<_>>()?;
    let mut distances = vec![vec![0.0; m]; m];
    for (&(i, j), d) in pairs.iter().zip(values) {
        distances[i][j] = d;
        distances[j][i] = d;
    }
    let consecutive = (0..m.saturating_sub(1))
        .map(|i| distances[i][i + 1])
        .collect();
    Ok(CauchyTable {
        labels: runs.iter().map(|r| (r.radius, r.eps)).collect(),
        distances,
        consecutive,
    })
}

/// Ratios of consecutive differences (0/0 counts as 0).
pub fn consecutive_ratios(consecutive: &[f64]) -> Vec<f64> {
    consecutive
        .windows(2)
        .map(|p| {
            if p[0] == 0.0 && p[1] == 0.0 {
                0.0
            } else {
                p[1] / p[0]
            }
        })
        .collect()
}

/// Pass when every consecutive ratio is at most [`CAUCHY_RATIO_TARGET`];
/// otherwise "slow", never a failure. Needs at least three members.
pub fn cauchy_ratio(table: &CauchyTable) -> Verdict {
    let ratios = consecutive_ratios(&table.consecutive);
    let params = json!({ "consecutive": table.consecutive, "ratios": ratios });
    if table.len() < 3 {
        return Verdict::inconclusive("cauchy_ratio", params, "fewer than three sweep members");
    }
    let worst = ratios.iter().cloned().fold(0.0, f64::max);
    let outcome = if worst <= CAUCHY_RATIO_TARGET {
        Outcome::Pass
    } else {
        Outcome::Slow
    };
    Verdict::new(
        "cauchy_ratio",
        params,
        worst,
        CAUCHY_RATIO_TARGET,
        outcome,
        0.0,
    )
}

#[derive(Clone, Debug, Serialize)]
pub struct RefinementReport {
    pub n_list: Vec<usize>,
    /// `‖θ_n(T) − θ_{2n}(T)‖_{L²}` over modes common to both grids.
    pub distances: Vec<f64>,
    /// `d_i / d_{i+1}`.
    pub reductions: Vec<f64>,
    /// `log₂` of the reductions, the apparent algebraic order.
    pub orders: Vec<f64>,
}

/// Runs `w₀` (generated on the finest grid and spectrally truncated to each
/// coarser one) at every resolution and compares final states on common modes.
pub fn refinement_study(
    recipe: &DataRecipe,
    length: f64,
    n_list: &[usize],
    t_final: f64,
    solver: &SolverConfig,
) -> Result<RefinementReport> {
    if n_list.len() < 2 || n_list.windows(2).any(|p| p[1] != 2 * p[0]) {
        return Err(SqgError::InvalidParameter(
            "resolutions must form a doubling sequence of length ≥ 2".into(),
        ));
    }
    let finest = GridSpec::new(*n_list.last().unwrap(), length)?;
    let w_fine = transform(&generate_w0(recipe, &finest)?)?;
    let theta_fine = crate::spectral::apply_lambda_mean_zero(&w_fine, recipe.s);
    let finals: Vec<crate::spectral::SpectralField> = crate::par::map_slice(n_list, |&n| {
        let grid = GridSpec::new(n, length)?;
        let theta0 = crate::spectral::inverse(&theta_fine.resample(&grid)?);
        let spec = RunSpec {
            t_final,
            cadence: t_final,
            s: recipe.s,
            params: TruncationParams::default(),
            windows: None,
        };
        let sim = run_simulation(&theta0, solver, &spec)?;
        if let Some(a) = &sim.abort {
            return Err(SqgError::BlowUp {
                time: a.time,
                reason: a.reason.clone(),
            });
        }
        Ok(sim.final_state().theta_hat.clone())
    })
    .into_iter()
    .collect::<Result<_>>()?;
    let distances: Vec<f64> = finals
        .windows(2)
        .map(|p| {
            let coarse = p[0].grid();
            let fine_on_coarse = p[1].resample(coarse)?;
            let coarse_trim = p[0].resample(coarse)?;
            let diff = coarse_trim.zip_with(&fine_on_coarse, |a, b| a - b)?;
            Ok(diff.l2_squared().sqrt())
        })
        .collect::<Result<_>>()?;
    let reductions: Vec<f64> = distances.windows(2).map(|p| p[0] / p[1]).collect();
    let orders = reductions.iter().map(|r| r.log2()).collect();
    Ok(RefinementReport {
        n_list: n_list.to_vec(),
        distances,
        reductions,
        orders,
    })
}
