//! Command-line front end. Exit codes: 0 when every check passes, 1 when a
//! check fails or a run aborts, 2 for usage, configuration and I/O errors.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use sqg_core::function_spaces::{
    build_windows, hs_uloc_norm, lp_uloc_norm, HsUlocVariant, NormReport, WindowProfile,
};
use sqg_core::harness::{cauchy_ratio, run_sweep};
use sqg_core::io::output::{
    config_windows, load_run, render_snapshots, update_manifest, write_run, write_sweep,
    write_verdicts, ManifestEntry,
};
use sqg_core::io::{load_config, read_snapshot, simulate_config};
use sqg_core::monitors::{run_checks, summary_text, Verdict};
use sqg_core::SqgError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(
    name = "sqg",
    version,
    about = "Dissipative SQG simulator and verification harness"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one configuration and check it.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Output root (defaults to `[output] directory`).
        #[arg(long)]
        output: Option<PathBuf>,
        /// Run directory name (defaults to the config file stem).
        #[arg(long)]
        name: Option<String>,
    },
    /// Run the `[sweep]` section of a configuration.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        name: Option<String>,
    },
    /// Re-run the checks on a stored run directory.
    Verify {
        #[arg(long)]
        run: PathBuf,
    },
    /// Print uniformly local norms of a snapshot.
    Norms {
        #[arg(long)]
        snapshot: PathBuf,
        /// Sobolev exponent (defaults to the one stored in the snapshot).
        #[arg(long)]
        s: Option<f64>,
        /// Also write every report as CSV here.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Write PNG heatmaps for a snapshot file or every snapshot of a run.
    Render {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

enum Failure {
    Usage(String),
    Checks,
}

impl From<SqgError> for Failure {
    fn from(e: SqgError) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

type CliResult = std::result::Result<(), Failure>;

pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Simulate {
            config,
            output,
            name,
        } => simulate(&config, output, name),
        Command::Sweep {
            config,
            output,
            name,
        } => sweep(&config, output, name),
        Command::Verify { run } => verify(&run),
        Command::Norms { snapshot, s, csv } => norms(&snapshot, s, csv.as_deref()),
        Command::Render { input, out } => render(&input, &out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(Failure::Checks) => EXIT_CHECK_FAILED,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
    }
}

fn run_name(config: &Path, name: Option<String>) -> String {
    name.unwrap_or_else(|| {
        config
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "run".into())
    })
}

fn report(verdicts: &[Verdict]) -> bool {
    print!("{}", summary_text(verdicts));
    verdicts.iter().any(|v| v.outcome.is_fail())
}

fn simulate(config: &Path, output: Option<PathBuf>, name: Option<String>) -> CliResult {
    let cfg = load_config(config)?;
    let root = output.unwrap_or_else(|| cfg.output.directory.clone());
    let name = run_name(config, name);
    let dir = root.join(&name);
    let (sim, windows) = simulate_config(&cfg)?;
    println!(
        "{name}: {} steps, {} snapshots, max dt {:.3e}",
        sim.steps,
        sim.snapshots.len(),
        sim.max_step_dt
    );
    let checks = run_checks(
        &sim.trajectory(),
        &sim.ledger,
        windows.as_ref(),
        &cfg.monitors,
    )?;
    write_run(&dir, &cfg, &sim, Some(&checks.constants))?;
    write_verdicts(&dir, &checks.verdicts)?;
    let failed = report(&checks.verdicts);
    if let Some(a) = &sim.abort {
        println!("aborted at t = {}: {}", a.time, a.reason);
    }
    let ok = !failed && sim.abort.is_none();
    update_manifest(
        &root,
        ManifestEntry {
            id: name.clone(),
            kind: "simulate".into(),
            path: PathBuf::from(&name),
            final_hash: sim.final_state().theta.content_hash(),
            passed: Some(ok),
        },
    )?;
    println!("written to {}", dir.display());
    if ok {
        Ok(())
    } else {
        Err(Failure::Checks)
    }
}

fn sweep(config: &Path, output: Option<PathBuf>, name: Option<String>) -> CliResult {
    let cfg = load_config(config)?;
    let plan = cfg
        .sweep_plan()
        .ok_or_else(|| Failure::Usage("config has no [sweep] section".into()))?;
    let root = output.unwrap_or_else(|| cfg.output.directory.clone());
    let name = run_name(config, name);
    let dir = root.join(&name);
    let windows = config_windows(&cfg)?;
    let result = run_sweep(&plan, windows.as_ref())?;
    write_sweep(&dir, &cfg, &result)?;
    let mut verdicts = Vec::new();
    if let Some(table) = &result.table {
        for (i, d) in table.consecutive.iter().enumerate() {
            let (a, b) = (table.labels[i], table.labels[i + 1]);
            println!(
                "d((R={}, eps={}), (R={}, eps={})) = {d:.4e}",
                a.0, a.1, b.0, b.1
            );
        }
        verdicts.push(cauchy_ratio(table));
    }
    write_verdicts(&dir, &verdicts)?;
    let failed = report(&verdicts);
    if let Some(reason) = &result.abort_reason {
        println!("sweep aborted: {reason}");
    }
    let ok = !failed && result.abort_reason.is_none();
    update_manifest(
        &root,
        ManifestEntry {
            id: name.clone(),
            kind: "sweep".into(),
            path: PathBuf::from(&name),
            final_hash: result
                .members
                .last()
                .map(|m| m.final_hash.clone())
                .unwrap_or_default(),
            passed: Some(ok),
        },
    )?;
    println!("written to {}", dir.display());
    if ok {
        Ok(())
    } else {
        Err(Failure::Checks)
    }
}

fn verify(run: &Path) -> CliResult {
    let stored = load_run(run)?;
    let checks = stored.verify()?;
    if report(&checks.verdicts) {
        Err(Failure::Checks)
    } else {
        Ok(())
    }
}

fn print_report(r: &NormReport) {
    println!(
        "{:<12} exponent {:<6} sup {:.6e} (window {} of {})",
        r.id.to_string(),
        r.exponent,
        r.sup,
        r.argmax,
        r.values.len()
    );
}

fn norms(path: &Path, s: Option<f64>, csv: Option<&Path>) -> CliResult {
    let snap = read_snapshot(path)?;
    let s = s.unwrap_or(snap.s);
    let f = &snap.field;
    println!("{}: t = {}, n = {}", path.display(), snap.t, f.grid().n());
    let mut reports = Vec::new();
    for p in [1.0, 2.0, f64::INFINITY] {
        reports.push(lp_uloc_norm(f, p)?);
    }
    match build_windows(f.grid(), WindowProfile::Phi0) {
        Ok(w) => {
            reports.push(hs_uloc_norm(f, s, &w, HsUlocVariant::A)?);
            reports.push(hs_uloc_norm(f, s, &w, HsUlocVariant::B)?);
        }
        Err(e) => println!("no windowed norms: {e}"),
    }
    for r in &reports {
        print_report(r);
    }
    if let Some(out) = csv {
        std::fs::create_dir_all(out)?;
        for (i, r) in reports.iter().enumerate() {
            let file = std::fs::File::create(out.join(format!("norm_{i}_{}.csv", r.id)))?;
            r.write_csv(file)?;
        }
    }
    Ok(())
}

fn render(input: &Path, out: &Path) -> CliResult {
    let count = if input.is_dir() {
        let run = load_run(input)?;
        render_snapshots(run.snapshots.iter().map(|r| &r.theta), out)?
    } else {
        let snap = read_snapshot(input)?;
        render_snapshots(std::iter::once(&snap.field), out)?
    };
    println!("{count} images written to {}", out.display());
    Ok(())
}
