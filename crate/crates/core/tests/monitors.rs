use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sqg_core::function_spaces::{build_windows, lp_uloc_norm, WindowFamily, WindowProfile};
use sqg_core::initial_data::{
    build_truncated_data, generate_w0, mollifier, DataRecipe, Generator, TruncationParams,
};
use sqg_core::monitors::{
    check_commutator_bound, check_cordoba, check_energy_inequality, check_gronwall_envelope,
    check_l2_balance, check_l2_hhalf_budget, check_lp_dissipation, check_max_principle,
    check_norm_equivalence, check_stability, check_weak_form_residual, check_young_uloc,
    cordoba_residual, max_principle_margins, quantile, random_spectral_field, riesz_uloc_ratio,
    run_checks, summary_text, weak_form_samples, write_verdicts_csv, ConvexFn, EnergySeries,
    MonitorSettings, Outcome, Verdict,
};
use sqg_core::solver::{run_simulation, RunSpec, Simulation, SnapshotRecord, SolverConfig};
use sqg_core::spectral::{convolve, transform, Field, GridSpec};

const S: f64 = 0.75;

fn gaussian(seed: u64, amplitude: f64) -> DataRecipe {
    DataRecipe {
        generator: Generator::GaussianSpectrum {
            beta: 2.5,
            kcut: Some(4.0),
        },
        seed,
        amplitude,
        s: S,
        target_linf: Some(1.0),
    }
}

fn simulate(
    recipe: &DataRecipe,
    grid: &GridSpec,
    params: TruncationParams,
    t_final: f64,
    windows: Option<&WindowFamily>,
) -> Simulation {
    let w0 = generate_w0(recipe, grid).unwrap();
    let theta0 = build_truncated_data(&w0, S, &params).unwrap().theta0;
    let spec = RunSpec {
        t_final,
        cadence: 0.02,
        s: S,
        params,
        windows: windows.cloned(),
    };
    run_simulation(&theta0, &SolverConfig::default(), &spec).unwrap()
}

fn small_grid() -> (GridSpec, WindowFamily) {
    let g = GridSpec::new(64, 16.0).unwrap();
    let w = build_windows(&g, WindowProfile::Phi0).unwrap();
    (g, w)
}

fn perturb(snapshots: &[SnapshotRecord], j: usize, factor: f64) -> Vec<SnapshotRecord> {
    let mut out = snapshots.to_vec();
    let theta = out[j].theta.scale(factor);
    out[j].theta_hat = transform(&theta).unwrap();
    out[j].theta = theta;
    out
}

#[test]
fn cordoba_residual_of_cosine_square_is_one() {
    let g = GridSpec::new(32, 2.0 * PI).unwrap();
    let th = transform(&Field::from_fn(&g, |x, _| x.cos())).unwrap();
    let r = cordoba_residual(&th, 1.0, ConvexFn::Square).unwrap();
    for v in r.residual.values() {
        assert!((v - 1.0).abs() < 1e-12);
    }
    assert_eq!(
        check_cordoba(&th, 1.0, ConvexFn::Square, 1e-6)
            .unwrap()
            .outcome,
        Outcome::Pass
    );
}

#[test]
fn cordoba_holds_on_random_fields() {
    let g = GridSpec::new(64, 16.0).unwrap();
    for seed in 0..10 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_spectral_field(&g, &mut rng, 2.0, 4.0);
        let th = transform(&f).unwrap();
        for gf in [ConvexFn::Square, ConvexFn::Quartic] {
            for alpha in [0.5, 1.0, 1.7] {
                let v = check_cordoba(&th, alpha, gf, 1e-6).unwrap();
                assert_eq!(v.outcome, Outcome::Pass, "{v}");
            }
        }
    }
}

#[test]
fn zero_solution_has_zero_growth_constant() {
    let (g, win) = small_grid();
    let spec = RunSpec {
        t_final: 0.3,
        cadence: 0.02,
        s: S,
        params: TruncationParams::default(),
        windows: None,
    };
    let sim = run_simulation(&Field::zeros(&g), &SolverConfig::default(), &spec).unwrap();
    let series = EnergySeries::compute(&sim.trajectory(), &win).unwrap();
    let e = check_energy_inequality(&series, 2.0, 0.02);
    assert_eq!(e.c_emp, 0.0);
    assert!(e.stability.passed());
}

#[test]
fn single_mode_weak_form_residual_is_tiny() {
    let g = GridSpec::new(128, 2.0 * PI).unwrap();
    let theta0 = Field::from_fn(&g, |x, y| (x + y).cos());
    let spec = RunSpec {
        t_final: 0.2,
        cadence: 0.01,
        s: S,
        params: TruncationParams::default(),
        windows: None,
    };
    let cfg = SolverConfig {
        fixed_dt: Some(1e-3),
        ..Default::default()
    };
    let sim = run_simulation(&theta0, &cfg, &spec).unwrap();
    let eta = Field::from_fn_centered(&g, |x, y| (-(x * x + y * y)).exp());
    let rows = weak_form_samples(&sim.trajectory(), &eta).unwrap();
    assert!(!rows.is_empty());
    for r in rows {
        assert!(r.residual.abs() <= 1e-6, "t = {}: {}", r.t, r.residual);
    }
}

#[test]
fn random_run_passes_every_check() {
    let (g, win) = small_grid();
    let sim = simulate(
        &gaussian(1, 1.0),
        &g,
        TruncationParams::default(),
        1.0,
        Some(&win),
    );
    let checks = run_checks(
        &sim.trajectory(),
        &sim.ledger,
        Some(&win),
        &MonitorSettings::default(),
    )
    .unwrap();
    assert!(!checks.any_failed(), "{}", summary_text(&checks.verdicts));
    let c = &checks.constants;
    assert!(c.c_emp.unwrap().is_finite());
    assert!(c.c_hat.unwrap() <= c.c_emp.unwrap() + 0.05 * c.c_emp.unwrap().abs());
}

#[test]
fn doubling_amplitude_scales_growth_constant_moderately() {
    // a larger box, where windowed energy does grow for this seed
    let g = GridSpec::new(64, 32.0).unwrap();
    let win = build_windows(&g, WindowProfile::Phi0).unwrap();
    let c = |amp: f64| {
        let mut r = gaussian(1, amp);
        r.generator = Generator::GaussianSpectrum {
            beta: 2.5,
            kcut: Some(3.0),
        };
        let sim = simulate(&r, &g, TruncationParams::default(), 1.0, None);
        let series = EnergySeries::compute(&sim.trajectory(), &win).unwrap();
        check_energy_inequality(&series, 2.0, 0.02).c_emp
    };
    let (c1, c2) = (c(1.0), c(2.0));
    assert!(c1 > 0.0, "c1 = {c1}");
    let ratio = c2 / c1;
    assert!(
        (1.0..=2.0).contains(&ratio),
        "C_emp ratio {ratio} ({c1} -> {c2})"
    );
}

#[test]
fn budget_ratio_insensitive_to_truncation() {
    let (g, win) = small_grid();
    let k = |params: TruncationParams| {
        let sim = simulate(&gaussian(3, 1.0), &g, params, 0.6, None);
        let traj = sim.trajectory();
        let series = EnergySeries::compute(&traj, &win).unwrap();
        check_l2_hhalf_budget(&traj, &series, &win, None).1
    };
    let full = k(TruncationParams::default());
    let cut = k(TruncationParams::new(3.5, g.dx()));
    assert!(
        (cut / full - 1.0).abs() <= 0.3,
        "K {full} vs truncated {cut}"
    );
}

#[test]
fn riesz_ratio_of_single_mode() {
    let g = GridSpec::new(64, 16.0).unwrap();
    let win = build_windows(&g, WindowProfile::Phi0).unwrap();
    let m = 8.0;
    let k = 2.0 * PI * m / 16.0;
    let theta0 = Field::from_fn(&g, |x, _| (2.0 * PI * m * x / 16.0).cos());
    let spec = RunSpec {
        t_final: 0.2,
        cadence: 0.02,
        s: S,
        params: TruncationParams::default(),
        windows: None,
    };
    let sim = run_simulation(&theta0, &SolverConfig::default(), &spec).unwrap();
    let ratio = riesz_uloc_ratio(&sim.trajectory(), &win);
    let want = 1.0 / (1.0 + k.powf(-2.0 * S)).sqrt();
    assert!((ratio / want - 1.0).abs() < 0.02, "{ratio} vs {want}");
}

#[test]
fn riesz_ratio_is_translation_invariant() {
    let (g, win) = small_grid();
    let sim = simulate(
        &gaussian(4, 1.0),
        &g,
        TruncationParams::default(),
        0.2,
        None,
    );
    let a = riesz_uloc_ratio(&sim.trajectory(), &win);
    let shifted: Vec<SnapshotRecord> = sim
        .snapshots
        .iter()
        .map(|r| {
            let theta = r.theta.shifted(12, -20);
            SnapshotRecord {
                t: r.t,
                theta_hat: transform(&theta).unwrap(),
                theta,
            }
        })
        .collect();
    let mut traj = sim.trajectory();
    traj.snapshots = &shifted;
    let b = riesz_uloc_ratio(&traj, &win);
    assert!((a - b).abs() < 1e-10 * a, "{a} vs {b}");
}

#[test]
fn young_inequality_is_an_equality_for_constants() {
    let g = GridSpec::new(64, 16.0).unwrap();
    let rho = mollifier(&g, 0.5).unwrap();
    let c = Field::constant(&g, 1.7);
    let conv = convolve(&rho, &c).unwrap();
    for p in [1.0, 2.0, 4.0] {
        let lhs = lp_uloc_norm(&conv, p).unwrap().sup;
        let rhs = rho.l1() * lp_uloc_norm(&c, p).unwrap().sup;
        assert!((lhs - rhs).abs() <= 1e-12 * rhs, "p = {p}: {lhs} vs {rhs}");
    }
}

#[test]
fn young_inequality_is_homogeneous() {
    let g = GridSpec::new(64, 16.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let f = random_spectral_field(&g, &mut rng, 2.0, 4.0);
    let h = mollifier(&g, 1.0).unwrap();
    let base = lp_uloc_norm(&convolve(&h, &f).unwrap(), 2.0).unwrap().sup;
    for lambda in [0.5, 3.0] {
        let scaled = lp_uloc_norm(&convolve(&h.scale(lambda), &f).unwrap(), 2.0)
            .unwrap()
            .sup;
        assert!((scaled - lambda * base).abs() <= 1e-12 * scaled);
    }
    let v = check_young_uloc(&g, 100, 20, 1e-10).unwrap();
    assert!(v.passed(), "{v}");
}

#[test]
fn commutator_constant_is_stable() {
    let (_, win) = small_grid();
    let study = check_commutator_bound(&win, 0.75, 3, 30).unwrap();
    assert!(study.verdict.passed(), "{}", study.verdict);
    assert!(study.k_emp <= 2.0 * study.p90);
}

#[test]
fn max_principle_margins_grow_under_dissipation() {
    let g = GridSpec::new(64, 2.0 * PI).unwrap();
    let theta0 = Field::from_fn(&g, |x, y| (x + y).cos() + 0.5 * (2.0 * x).sin());
    let spec = RunSpec {
        t_final: 0.5,
        cadence: 0.02,
        s: S,
        params: TruncationParams::default(),
        windows: None,
    };
    let sim = run_simulation(&theta0, &SolverConfig::default(), &spec).unwrap();
    let m = max_principle_margins(&sim.ledger);
    assert_eq!(m[0], 0.0);
    for w in m.windows(2) {
        assert!(w[1] >= w[0] - 1e-12, "{:?}", w);
    }
}

#[test]
fn negative_controls_fail() {
    let (g, win) = small_grid();
    let sim = simulate(
        &gaussian(5, 1.0),
        &g,
        TruncationParams::default(),
        0.6,
        Some(&win),
    );
    let traj = sim.trajectory();

    let mut ledger = sim.ledger.clone();
    ledger[10].linf = 1.1 * ledger[0].linf;
    assert!(check_max_principle(&ledger, 1e-3).outcome.is_fail());
    assert!(check_max_principle(&sim.ledger, 1e-3).passed());

    let bumped = perturb(&sim.snapshots, 3, 1.1);
    let mut bad = traj;
    bad.snapshots = &bumped;
    assert!(check_l2_balance(&bad, 5e-3).unwrap().outcome.is_fail());
    assert!(check_lp_dissipation(&bad, 4.0, 1e-2)
        .unwrap()
        .outcome
        .is_fail());
    let series = EnergySeries::compute(&bad, &win).unwrap();
    assert!(check_energy_inequality(&series, 2.0, 0.02)
        .decomposition
        .outcome
        .is_fail());
    let eta = win.window(0);
    assert!(check_weak_form_residual(&bad, &eta, "phi", 3.0)
        .unwrap()
        .outcome
        .is_fail());
}

#[test]
fn gronwall_needs_enough_snapshots() {
    let (g, win) = small_grid();
    let sim = simulate(
        &gaussian(6, 1.0),
        &g,
        TruncationParams::default(),
        0.1,
        None,
    );
    let series = EnergySeries::compute(&sim.trajectory(), &win).unwrap();
    let (v, c) = check_gronwall_envelope(&series, Some(0.1), 0.05);
    assert_eq!(v.outcome, Outcome::Inconclusive);
    assert!(c.is_nan());
}

#[test]
fn stability_and_equivalence_rules() {
    assert!(check_stability("k", &[1.0, 1.1, 1.9], 2.0).passed());
    assert!(check_stability("k", &[1.0, 1.0, 2.5], 2.0)
        .outcome
        .is_fail());
    assert!(check_norm_equivalence(&[0.7, 0.8], 1.5).passed());
    assert!(check_norm_equivalence(&[0.2, 0.8], 1.5).outcome.is_fail());
    assert_eq!(quantile(&[3.0, 1.0, 2.0], 0.5), 2.0);
    assert!(quantile(&[], 0.5).is_nan());
}

#[test]
fn verdict_csv_has_one_row_per_check() {
    let v = vec![
        Verdict::new(
            "a",
            serde_json::json!({"p": 2}),
            1.0,
            2.0,
            Outcome::Pass,
            0.1,
        ),
        Verdict::inconclusive("b", serde_json::json!({}), "no data"),
    ];
    let mut out = Vec::new();
    write_verdicts_csv(&v, &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "check_id,params_json,measured,bound,margin,pass,tol"
    );
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("a,") && lines[1].contains(",pass,"));
    assert!(lines[2].contains("inconclusive"));
    assert!(summary_text(&v).contains("2 checks, 0 failed"));
    assert_eq!(v[0].margin, 1.0);
}
