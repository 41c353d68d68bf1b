use std::f64::consts::PI;

use sqg_core::initial_data::{generate_w0, DataRecipe, Generator, TruncationParams};
use sqg_core::monitors::write_ledger_csv;
use sqg_core::solver::{run_simulation, RunSpec, SolverConfig};
use sqg_core::spectral::{apply_lambda_mean_zero, inverse, transform, Field, GridSpec};
use sqg_core::SqgError;

fn spec(t_final: f64, cadence: f64) -> RunSpec {
    RunSpec {
        t_final,
        cadence,
        s: 0.75,
        params: TruncationParams::default(),
        windows: None,
    }
}

fn random_theta(grid: &GridSpec, seed: u64) -> Field {
    let r = DataRecipe {
        generator: Generator::GaussianSpectrum {
            beta: 2.5,
            kcut: Some(5.0),
        },
        seed,
        amplitude: 1.0,
        s: 0.75,
        target_linf: Some(1.0),
    };
    let w0 = generate_w0(&r, grid).unwrap();
    inverse(&apply_lambda_mean_zero(&transform(&w0).unwrap(), 0.75))
}

#[test]
fn single_mode_decays_exponentially() {
    let g = GridSpec::new(64, 2.0 * PI).unwrap();
    let theta0 = Field::from_fn(&g, |x, y| (2.0 * x + y).cos());
    let k = 5f64.sqrt();
    let sim = run_simulation(&theta0, &SolverConfig::default(), &spec(1.0, 0.1)).unwrap();
    for rec in &sim.snapshots {
        let want = theta0.scale((-k * rec.t).exp());
        let err = rec.theta.zip_map(&want, |a, b| a - b).unwrap().linf();
        assert!(err < 1e-8, "t = {}: {err}", rec.t);
    }
}

#[test]
fn zero_stays_zero() {
    let g = GridSpec::new(32, 8.0).unwrap();
    let sim = run_simulation(&Field::zeros(&g), &SolverConfig::default(), &spec(0.5, 0.1)).unwrap();
    assert!(sim.snapshots.iter().all(|r| r.theta.linf() == 0.0));
    assert!(sim
        .ledger
        .iter()
        .all(|r| r.linf == 0.0 && r.h_half_cum == 0.0));
}

#[test]
fn snapshots_land_on_cadence() {
    let g = GridSpec::new(32, 16.0).unwrap();
    let sim = run_simulation(
        &random_theta(&g, 1),
        &SolverConfig::default(),
        &spec(0.3, 0.05),
    )
    .unwrap();
    assert_eq!(sim.snapshots.len(), 7);
    assert_eq!(sim.ledger.len(), 7);
    for (k, r) in sim.snapshots.iter().enumerate() {
        assert!((r.t - 0.05 * k as f64).abs() < 1e-12);
        assert_eq!(sim.ledger[k].t, r.t);
    }
    assert!(sim.max_step_dt <= 0.01 + 1e-15);
}

#[test]
fn critical_run_obeys_max_principle() {
    let g = GridSpec::new(64, 16.0).unwrap();
    let sim = run_simulation(
        &random_theta(&g, 2),
        &SolverConfig::default(),
        &spec(0.5, 0.05),
    )
    .unwrap();
    let l0 = sim.ledger[0].linf;
    for row in &sim.ledger {
        assert!(
            row.linf <= l0 * (1.0 + 1e-3),
            "t = {}: {} > {l0}",
            row.t,
            row.linf
        );
    }
    for w in sim.ledger.windows(2) {
        assert!(w[1].l2 <= w[0].l2 * (1.0 + 1e-9));
    }
}

#[test]
fn runs_are_bitwise_reproducible() {
    let g = GridSpec::new(64, 16.0).unwrap();
    let theta0 = random_theta(&g, 3);
    let a = run_simulation(&theta0, &SolverConfig::default(), &spec(0.2, 0.05)).unwrap();
    let b = run_simulation(&theta0, &SolverConfig::default(), &spec(0.2, 0.05)).unwrap();
    assert_eq!(
        a.final_state().theta.content_hash(),
        b.final_state().theta.content_hash()
    );
    let (mut x, mut y) = (Vec::new(), Vec::new());
    write_ledger_csv(&a.ledger, &mut x).unwrap();
    write_ledger_csv(&b.ledger, &mut y).unwrap();
    assert_eq!(x, y);
}

#[test]
fn inviscid_transport_conserves_l2() {
    let g = GridSpec::new(64, 16.0).unwrap();
    let cfg = SolverConfig {
        dissipation: 0.0,
        ..Default::default()
    };
    let sim = run_simulation(&random_theta(&g, 4), &cfg, &spec(0.2, 0.05)).unwrap();
    let l0 = sim.ledger[0].l2;
    let l1 = sim.ledger.last().unwrap().l2;
    assert!((l1 / l0 - 1.0).abs() < 1e-6, "{l0} -> {l1}");
}

#[test]
fn fourth_order_in_time() {
    let g = GridSpec::new(32, 2.0 * PI).unwrap();
    let theta0 = Field::from_fn(&g, |x, y| x.cos() + 0.6 * (x + 2.0 * y).sin());
    let final_at = |dt: f64| {
        let cfg = SolverConfig {
            fixed_dt: Some(dt),
            ..Default::default()
        };
        run_simulation(&theta0, &cfg, &spec(0.4, 0.4))
            .unwrap()
            .final_state()
            .theta
            .clone()
    };
    let (a, b, c) = (final_at(0.04), final_at(0.02), final_at(0.01));
    let e1 = a.zip_map(&b, |x, y| x - y).unwrap().linf();
    let e2 = b.zip_map(&c, |x, y| x - y).unwrap().linf();
    let ratio = e1 / e2;
    assert!((12.0..=20.0).contains(&ratio), "Richardson ratio {ratio}");
}

#[test]
fn exploratory_parameters_are_flagged() {
    let g = GridSpec::new(32, 8.0).unwrap();
    let theta0 = random_theta(&g, 5);
    let sub = SolverConfig {
        alpha: 1.5,
        ..Default::default()
    };
    assert!(
        run_simulation(&theta0, &sub, &spec(0.05, 0.05))
            .unwrap()
            .exploratory
    );
    let mut low_s = spec(0.05, 0.05);
    low_s.s = 0.4;
    assert!(
        run_simulation(&theta0, &SolverConfig::default(), &low_s)
            .unwrap()
            .exploratory
    );
    assert!(
        !run_simulation(&theta0, &SolverConfig::default(), &spec(0.05, 0.05))
            .unwrap()
            .exploratory
    );
}

#[test]
fn bad_horizon_and_config_rejected() {
    let g = GridSpec::new(32, 8.0).unwrap();
    let theta0 = random_theta(&g, 6);
    assert!(run_simulation(&theta0, &SolverConfig::default(), &spec(0.33, 0.1)).is_err());
    let bad = SolverConfig {
        alpha: 2.5,
        ..Default::default()
    };
    assert!(matches!(
        run_simulation(&theta0, &bad, &spec(0.1, 0.1)),
        Err(SqgError::InvalidParameter(_))
    ));
    let mut nan = theta0.clone();
    nan.values_mut()[7] = f64::NAN;
    assert!(run_simulation(&nan, &SolverConfig::default(), &spec(0.1, 0.1)).is_err());
}
