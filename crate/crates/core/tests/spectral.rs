use std::f64::consts::PI;

use proptest::prelude::*;
use sqg_core::spectral::{
    apply_lambda, apply_lambda_mean_zero, convolve, dealias, divergence, gradient, inverse,
    riesz_velocity, riesz_velocity_spectral, transform, Field, GridSpec,
};

fn rel_err(a: &Field, b: &Field) -> f64 {
    a.zip_map(b, |x, y| x - y).unwrap().linf() / b.linf().max(1e-300)
}

fn field_from(grid: &GridSpec, seed: &[f64]) -> Field {
    let modes: Vec<(f64, f64, f64, f64)> = seed
        .chunks(4)
        .map(|c| {
            (
                (c[0] * 6.0).round(),
                (c[1] * 6.0).round(),
                c[2],
                c[3] * 2.0 * PI,
            )
        })
        .collect();
    let k0 = 2.0 * PI / grid.length();
    Field::from_fn(grid, |x, y| {
        modes
            .iter()
            .map(|(m1, m2, a, ph)| a * (k0 * (m1 * x + m2 * y) + ph).cos())
            .sum()
    })
}

#[test]
fn lambda_powers_on_single_modes() {
    let g = GridSpec::new(64, 10.0).unwrap();
    let k0 = 2.0 * PI / 10.0;
    for (m1, m2) in [(1i64, 0i64), (3, -2), (0, 7), (12, 5)] {
        let k = k0 * ((m1 * m1 + m2 * m2) as f64).sqrt();
        let f = Field::from_fn(&g, |x, y| (k0 * (m1 as f64 * x + m2 as f64 * y)).sin());
        let fh = transform(&f).unwrap();
        for a in [-0.75, 0.5, 1.0, 1.6, 2.0] {
            let got = inverse(&apply_lambda(&fh, a).unwrap());
            assert!(
                rel_err(&got, &f.scale(k.powf(a))) < 1e-12,
                "mode ({m1},{m2}) a={a}"
            );
        }
    }
}

#[test]
fn riesz_and_gradient_closed_forms() {
    let g = GridSpec::new(64, 2.0 * PI).unwrap();
    let (m1, m2) = (3.0, 4.0);
    let k = 5.0;
    let theta = transform(&Field::from_fn(&g, |x, y| (m1 * x + m2 * y).cos())).unwrap();
    let (u1, u2) = riesz_velocity(&theta);
    let s = Field::from_fn(&g, |x, y| (m1 * x + m2 * y).sin());
    assert!(rel_err(&u1, &s.scale(m2 / k)) < 1e-12);
    assert!(rel_err(&u2, &s.scale(-m1 / k)) < 1e-12);
    let (d1, d2) = gradient(&theta);
    assert!(rel_err(&inverse(&d1), &s.scale(-m1)) < 1e-12);
    assert!(rel_err(&inverse(&d2), &s.scale(-m2)) < 1e-12);
}

#[test]
fn velocity_is_divergence_free() {
    let g = GridSpec::new(64, 16.0).unwrap();
    let f = field_from(
        &g,
        &[0.3, 0.7, 1.0, 0.1, 0.9, 0.2, -0.5, 0.4, 0.5, 0.5, 0.25, 0.8],
    );
    let (u1, u2) = riesz_velocity_spectral(&transform(&f).unwrap());
    assert!(inverse(&divergence(&u1, &u2).unwrap()).linf() <= 1e-10);
}

#[test]
fn dealias_keeps_low_modes_only() {
    let g = GridSpec::new(48, 2.0 * PI).unwrap();
    let f = Field::from_fn(&g, |x, y| {
        (16.0 * x).cos() + (17.0 * y).cos() + (3.0 * x).sin()
    });
    let d = inverse(&dealias(&transform(&f).unwrap()));
    let want = Field::from_fn(&g, |x, y| (16.0 * x).cos() + 0.0 * y + (3.0 * x).sin());
    assert!(rel_err(&d, &want) < 1e-13);
}

#[test]
fn convolution_matches_direct_sum() {
    let g = GridSpec::new(16, 4.0).unwrap();
    let f = field_from(&g, &[0.2, 0.4, 1.0, 0.3, 0.6, 0.1, 0.5, 0.9]);
    let h = Field::from_fn_centered(&g, |x, y| (-(x * x + 2.0 * y * y)).exp());
    let c = convolve(&f, &h).unwrap();
    let n = g.n();
    let dx2 = g.dx() * g.dx();
    for (i, j) in [(0usize, 0usize), (3, 7), (15, 9)] {
        let mut sum = 0.0;
        for q in 0..n {
            for p in 0..n {
                sum += f.at(p, q) * h.at((i + n - p) % n, (j + n - q) % n);
            }
        }
        assert!((c.at(i, j) - sum * dx2).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn parseval(seed in prop::collection::vec(-1.0f64..1.0, 12)) {
        let g = GridSpec::new(32, 7.0).unwrap();
        let f = field_from(&g, &seed);
        let direct: f64 = f.values().iter().map(|v| v * v).sum::<f64>() * g.dx() * g.dx();
        let spectral = transform(&f).unwrap().l2_squared();
        prop_assert!((direct - spectral).abs() <= 1e-12 * direct.max(1.0));
    }

    #[test]
    fn lambda_powers_compose(seed in prop::collection::vec(-1.0f64..1.0, 12), a in -0.9f64..1.5, b in -0.9f64..1.5) {
        let g = GridSpec::new(32, 9.0).unwrap();
        let fh = transform(&field_from(&g, &seed)).unwrap().mean_zero();
        let ab = inverse(&apply_lambda_mean_zero(&apply_lambda_mean_zero(&fh, a), b));
        let direct = inverse(&apply_lambda_mean_zero(&fh, a + b));
        let diff = ab.zip_map(&direct, |x, y| x - y).unwrap().linf();
        prop_assert!(diff <= 1e-11 * direct.linf().max(1e-3));
    }

    #[test]
    fn lambda_commutes_with_lattice_shifts(seed in prop::collection::vec(-1.0f64..1.0, 8), di in -16isize..16, dj in -16isize..16) {
        let g = GridSpec::new(32, 8.0).unwrap();
        let f = field_from(&g, &seed);
        let lf = inverse(&apply_lambda_mean_zero(&transform(&f).unwrap(), 0.75));
        let shifted_first = inverse(&apply_lambda_mean_zero(&transform(&f.shifted(di, dj)).unwrap(), 0.75));
        let diff = shifted_first.zip_map(&lf.shifted(di, dj), |x, y| x - y).unwrap().linf();
        prop_assert!(diff <= 1e-12 * lf.linf().max(1.0));
    }

    #[test]
    fn round_trip_is_identity(values in prop::collection::vec(-10.0f64..10.0, 256)) {
        let g = GridSpec::new(16, 3.0).unwrap();
        let f = Field::from_values(&g, values).unwrap();
        let back = inverse(&transform(&f).unwrap());
        prop_assert!(back.zip_map(&f, |x, y| x - y).unwrap().linf() <= 1e-13 * f.linf().max(1.0));
    }
}
