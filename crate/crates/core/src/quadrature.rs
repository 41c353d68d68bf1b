//! Gauss–Legendre rules and the normalising constant of the fractional
//! Laplacian's singular-integral kernel.

use statrs::function::gamma::gamma;
use std::f64::consts::PI;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "need at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite Gauss–Legendre rule on `[a, b]` split into `panels` equal panels.
pub fn composite_rule(a: f64, b: f64, panels: usize, order: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(order);
    let h = (b - a) / panels as f64;
    let mut nodes = Vec::with_capacity(panels * order);
    let mut weights = Vec::with_capacity(panels * order);
    for p in 0..panels {
        let lo = a + p as f64 * h;
        for (xi, wi) in x.iter().zip(&w) {
            nodes.push(lo + 0.5 * h * (xi + 1.0));
            weights.push(0.5 * h * wi);
        }
    }
    (nodes, weights)
}

/// Rule on `[0, b]` with geometric grading towards 0, suitable for
/// integrands with an algebraic endpoint singularity at the origin.
pub fn graded_rule(b: f64, levels: usize, order: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(order);
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    let mut hi = b;
    for level in 0..=levels {
        let lo = if level == levels { 0.0 } else { hi * 0.5 };
        let h = hi - lo;
        for (xi, wi) in x.iter().zip(&w) {
            nodes.push(lo + 0.5 * h * (xi + 1.0));
            weights.push(0.5 * h * wi);
        }
        hi = lo;
    }
    (nodes, weights)
}

/// Constant `C` such that `(-Δ)^{σ/2} f(x) = C · P.V.∫ (f(x) - f(y)) / |x-y|^{2+σ} dy`
/// in two dimensions, for `0 < σ < 2`. It is the normalisation that makes the
/// kernel form agree with the Fourier symbol `|k|^σ`.
pub fn fractional_laplacian_constant(sigma: f64) -> f64 {
    assert!(sigma > 0.0 && sigma < 2.0, "sigma must lie in (0, 2)");
    2f64.powf(sigma) * gamma(1.0 + 0.5 * sigma) / (PI * gamma(-0.5 * sigma).abs())
}
