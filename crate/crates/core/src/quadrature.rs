//! Gauss–Legendre rules on [-1, 1].

use std::sync::OnceLock;

use crate::scalar::Real;

/// Nodes and weights of an `n`-point Gauss–Legendre rule on [-1, 1].
///
/// Roots are found by Newton iteration on the three-term recurrence, in f64.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    assert!(n >= 1, "rule needs at least one node");
    let mut rule = Vec::with_capacity(n);
    let nf = n as f64;
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
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
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.push((x, w));
    }
    rule.sort_by(|a, b| a.0.total_cmp(&b.0));
    rule
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// The 64-point rule used for source potentials, computed once.
pub fn gauss_legendre_64() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(64))
}

/// Integrates `f` over `[a, b]` with the cached 64-point rule.
pub fn integrate<T: Real>(a: T, b: T, f: impl Fn(T) -> T) -> T {
    let half = (b - a) * T::lit(0.5);
    let mid = (b + a) * T::lit(0.5);
    gauss_legendre_64()
        .iter()
        .map(|&(x, w)| T::lit(w) * f(mid + half * T::lit(x)))
        .fold(T::zero(), |acc, v| acc + v)
        * half
}
