//! Test-side oracles, written independently of the library code paths.
#![allow(dead_code)]

use std::f64::consts::PI;

use hjs::{Complex, EnsembleState, Grid, Kappa};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn grid(l: f64, n: usize) -> Grid {
    Grid::new(l, n).unwrap()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

pub fn max_abs_diff_c(a: &[Complex], b: &[Complex]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).norm()))
}

/// Composite Simpson rule on [a, b] with `n` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for j in 1..n {
        let w = if j % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + j as f64 * h);
    }
    s * h / 3.0
}

/// Initial variances of the modified Gaussian by direct quadrature of the
/// defining integrals (R and R' in closed form, S = p0 q).
pub fn quadrature_initial_variances(eps: f64, sigma: f64, kappa: f64) -> (f64, f64) {
    let r = |q: f64| (q * q + eps * eps) * (-q * q / (2.0 * sigma * sigma)).exp();
    let dr = |q: f64| {
        let g = (-q * q / (2.0 * sigma * sigma)).exp();
        2.0 * q * g - (q * q + eps * eps) * q / (sigma * sigma) * g
    };
    let lim = 12.0 * sigma;
    let n = 20_000;
    let norm = simpson(|q| r(q) * r(q), -lim, lim, n);
    let q2 = simpson(|q| q * q * r(q) * r(q), -lim, lim, n) / norm;
    // <p^2> - <p>^2 for psi = R e^{i p0 q/kappa}: the p0 parts cancel
    let p2 = kappa * kappa * simpson(|q| dr(q) * dr(q), -lim, lim, n) / norm;
    (q2, p2)
}

/// Smooth positive amplitude and action built from a few random Gaussian bumps.
pub fn random_state(rng: &mut ChaCha8Rng, g: &Grid) -> EnsembleState {
    let bumps: Vec<(f64, f64, f64)> =
        (0..3).map(|_| (rng.gen_range(0.3..1.0), rng.gen_range(-2.0..2.0), rng.gen_range(0.8..1.6))).collect();
    let (a1, a2, p0) = (rng.gen_range(-0.3..0.3), rng.gen_range(-0.2..0.2), rng.gen_range(-1.0..1.0));
    let q = g.points();
    let r =
        q.iter().map(|&x| bumps.iter().map(|(a, c, w)| a * (-(x - c) * (x - c) / (2.0 * w * w)).exp()).sum()).collect();
    // action with a linear part and a localized bend, so S' is smooth and bounded
    let s = q.iter().map(|&x| p0 * x + a1 * (x / 2.0).tanh() + a2 * (-x * x / 8.0).exp()).collect();
    EnsembleState::new(r, s, g).unwrap().normalized().unwrap()
}

/// Node-free variant: the amplitude never drops below a positive pedestal.
pub fn random_positive_state(rng: &mut ChaCha8Rng, g: &Grid) -> EnsembleState {
    let base = random_state(rng, g);
    let (r, s) = base.into_parts();
    let r = r.into_iter().map(|x| x + 0.05).collect();
    EnsembleState::new(r, s, g).unwrap().normalized().unwrap()
}

pub fn random_kappa(rng: &mut ChaCha8Rng) -> Kappa {
    let re = rng.gen_range(0.3..2.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    let theta = rng.gen_range(-1.0..1.0);
    Kappa::new(re, theta * re).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Normalized Gaussian `exp(-(q-c)^2/4s^2 + i p q/kappa)`.
pub fn gaussian(g: &Grid, c: f64, s: f64, p: f64, kappa: f64) -> Vec<Complex> {
    let pref = (2.0 * PI * s * s).powf(-0.25);
    g.points()
        .iter()
        .map(|&q| Complex::from_polar(pref * (-(q - c) * (q - c) / (4.0 * s * s)).exp(), p * q / kappa))
        .collect()
}
