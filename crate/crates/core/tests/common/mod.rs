#![allow(dead_code)]

use exploration_design::{Excitation, InformationFunction};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (rng.random_range(lo.ln()..hi.ln())).exp()
}

/// A convex, non-decreasing, positive information function together with
/// its coefficients `i(x) = Σ cₖ xᵏ`.
pub struct Instance {
    pub coeffs: Vec<f64>,
    pub ifn: InformationFunction,
    pub i0: f64,
    pub horizon: usize,
}

pub fn random_instance(rng: &mut ChaCha8Rng) -> Instance {
    let coeffs = if rng.random_bool(0.5) {
        let u0: f64 = rng.random_range(-3.0..3.0);
        let k = if rng.random_bool(0.5) { 3.0 } else { 1.0 };
        vec![u0.powi(4), 6.0 * u0 * u0, k]
    } else {
        vec![
            log_uniform(rng, 1e-2, 10.0),
            rng.random_range(0.0..10.0),
            log_uniform(rng, 1e-2, 3.0),
            rng.random_range(0.0..0.5),
        ]
    };
    Instance {
        ifn: InformationFunction::polynomial(&coeffs).unwrap(),
        coeffs,
        i0: log_uniform(rng, 0.05, 10.0),
        horizon: rng.random_range(2..=60),
    }
}

pub fn poly(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ck| acc * x + ck)
}

pub fn poly_deriv(c: &[f64], x: f64) -> f64 {
    c.iter()
        .enumerate()
        .skip(1)
        .rev()
        .fold(0.0, |acc, (k, &ck)| acc * x + k as f64 * ck)
}

/// `R_ub` written as the double sum `1/i₀ + Σₜ 1/(i₀ + Σ_{s≤t} i(x_s)) + Σ xₜ`.
pub fn bound_oracle(i: impl Fn(f64) -> f64, i0: f64, x: &[f64]) -> f64 {
    let mut total = 1.0 / i0;
    for t in 0..x.len() {
        let info: f64 = i0 + x[..=t].iter().map(|&xs| i(xs)).sum::<f64>();
        total += 1.0 / info;
    }
    total + x.iter().sum::<f64>()
}

/// `E[(u + δ + α)⁴]` for `δ ~ N(0, a)` and `α` with variance `x`, from the
/// raw moments of each term.
pub fn fourth_moment(excitation: Excitation, u: f64, x: f64, a: f64) -> f64 {
    let alpha4 = match excitation {
        Excitation::Gaussian => 3.0 * x * x,
        Excitation::Binary => x * x,
    };
    // (u + s)^4 with s = δ + α: E s² = a + x, E s⁴ = 3a² + 6ax + E α⁴.
    let s2 = a + x;
    let s4 = 3.0 * a * a + 6.0 * a * x + alpha4;
    u.powi(4) + 6.0 * u * u * s2 + s4
}
