//! Normal draws restricted to an interval.
//!
//! The interval is standardized and mirrored so the lower end is the one
//! nearest the mode; the proposal (normal, half-normal, uniform or Robert's
//! translated exponential) is picked from its position and width.

use rand::Rng;
use rand_distr::{Exp1, StandardNormal};

/// Draw from `Normal(mean, sd²)` restricted to `(lo, hi)`; either end may be infinite.
pub fn sample_truncnorm<R: Rng + ?Sized>(mean: f64, sd: f64, lo: f64, hi: f64, rng: &mut R) -> f64 {
    debug_assert!(lo < hi && sd > 0.0);
    let a = (lo - mean) / sd;
    let b = (hi - mean) / sd;
    let x = if a <= 0.0 && b >= 0.0 {
        straddling(a, b, rng)
    } else if a > 0.0 {
        one_sided(a, b, rng)
    } else {
        -one_sided(-b, -a, rng)
    };
    (mean + sd * x).clamp(lo, hi)
}

fn straddling<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> f64 {
    if b - a > 2.5 {
        loop {
            let x: f64 = rng.sample(StandardNormal);
            if x > a && x < b {
                return x;
            }
        }
    }
    loop {
        let x = a + (b - a) * rng.random::<f64>();
        if rng.random::<f64>() <= (-0.5 * x * x).exp() {
            return x;
        }
    }
}

/// Standard normal on `(a, b)` with `0 < a < b ≤ ∞`.
fn one_sided<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> f64 {
    if a < 0.5 && b - a >= 1.0 {
        loop {
            let x = rng.sample::<f64, _>(StandardNormal).abs();
            if x > a && x < b {
                return x;
            }
        }
    }
    if a * (b - a) < 1.0 {
        loop {
            let x = a + (b - a) * rng.random::<f64>();
            if rng.random::<f64>() <= (0.5 * (a * a - x * x)).exp() {
                return x;
            }
        }
    }
    let alpha = 0.5 * (a + (a * a + 4.0).sqrt());
    loop {
        let e: f64 = rng.sample(Exp1);
        let x = a + e / alpha;
        if x >= b {
            continue;
        }
        let d = x - alpha;
        if rng.random::<f64>() <= (-0.5 * d * d).exp() {
            return x;
        }
    }
}
