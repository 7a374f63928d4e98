//! Exact PG(1, z) draws by Devroye's alternating-series method.
//!
//! `PG(1, z) = J*(1, z/2) / 4`, where `J*` is sampled by proposing from a
//! mixture of a truncated inverse Gaussian on `(0, t]` and an exponential tail
//! on `(t, ∞)`, then accepting with the alternating series for its density.

use std::f64::consts::{FRAC_2_PI, PI};

use rand::Rng;
use rand_distr::{Exp1, StandardNormal};

use crate::special::log_norm_cdf;

const TRUNC: f64 = 0.64;
const PI2_8: f64 = PI * PI / 8.0;

/// One draw from PG(1, z).
pub fn sample_pg1<R: Rng + ?Sized>(z: f64, rng: &mut R) -> f64 {
    let z = 0.5 * z.abs();
    let k = PI2_8 + 0.5 * z * z;
    let p_tail = mass_texpon(z, k);
    loop {
        let x = if rng.random::<f64>() < p_tail {
            let e: f64 = rng.sample(Exp1);
            TRUNC + e / k
        } else {
            rtigauss(z, rng)
        };
        let mut s = series_coef(0, x);
        let y = rng.random::<f64>() * s;
        let mut n = 0;
        loop {
            n += 1;
            if n % 2 == 1 {
                s -= series_coef(n, x);
                if y <= s {
                    return 0.25 * x;
                }
            } else {
                s += series_coef(n, x);
                if y > s {
                    break;
                }
            }
        }
    }
}

/// Probability that the proposal comes from the exponential tail.
fn mass_texpon(z: f64, k: f64) -> f64 {
    let rt = (1.0 / TRUNC).sqrt();
    let b = rt * (TRUNC * z - 1.0);
    let a = -rt * (TRUNC * z + 1.0);
    let x0 = k.ln() + k * TRUNC;
    let xb = x0 - z + log_norm_cdf(b);
    let xa = x0 + z + log_norm_cdf(a);
    let q_over_p = 4.0 / PI * (xb.exp() + xa.exp());
    1.0 / (1.0 + q_over_p)
}

/// n-th term of the series for the `J*(1, 0)` density at `x`.
fn series_coef(n: u32, x: f64) -> f64 {
    let h = f64::from(n) + 0.5;
    if x > TRUNC {
        PI * h * (-0.5 * h * h * PI * PI * x).exp()
    } else {
        (FRAC_2_PI / x).powf(1.5) * PI * h * (-2.0 * h * h / x).exp()
    }
}

/// Inverse Gaussian with mean `1/z` and shape 1, truncated to `(0, TRUNC)`.
fn rtigauss<R: Rng + ?Sized>(z: f64, rng: &mut R) -> f64 {
    if z < 1.0 / TRUNC {
        // mean beyond the truncation point: reject from a Lévy-type proposal
        loop {
            let x = loop {
                let e1: f64 = rng.sample(Exp1);
                let e2: f64 = rng.sample(Exp1);
                if e1 * e1 <= 2.0 * e2 / TRUNC {
                    let d = 1.0 + e1 * TRUNC;
                    break TRUNC / (d * d);
                }
            };
            if rng.random::<f64>() <= (-0.5 * z * z * x).exp() {
                return x;
            }
        }
    }
    let mu = 1.0 / z;
    loop {
        let v: f64 = rng.sample(StandardNormal);
        let y = v * v;
        let half = 0.5 * mu * y;
        // stable root of the Michael-Schucany-Haas quadratic
        let x = mu / (1.0 + half + (half * half + 2.0 * half).sqrt());
        let x = if rng.random::<f64>() <= mu / (mu + x) { x } else { mu * mu / x };
        if x < TRUNC {
            return x;
        }
    }
}
