//! Single-site full conditional of `θ_t` under the Laplace random-walk prior.
//!
//! With Gaussian pseudo-data `N(y*, 1/ω)` and neighbours `ξ ≤ ζ`, the
//! conditional `N(θ; y*, 1/ω) exp(−λ(|θ − ξ| + |ζ − θ|))` is Gaussian on each of
//! the regions cut by the neighbours, so it is a mixture of truncated normals.
//! Region weights are the exact integrals, kept on the log scale.

use rand::Rng;

use crate::error::{Error, Result};
use crate::mcmc::truncnorm::sample_truncnorm;
use crate::special::{log_norm_cdf, log_norm_interval, log_sum_exp, normal_log_pdf_prec};

#[derive(Debug, Clone, PartialEq)]
pub struct TruncComponent {
    /// Mixing probability.
    pub weight: f64,
    pub mean: f64,
    pub lo: f64,
    pub hi: f64,
    /// `log P(lo < N(mean, 1/ω) < hi)`.
    log_mass: f64,
}

/// Truncated-normal mixture sharing one precision.
#[derive(Debug, Clone, PartialEq)]
pub struct Mixture {
    pub components: Vec<TruncComponent>,
    pub precision: f64,
}

impl Mixture {
    pub fn log_density(&self, x: f64) -> f64 {
        for c in &self.components {
            if x >= c.lo && x <= c.hi {
                return c.weight.ln() + normal_log_pdf_prec(x, c.mean, self.precision) - c.log_mass;
            }
        }
        f64::NEG_INFINITY
    }

    pub fn density(&self, x: f64) -> f64 {
        self.log_density(x).exp()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let last = self.components.len() - 1;
        let sd = 1.0 / self.precision.sqrt();
        for (k, c) in self.components.iter().enumerate() {
            acc += c.weight;
            if u < acc || k == last {
                return sample_truncnorm(c.mean, sd, c.lo, c.hi, rng);
            }
        }
        unreachable!("mixture has at least one component")
    }
}

/// Full conditional of one site. `right` is `None` at the last time point.
pub fn direct_conditional(ystar: f64, omega: f64, lambda: f64, left: f64, right: Option<f64>) -> Result<Mixture> {
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::invalid(format!("precision must be positive and finite, got {omega}")));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::invalid(format!("penalty must be non-negative and finite, got {lambda}")));
    }
    let sw = omega.sqrt();
    let inf = f64::INFINITY;
    // (log weight, mean, lo, hi, log mass)
    let parts: Vec<(f64, f64, f64, f64, f64)> = match right {
        Some(right) => {
            let (xi, zeta) = if left <= right { (left, right) } else { (right, left) };
            let shift = 2.0 * lambda / omega;
            let quad = 2.0 * lambda * lambda / omega;
            let m1 = ystar + shift;
            let m2 = ystar - shift;
            let lm1 = log_norm_cdf((xi - m1) * sw);
            let lm2 = log_norm_cdf((m2 - zeta) * sw);
            let lm3 = log_norm_interval((xi - ystar) * sw, (zeta - ystar) * sw);
            vec![
                (2.0 * lambda * ystar + quad - lambda * (xi + zeta) + lm1, m1, -inf, xi, lm1),
                (-lambda * (zeta - xi) + lm3, ystar, xi, zeta, lm3),
                (-2.0 * lambda * ystar + quad + lambda * (xi + zeta) + lm2, m2, zeta, inf, lm2),
            ]
        }
        None => {
            let shift = lambda / omega;
            let quad = 0.5 * lambda * lambda / omega;
            let m1 = ystar + shift;
            let m2 = ystar - shift;
            let lm1 = log_norm_cdf((left - m1) * sw);
            let lm2 = log_norm_cdf((m2 - left) * sw);
            vec![
                (lambda * ystar + quad - lambda * left + lm1, m1, -inf, left, lm1),
                (-lambda * ystar + quad + lambda * left + lm2, m2, left, inf, lm2),
            ]
        }
    };
    let logs: Vec<f64> = parts.iter().map(|p| p.0).collect();
    let total = log_sum_exp(&logs);
    if !total.is_finite() {
        return Err(Error::Numerical(format!(
            "conditional has no finite mass (y*={ystar}, ω={omega}, λ={lambda}, left={left}, right={right:?})"
        )));
    }
    let components = parts
        .into_iter()
        .filter(|p| p.0 > f64::NEG_INFINITY)
        .map(|(lw, mean, lo, hi, log_mass)| TruncComponent { weight: (lw - total).exp(), mean, lo, hi, log_mass })
        .collect();
    Ok(Mixture { components, precision: omega })
}

/// One single-site Gibbs pass over `θ_1..θ_T` (`values`), left to right.
pub fn direct_path<R: Rng + ?Sized>(
    values: &mut [f64],
    anchor: f64,
    ystar: &[f64],
    omega: &[f64],
    lambda: f64,
    rng: &mut R,
) -> Result<()> {
    let len = values.len();
    for t in 0..len {
        let left = if t == 0 { anchor } else { values[t - 1] };
        let right = if t + 1 < len { Some(values[t + 1]) } else { None };
        values[t] = direct_conditional(ystar[t], omega[t], lambda, left, right)?.sample(rng);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_one() {
        for (y, w, l, a, b) in [(0.3, 2.0, 1.5, -1.0, Some(0.7)), (5.0, 0.1, 30.0, 0.0, Some(0.0)), (-2.0, 9.0, 0.4, 1.0, None)] {
            let m = direct_conditional(y, w, l, a, b).unwrap();
            let s: f64 = m.components.iter().map(|c| c.weight).sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_penalty_is_the_gaussian() {
        let m = direct_conditional(0.4, 2.5, 0.0, -0.3, Some(1.1)).unwrap();
        for x in [-3.0, -0.3, 0.0, 0.4, 1.1, 2.0] {
            let want = normal_log_pdf_prec(x, 0.4, 2.5).exp();
            assert!((m.density(x) - want).abs() < 1e-12);
        }
    }

    #[test]
    fn bad_arguments() {
        assert!(direct_conditional(0.0, 0.0, 1.0, 0.0, None).is_err());
        assert!(direct_conditional(0.0, 1.0, -1.0, 0.0, None).is_err());
    }
}
