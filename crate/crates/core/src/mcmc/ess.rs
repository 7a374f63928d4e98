//! Effective sample size with Geyer's initial monotone sequence cutoff.

use crate::error::{Error, Result};

/// `B γ₀ / σ²`, where `σ²` sums the positive, monotonised pair sums
/// `γ_{2m} + γ_{2m+1}` of the sample autocovariances. Constant chains give `B`.
pub fn ess(chain: &[f64]) -> Result<f64> {
    let n = chain.len();
    if n < 10 {
        return Err(Error::invalid(format!("ESS needs at least 10 draws, got {n}")));
    }
    if chain.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("chain contains non-finite values"));
    }
    let mean = chain.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = chain.iter().map(|x| x - mean).collect();
    let autocov = |k: usize| -> f64 {
        centered[..n - k].iter().zip(&centered[k..]).map(|(a, b)| a * b).sum::<f64>() / n as f64
    };
    let gamma0 = autocov(0);
    if gamma0 <= 0.0 {
        return Ok(n as f64);
    }
    let mut sigma2 = -gamma0;
    let mut prev = f64::INFINITY;
    let mut m = 0;
    while 2 * m + 1 < n {
        let pair = autocov(2 * m) + autocov(2 * m + 1);
        if pair <= 0.0 {
            break;
        }
        let pair = pair.min(prev);
        sigma2 += 2.0 * pair;
        prev = pair;
        m += 1;
    }
    if sigma2 <= 0.0 {
        return Ok(n as f64);
    }
    Ok((n as f64 * gamma0 / sigma2).min(n as f64))
}
