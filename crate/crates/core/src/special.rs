//! Scalar special functions shared by the likelihood, the samplers and the
//! mixture weights. Everything here works on the log scale where a tail
//! probability can underflow.

use libm::erfc;
use std::f64::consts::FRAC_1_SQRT_2;

pub const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Logistic function `1 / (1 + e^{-x})`, stable for either sign.
pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^x)` without overflow.
pub fn log1p_exp(x: f64) -> f64 {
    if x > 35.0 {
        x + (-x).exp()
    } else if x < -35.0 {
        x.exp()
    } else {
        x.exp().ln_1p()
    }
}

/// Log-sum-exp with max subtraction. Returns `-inf` when every term is `-inf`.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    if m == f64::INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x - LN_SQRT_2PI).exp()
}

/// Standard normal CDF.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// `log Φ(x)`, accurate far into the lower tail.
pub fn log_norm_cdf(x: f64) -> f64 {
    if x > 5.0 {
        // Φ(x) = 1 - Q(x) with Q tiny
        (-0.5 * erfc(x * FRAC_1_SQRT_2)).ln_1p()
    } else if x > -20.0 {
        (0.5 * erfc(-x * FRAC_1_SQRT_2)).ln()
    } else {
        // Mills-ratio asymptotic series; truncation error below 1e-12 for x < -20.
        let z = 1.0 / (x * x);
        let series = 1.0 - z * (1.0 - 3.0 * z * (1.0 - 5.0 * z * (1.0 - 7.0 * z * (1.0 - 9.0 * z))));
        -0.5 * x * x - LN_SQRT_2PI - (-x).ln() + series.ln()
    }
}

/// `log(Φ(b) - Φ(a))` for `a < b`. Returns `-inf` when `a >= b`.
pub fn log_norm_interval(a: f64, b: f64) -> f64 {
    if a >= b {
        return f64::NEG_INFINITY;
    }
    if a > 0.0 {
        // Both in the upper half: Φ(b) - Φ(a) = Φ(-a) - Φ(-b).
        let hi = log_norm_cdf(-a);
        let lo = log_norm_cdf(-b);
        hi + log1m_exp(lo - hi)
    } else {
        let hi = log_norm_cdf(b);
        let lo = log_norm_cdf(a);
        hi + log1m_exp(lo - hi)
    }
}

/// `log(1 - e^x)` for `x <= 0`.
pub fn log1m_exp(x: f64) -> f64 {
    if x > -std::f64::consts::LN_2 {
        (-x.exp_m1()).ln()
    } else {
        (-x.exp()).ln_1p()
    }
}

/// Normal log density with mean `mu` and precision `prec`.
pub fn normal_log_pdf_prec(x: f64, mu: f64, prec: f64) -> f64 {
    let d = x - mu;
    0.5 * prec.ln() - LN_SQRT_2PI - 0.5 * prec * d * d
}
