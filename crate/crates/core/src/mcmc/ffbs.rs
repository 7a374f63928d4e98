//! Forward filtering, backward sampling for the local-level model
//! `y*_t = θ_t + N(0, 1/ω_t)`, `θ_t = θ_{t−1} + N(0, τ²_t)` with known `θ_0`.

use rand::Rng;
use rand_distr::StandardNormal;

/// Joint draw of `θ_1..θ_T` from the Gaussian posterior.
pub fn ffbs_path<R: Rng + ?Sized>(anchor: f64, ystar: &[f64], omega: &[f64], tau2: &[f64], rng: &mut R) -> Vec<f64> {
    let len = ystar.len();
    debug_assert!(omega.len() == len && tau2.len() == len);
    let mut m = vec![0.0; len];
    let mut c = vec![0.0; len];
    let mut r = vec![0.0; len];
    let (mut m_prev, mut c_prev) = (anchor, 0.0);
    for t in 0..len {
        r[t] = c_prev + tau2[t];
        c[t] = 1.0 / (1.0 / r[t] + omega[t]);
        m[t] = c[t] * (m_prev / r[t] + omega[t] * ystar[t]);
        m_prev = m[t];
        c_prev = c[t];
    }
    let mut theta = vec![0.0; len];
    let z: f64 = rng.sample(StandardNormal);
    theta[len - 1] = m[len - 1] + c[len - 1].sqrt() * z;
    for t in (0..len - 1).rev() {
        let gain = c[t] / r[t + 1];
        let mean = m[t] + gain * (theta[t + 1] - m[t]);
        let var = c[t] * tau2[t + 1] / r[t + 1];
        let z: f64 = rng.sample(StandardNormal);
        theta[t] = mean + var.sqrt() * z;
    }
    theta
}
