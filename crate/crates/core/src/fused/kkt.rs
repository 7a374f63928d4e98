//! Optimality certificate for the fused objective.
//!
//! Stationarity in `θ_{t,r}` reads `g_t = λ (s_t − s_{t+1})` with `s_{T+1} = 0`
//! and `s_t ∈ ∂|d_t|`: the sign of the difference when it is non-zero, and any
//! value in `[−1, 1]` when the difference vanishes. The residual is the
//! smallest `ε` for which some admissible `s` satisfies every row to within
//! `ε`, found by bisection on a backward interval propagation.

use crate::fused::FUSE_TOL;
use crate::model::{point_grad_info, Coef, DyadPaths, DyadSeries};

/// Max over coefficients and times of the distance from 0 to the
/// subdifferential of the negated penalized objective (sup norm).
pub fn kkt_residual(paths: &DyadPaths, obs: &DyadSeries, lambda: f64) -> f64 {
    Coef::ALL
        .iter()
        .map(|&c| {
            let grads: Vec<f64> =
                (1..=obs.len()).map(|t| point_grad_info(&paths.at(t), obs.at(t), c).0).collect();
            kkt_residual_path(&grads, &paths.path(c).differences(), lambda)
        })
        .fold(0.0, f64::max)
}

/// Residual for one path given its gradients `g_1..g_T` and differences
/// `d_1..d_T`.
pub fn kkt_residual_path(grads: &[f64], diffs: &[f64], lambda: f64) -> f64 {
    assert_eq!(grads.len(), diffs.len());
    let gmax = grads.iter().fold(0.0f64, |m, g| m.max(g.abs()));
    if lambda == 0.0 {
        return gmax;
    }
    let mut lo = 0.0;
    let mut hi = gmax + 2.0 * lambda;
    if feasible(grads, diffs, lambda, 0.0) {
        return 0.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if feasible(grads, diffs, lambda, mid) {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-15 * hi.max(1e-300) {
            break;
        }
    }
    hi
}

fn feasible(grads: &[f64], diffs: &[f64], lambda: f64, eps: f64) -> bool {
    // interval of s_{t+1} values consistent with rows t+1..T
    let (mut lo, mut hi) = (0.0f64, 0.0f64);
    for t in (0..grads.len()).rev() {
        let mut a = lo + (grads[t] - eps) / lambda;
        let mut b = hi + (grads[t] + eps) / lambda;
        let d = diffs[t];
        let (al, ah) = if d.abs() < FUSE_TOL { (-1.0, 1.0) } else { (d.signum(), d.signum()) };
        a = a.max(al);
        b = b.min(ah);
        if a > b {
            return false;
        }
        lo = a;
        hi = b;
    }
    true
}
