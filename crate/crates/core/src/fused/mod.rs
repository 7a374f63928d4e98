//! MAP estimation of fused-lasso dyad paths.
//!
//! Each dyad maximizes `V(Θ) − λ Σ_r ‖L Θ_r‖₁` independently, where `L` is the
//! `T × (T+1)` first-difference operator anchored at the fixed `θ_0`.

mod bregman;
mod kkt;
mod polish;

pub use bregman::{coordinate_update, fit_map_dyad, fit_map_dyad_from, BregmanConfig, DyadFit};
pub use kkt::{kkt_residual, kkt_residual_path};

use crate::error::{Error, Result};
use crate::model::{dyad_loglik, DyadPaths, DyadSeries, ThetaPath, ThetaTriple};
use crate::network::NetworkSeries;
use crate::workers::Workers;

/// Two consecutive values closer than this count as one block.
pub const FUSE_TOL: f64 = 1e-8;

/// `sgn(w) max(0, |w| − κ)` elementwise.
pub fn soft_threshold(w: &[f64], kappa: f64) -> Result<Vec<f64>> {
    if !(kappa >= 0.0) {
        return Err(Error::invalid(format!("threshold must be non-negative, got {kappa}")));
    }
    Ok(w.iter().map(|&x| shrink(x, kappa)).collect())
}

#[inline]
pub(crate) fn shrink(x: f64, kappa: f64) -> f64 {
    if x > kappa {
        x - kappa
    } else if x < -kappa {
        x + kappa
    } else {
        0.0
    }
}

/// `Σ_r ‖L Θ_r‖₁`, including the `θ_0 → θ_1` step.
pub fn total_variation(paths: &DyadPaths) -> f64 {
    paths.paths.iter().map(|p| p.differences().iter().map(|d| d.abs()).sum::<f64>()).sum()
}

pub fn penalized_objective(paths: &DyadPaths, obs: &DyadSeries, lambda: f64) -> Result<f64> {
    let v = dyad_loglik(paths, obs)?;
    if lambda == 0.0 {
        return Ok(v);
    }
    Ok(v - lambda * total_variation(paths))
}

/// Number of maximal constant runs in `θ_1..θ_T` of one path.
pub fn path_blocks(path: &ThetaPath) -> usize {
    let free = path.free();
    if free.is_empty() {
        return 0;
    }
    1 + free.windows(2).filter(|w| (w[1] - w[0]).abs() >= FUSE_TOL).count()
}

/// Degrees of freedom proxy: blocks summed over the three paths.
pub fn block_df(paths: &DyadPaths) -> usize {
    paths.paths.iter().map(path_blocks).sum()
}

/// `Σ_dyads [2 V(Θ̂) − K log(T − 1)]`; larger is better.
pub fn bic_score(fits: &[DyadFit], series: &NetworkSeries) -> Result<f64> {
    let dyads = series.dyads();
    if fits.len() != dyads.len() {
        return Err(Error::dim(format!("{} fits for {} dyads", fits.len(), dyads.len())));
    }
    if series.len() < 2 {
        return Err(Error::invalid("BIC needs at least two time points"));
    }
    let log_t = ((series.len() - 1) as f64).ln();
    let mut total = 0.0;
    for (fit, obs) in fits.iter().zip(&dyads) {
        total += 2.0 * dyad_loglik(&fit.paths, obs)? - block_df(&fit.paths) as f64 * log_t;
    }
    Ok(total)
}

/// Fits every dyad of `series` (canonical order) from the constant `theta0` start.
pub fn fit_all(
    series: &NetworkSeries,
    theta0: ThetaTriple,
    cfg: &BregmanConfig,
    workers: &Workers,
) -> Result<Vec<DyadFit>> {
    cfg.validate()?;
    let dyads = series.dyads();
    workers.map(&dyads, |_, obs| fit_map_dyad(obs, theta0, cfg)).into_iter().collect()
}

/// Fits every dyad starting from `starts` (one per dyad, same anchors).
pub fn fit_all_from(
    series: &NetworkSeries,
    starts: &[DyadPaths],
    cfg: &BregmanConfig,
    workers: &Workers,
) -> Result<Vec<DyadFit>> {
    cfg.validate()?;
    let dyads = series.dyads();
    if starts.len() != dyads.len() {
        return Err(Error::dim(format!("{} starts for {} dyads", starts.len(), dyads.len())));
    }
    workers
        .map(&dyads, |k, obs| fit_map_dyad_from(obs, &starts[k], cfg))
        .into_iter()
        .collect()
}
