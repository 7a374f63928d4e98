//! Link prediction, ROC evaluation, penalty selection and change points.

mod predict;
mod roc;
mod tune;

pub use predict::{predict_map, predict_mcmc, PredictionMatrix};
pub use roc::{roc_auc, RocCurve, RocPoint};
pub use tune::{
    bic_select_lambda, cv_select_lambda, fit_grid, snapshot_auc, BicSelection, CvRow, CvSelection, LambdaGrid,
};

use crate::error::{Error, Result};
use crate::fused::FUSE_TOL;
use crate::model::DyadPaths;

/// Fraction of dyads with any coefficient changing between `t−1` and `t`.
/// Element `k` is for `t = k + 2`.
pub fn changepoint_series(paths: &[DyadPaths]) -> Result<Vec<f64>> {
    let Some(first) = paths.first() else {
        return Err(Error::invalid("no dyad paths"));
    };
    let len = first.len();
    if paths.iter().any(|p| p.len() != len) {
        return Err(Error::dim("dyad paths differ in length"));
    }
    let mut counts = vec![0usize; len.saturating_sub(1)];
    for p in paths {
        for (t, c) in (2..=len).zip(counts.iter_mut()) {
            let (a, b) = (p.at(t - 1), p.at(t));
            let moved = (a.theta1 - b.theta1).abs() > FUSE_TOL
                || (a.theta2 - b.theta2).abs() > FUSE_TOL
                || (a.theta3 - b.theta3).abs() > FUSE_TOL;
            if moved {
                *c += 1;
            }
        }
    }
    Ok(counts.into_iter().map(|c| c as f64 / paths.len() as f64).collect())
}
