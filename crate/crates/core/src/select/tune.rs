//! Penalty selection over a grid, by held-out AUC or by BIC.

use crate::error::{Error, Result};
use crate::fused::{bic_score, fit_all_from, BregmanConfig, DyadFit};
use crate::model::{empirical_init, DyadPaths, InitMode};
use crate::network::NetworkSeries;
use crate::select::predict::{predict_map, PredictionMatrix};
use crate::select::roc::roc_auc;
use crate::workers::Workers;

/// Strictly increasing positive penalties.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaGrid {
    values: Vec<f64>,
}

impl LambdaGrid {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("lambda grid is empty"));
        }
        if values.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::invalid("lambda grid values must be positive and finite"));
        }
        if values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("lambda grid must be strictly increasing"));
        }
        Ok(Self { values })
    }

    /// `count` evenly spaced values from `lo` to `hi` inclusive.
    pub fn linspace(lo: f64, hi: f64, count: usize) -> Result<Self> {
        match count {
            0 => Err(Error::invalid("grid count must be at least 1")),
            1 if lo == hi => Self::new(vec![lo]),
            1 => Err(Error::invalid("a one-point grid needs lo == hi")),
            _ => {
                let step = (hi - lo) / (count - 1) as f64;
                let mut v: Vec<f64> = (0..count).map(|k| lo + step * k as f64).collect();
                v[count - 1] = hi;
                Self::new(v)
            }
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

impl std::str::FromStr for LambdaGrid {
    type Err = Error;

    /// `lo:hi:count`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::invalid(format!("grid {s:?} is not lo:hi:count")));
        }
        let num = |x: &str| x.trim().parse::<f64>().map_err(|_| Error::invalid(format!("bad grid bound {x:?}")));
        let count = parts[2].trim().parse::<usize>().map_err(|_| Error::invalid(format!("bad grid count {:?}", parts[2])))?;
        Self::linspace(num(parts[0])?, num(parts[1])?, count)
    }
}

/// Index of the largest score; ties go to the earliest (smallest λ).
fn argmax(scores: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (k, &s) in scores.iter().enumerate() {
        if s.is_nan() {
            continue;
        }
        if best.is_none_or(|b| s > scores[b]) {
            best = Some(k);
        }
    }
    best
}

/// Fits the whole grid in ascending order, each λ warm-started from the previous fit.
pub fn fit_grid(
    series: &NetworkSeries,
    grid: &LambdaGrid,
    base: &BregmanConfig,
    init: InitMode,
    workers: &Workers,
    mut visit: impl FnMut(usize, &[DyadFit]) -> Result<()>,
) -> Result<()> {
    let theta0 = empirical_init(series, init);
    let mut starts = vec![DyadPaths::constant(theta0, series.len()); series.num_dyads()];
    for (k, &lambda) in grid.values().iter().enumerate() {
        let cfg = BregmanConfig { lambda, ..*base };
        let fits = fit_all_from(series, &starts, &cfg, workers)?;
        visit(k, &fits)?;
        starts = fits.into_iter().map(|f| f.paths).collect();
    }
    Ok(())
}

/// AUC of a prediction against the observed snapshot `t`, pooling all
/// off-diagonal cells.
pub fn snapshot_auc(pred: &PredictionMatrix, series: &NetworkSeries, t: usize) -> Result<f64> {
    let cells = series.off_diagonal(t);
    let scores: Vec<f64> = cells.iter().map(|&(i, j, _)| pred.get(i, j)).collect();
    let labels: Vec<bool> = cells.iter().map(|c| c.2).collect();
    Ok(roc_auc(&scores, &labels)?.auc)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvRow {
    pub lambda: f64,
    pub mean_auc: f64,
    /// AUC per used fold, in fold order.
    pub fold_auc: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvSelection {
    pub lambda_star: f64,
    pub table: Vec<CvRow>,
    /// Predicted times that were scored.
    pub folds: Vec<usize>,
    /// Predicted times skipped because the observed network was all zeros or all ones.
    pub skipped: Vec<usize>,
}

/// For `t = T−m, …, T−1`: fit on `1..t` over the grid, predict `t+1`, score
/// the AUC. Returns the λ with the best mean AUC.
pub fn cv_select_lambda(
    series: &NetworkSeries,
    grid: &LambdaGrid,
    cal_window: usize,
    base: &BregmanConfig,
    init: InitMode,
    workers: &Workers,
) -> Result<CvSelection> {
    let len = series.len();
    if cal_window < 1 || len < cal_window + 2 {
        return Err(Error::invalid(format!("calibration window {cal_window} needs 1 ≤ m ≤ T − 2 (T = {len})")));
    }
    let mut folds = Vec::new();
    let mut skipped = Vec::new();
    let mut fold_auc: Vec<Vec<f64>> = vec![Vec::new(); grid.len()];
    for t in len - cal_window..len {
        let links = series.links_at(t + 1);
        if links == 0 || links == series.n() * (series.n() - 1) {
            skipped.push(t + 1);
            continue;
        }
        let train = series.truncate(t)?;
        fit_grid(&train, grid, base, init, workers, |k, fits| {
            let paths: Vec<DyadPaths> = fits.iter().map(|f| f.paths.clone()).collect();
            let pred = predict_map(&paths, series.n())?;
            fold_auc[k].push(snapshot_auc(&pred, series, t + 1)?);
            Ok(())
        })?;
        folds.push(t + 1);
    }
    if folds.is_empty() {
        return Err(Error::UndefinedAuc("every held-out network is all zeros or all ones".into()));
    }
    let table: Vec<CvRow> = grid
        .values()
        .iter()
        .zip(fold_auc)
        .map(|(&lambda, aucs)| CvRow { lambda, mean_auc: aucs.iter().sum::<f64>() / aucs.len() as f64, fold_auc: aucs })
        .collect();
    let means: Vec<f64> = table.iter().map(|r| r.mean_auc).collect();
    let best = argmax(&means).ok_or_else(|| Error::Numerical("no finite mean AUC".into()))?;
    Ok(CvSelection { lambda_star: grid.values()[best], table, folds, skipped })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BicSelection {
    pub lambda_star: f64,
    /// `(λ, BIC)` in grid order.
    pub table: Vec<(f64, f64)>,
}

/// Fits the full series at every grid value and maximizes the BIC.
pub fn bic_select_lambda(
    series: &NetworkSeries,
    grid: &LambdaGrid,
    base: &BregmanConfig,
    init: InitMode,
    workers: &Workers,
) -> Result<BicSelection> {
    let mut table = Vec::with_capacity(grid.len());
    fit_grid(series, grid, base, init, workers, |k, fits| {
        table.push((grid.values()[k], bic_score(fits, series)?));
        Ok(())
    })?;
    let scores: Vec<f64> = table.iter().map(|r| r.1).collect();
    let best = argmax(&scores).ok_or_else(|| Error::Numerical("no finite BIC".into()))?;
    Ok(BicSelection { lambda_star: grid.values()[best], table })
}
