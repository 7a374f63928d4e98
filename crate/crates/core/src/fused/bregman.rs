//! Split Bregman iteration with componentwise second-order Θ updates.
//!
//! The constraint `L Θ_r = b_r` splits the penalty off the likelihood. One
//! outer iteration per coefficient path is
//!
//! 1. coordinate sweeps over `θ_1..θ_T` maximizing the quadratic surrogate of
//!    `V(Θ) − ⟨v, LΘ − b⟩ − μ/2 ‖LΘ − b‖²`,
//! 2. `b ← shrink(LΘ + v/μ, λ/μ)`,
//! 3. `v ← v + δ (LΘ − b)`.

use crate::error::{Error, Result};
use crate::fused::{kkt_residual, polish, shrink};
use crate::model::{point_grad_info, Coef, DyadPaths, DyadSeries, ThetaTriple};

/// Bregman iterations between refinement attempts.
const CERTIFY_EVERY: usize = 50;
/// KKT residual at which a refined solution ends the iterations.
pub const CERTIFIED_KKT: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BregmanConfig {
    pub lambda: f64,
    /// Augmentation weight μ.
    pub mu: f64,
    /// Dual step δ, `0 < δ ≤ μ`.
    pub delta: f64,
    /// Relative-change stopping threshold.
    pub tol: f64,
    pub max_iter: usize,
    /// Coordinate sweeps per Θ subproblem.
    pub inner_sweeps: usize,
    /// Refine the block pattern with exact Newton solves. The refinement is
    /// also tried every few iterations and ends the run once it certifies
    /// the optimum.
    pub polish: bool,
}

impl Default for BregmanConfig {
    fn default() -> Self {
        Self { lambda: 1.0, mu: 1.0, delta: 1.0, tol: 1e-5, max_iter: 2000, inner_sweeps: 1, polish: true }
    }
}

impl BregmanConfig {
    pub fn with_lambda(lambda: f64) -> Self {
        Self { lambda, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::invalid(format!("lambda must be finite and >= 0, got {}", self.lambda)));
        }
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(Error::invalid(format!("mu must be positive, got {}", self.mu)));
        }
        if !(self.delta > 0.0 && self.delta <= self.mu) {
            return Err(Error::invalid(format!("need 0 < delta <= mu, got delta = {}", self.delta)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::invalid("tol must be positive"));
        }
        if self.max_iter == 0 || self.inner_sweeps == 0 {
            return Err(Error::invalid("max_iter and inner_sweeps must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DyadFit {
    pub paths: DyadPaths,
    /// Split variables `b_r`, one entry per difference row `t = 1..T`.
    pub split: [Vec<f64>; 3],
    /// Dual variables `v_r`.
    pub dual: [Vec<f64>; 3],
    pub iterations: usize,
    /// The stopping rule was met or the refinement certified the optimum.
    pub converged: bool,
    pub final_rel_change: f64,
    /// `max_r ‖L Θ_r − b_r‖_∞` at the last Bregman iterate; zero when the
    /// refinement certified the optimum.
    pub primal_residual: f64,
    pub kkt_residual: f64,
    /// Whether the returned paths come from the active-set refinement.
    pub polished: bool,
}

fn check_time(obs: &DyadSeries, t: usize) -> Result<()> {
    if t == 0 || t > obs.len() {
        return Err(Error::Index(format!("time {t} outside 1..={}", obs.len())));
    }
    Ok(())
}

/// Stationary point of the quadratic surrogate of the Θ subproblem in
/// coordinate `(t, coef)`; the paths are not modified.
///
/// Interior `t < T` involves the differences `d_t` and `d_{t+1}`:
/// `θ_t ← (G + 2μ)⁻¹ [G θ̂_t + g_t − (v_t − v_{t+1}) + μ(θ_{t−1} + θ_{t+1} + b_t − b_{t+1})]`.
/// At `t = T` only `d_T` is involved:
/// `θ_T ← (G + μ)⁻¹ [G θ̂_T + g_T − v_T + μ(θ_{T−1} + b_T)]`.
pub fn coordinate_update(
    paths: &DyadPaths,
    obs: &DyadSeries,
    split: &[f64],
    dual: &[f64],
    cfg: &BregmanConfig,
    t: usize,
    coef: Coef,
) -> Result<f64> {
    check_time(obs, t)?;
    let len = obs.len();
    if paths.len() != len || split.len() != len || dual.len() != len {
        return Err(Error::dim("paths, split and dual must all cover T time points"));
    }
    Ok(update_value(paths.path(coef).values(), &paths.at(t), obs, split, dual, cfg.mu, t, coef))
}

#[allow(clippy::too_many_arguments)]
#[inline]
fn update_value(
    values: &[f64],
    theta_t: &ThetaTriple,
    obs: &DyadSeries,
    split: &[f64],
    dual: &[f64],
    mu: f64,
    t: usize,
    coef: Coef,
) -> f64 {
    let len = obs.len();
    let (g, info) = point_grad_info(theta_t, obs.at(t), coef);
    let current = values[t];
    // rows are 1-based in the math, 0-based in the vectors
    let (v_t, b_t) = (dual[t - 1], split[t - 1]);
    if t < len {
        let (v_next, b_next) = (dual[t], split[t]);
        (info * current + g - (v_t - v_next) + mu * (values[t - 1] + values[t + 1] + b_t - b_next))
            / (info + 2.0 * mu)
    } else {
        (info * current + g - v_t + mu * (values[t - 1] + b_t)) / (info + mu)
    }
}

/// Fits one dyad from the constant path at `theta0`.
pub fn fit_map_dyad(obs: &DyadSeries, theta0: ThetaTriple, cfg: &BregmanConfig) -> Result<DyadFit> {
    fit_map_dyad_from(obs, &DyadPaths::constant(theta0, obs.len()), cfg)
}

/// Fits one dyad starting from `start` with `b = L Θ`, `v = 0`.
pub fn fit_map_dyad_from(obs: &DyadSeries, start: &DyadPaths, cfg: &BregmanConfig) -> Result<DyadFit> {
    cfg.validate()?;
    if obs.is_empty() {
        return Err(Error::invalid("dyad series is empty"));
    }
    if start.len() != obs.len() || start.paths.iter().any(|p| p.len() != obs.len()) {
        return Err(Error::dim("start paths do not match the series length"));
    }
    if !start.paths.iter().all(|p| p.values().iter().all(|v| v.is_finite())) {
        return Err(Error::invalid("start paths must be finite"));
    }
    let len = obs.len();
    let mut paths = start.clone();
    let mut split: [Vec<f64>; 3] = Coef::ALL.map(|c| paths.path(c).differences());
    let mut dual: [Vec<f64>; 3] = [vec![0.0; len], vec![0.0; len], vec![0.0; len]];
    let kappa = cfg.lambda / cfg.mu;

    let mut iterations = 0;
    let mut converged = false;
    let mut rel_change = f64::INFINITY;
    let mut primal = f64::INFINITY;
    let mut previous: Vec<f64> = Vec::with_capacity(3 * len);
    let mut certified: Option<(DyadPaths, f64)> = None;

    while iterations < cfg.max_iter {
        iterations += 1;
        previous.clear();
        for p in &paths.paths {
            previous.extend_from_slice(p.free());
        }
        primal = 0.0;
        for coef in Coef::ALL {
            let r = coef.index();
            for _ in 0..cfg.inner_sweeps {
                for t in 1..=len {
                    let theta_t = paths.at(t);
                    let value = update_value(
                        paths.path(coef).values(),
                        &theta_t,
                        obs,
                        &split[r],
                        &dual[r],
                        cfg.mu,
                        t,
                        coef,
                    );
                    paths.path_mut(coef).free_mut()[t - 1] = value;
                }
            }
            let values = paths.path(coef).values();
            for t in 1..=len {
                let d = values[t] - values[t - 1];
                let b = shrink(d + dual[r][t - 1] / cfg.mu, kappa);
                split[r][t - 1] = b;
                dual[r][t - 1] += cfg.delta * (d - b);
                primal = f64::max(primal, (d - b).abs());
            }
        }
        let mut diff2 = 0.0;
        let mut norm2 = 0.0;
        let mut k = 0;
        for p in &paths.paths {
            for &x in p.free() {
                let d = x - previous[k];
                diff2 += d * d;
                norm2 += previous[k] * previous[k];
                k += 1;
            }
        }
        rel_change = diff2.sqrt() / norm2.sqrt().max(1.0);
        if !rel_change.is_finite() {
            return Err(Error::Numerical(format!(
                "Bregman iterate diverged at iteration {iterations} for dyad ({}, {})",
                obs.i, obs.j
            )));
        }
        if rel_change < cfg.tol && primal <= cfg.tol {
            converged = true;
            break;
        }
        if cfg.polish && cfg.lambda > 0.0 && iterations % CERTIFY_EVERY == 0 {
            if let Some(refined) = polish::refine(obs, &paths, &split, cfg.lambda) {
                let refined_kkt = kkt_residual(&refined, obs, cfg.lambda);
                if refined_kkt <= CERTIFIED_KKT {
                    certified = Some((refined, refined_kkt));
                    converged = true;
                    break;
                }
            }
        }
    }

    if let Some((refined, kkt)) = certified {
        // the split variables of the certified point are its exact differences
        return Ok(DyadFit {
            split: Coef::ALL.map(|c| refined.path(c).differences()),
            paths: refined,
            dual,
            iterations,
            converged,
            final_rel_change: rel_change,
            primal_residual: 0.0,
            kkt_residual: kkt,
            polished: true,
        });
    }
    let mut kkt = kkt_residual(&paths, obs, cfg.lambda);
    let mut polished = false;
    if cfg.polish && cfg.lambda > 0.0 {
        if let Some(refined) = polish::refine(obs, &paths, &split, cfg.lambda) {
            let refined_kkt = kkt_residual(&refined, obs, cfg.lambda);
            if refined_kkt <= kkt {
                paths = refined;
                kkt = refined_kkt;
                polished = true;
            }
        }
    }

    Ok(DyadFit {
        paths,
        split,
        dual,
        iterations,
        converged,
        final_rel_change: rel_change,
        primal_residual: primal,
        kkt_residual: kkt,
        polished,
    })
}
