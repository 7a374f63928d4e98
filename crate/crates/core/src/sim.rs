//! Synthetic dynamic networks: dyad-wise Laplace random walks on θ, with an
//! optional network-wide level shift at a break time.

use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{masses, Coef, DyadCategory, DyadPaths, ThetaTriple};
use crate::network::{dyad_pairs, NetworkSeries};
use crate::rng::{laplace, stream, Purpose};
use crate::workers::Workers;

#[derive(Debug, Clone, PartialEq)]
pub struct SimSpec {
    pub n: usize,
    pub len: usize,
    /// Rate of the Laplace increments (scale `1 / lambda_true`).
    pub lambda_true: f64,
    pub theta0: ThetaTriple,
    pub break_time: Option<usize>,
    pub theta_shift: Option<ThetaTriple>,
    pub seed: u64,
}

impl SimSpec {
    /// Dense random-walk network: 71 nodes, 201 snapshots, rate 12, θ0 = 0.
    pub fn sim1(seed: u64) -> Self {
        Self {
            n: 71,
            len: 201,
            lambda_true: 12.0,
            theta0: ThetaTriple::ZERO,
            break_time: None,
            theta_shift: None,
            seed,
        }
    }

    /// Sparse reciprocal network with a level shift at t = 85.
    pub fn sim2(seed: u64) -> Self {
        Self {
            n: 71,
            len: 201,
            lambda_true: SIM2_LAMBDA,
            theta0: ThetaTriple::new(-2.8, -2.8, 2.0),
            break_time: Some(85),
            theta_shift: Some(ThetaTriple::new(0.6, 0.6, 0.5)),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::invalid("simulation needs at least two nodes"));
        }
        if self.len < 1 {
            return Err(Error::invalid("simulation needs at least one snapshot"));
        }
        if !(self.lambda_true > 0.0 && self.lambda_true.is_finite()) {
            return Err(Error::invalid("lambda_true must be positive and finite"));
        }
        if !self.theta0.is_finite() {
            return Err(Error::invalid("theta0 must be finite"));
        }
        if let Some(b) = self.break_time {
            if b <= 1 || b > self.len {
                return Err(Error::invalid(format!("break_time {b} outside 2..={}", self.len)));
            }
        }
        if let Some(s) = self.theta_shift {
            if !s.is_finite() {
                return Err(Error::invalid("theta_shift must be finite"));
            }
        }
        Ok(())
    }
}

/// Increment rate for the `sim2` preset. Walks are kept tight so the level
/// shift dominates the dynamics.
pub const SIM2_LAMBDA: f64 = 30.0;

/// Generated network together with the generating θ paths (canonical dyad order).
#[derive(Debug, Clone)]
pub struct Simulated {
    pub series: NetworkSeries,
    pub truth: Vec<DyadPaths>,
}

fn simulate_dyad(spec: &SimSpec, index: usize) -> (DyadPaths, Vec<DyadCategory>) {
    let mut rng = stream(spec.seed, Purpose::Simulate, index as u64);
    let scale = 1.0 / spec.lambda_true;
    let mut paths = DyadPaths::constant(spec.theta0, spec.len);
    let mut cats = Vec::with_capacity(spec.len);
    let mut level = spec.theta0;
    for t in 1..=spec.len {
        if spec.break_time == Some(t) {
            if let Some(shift) = spec.theta_shift {
                for c in Coef::ALL {
                    level.set(c, level.get(c) + shift.get(c));
                }
            }
        }
        for c in Coef::ALL {
            level.set(c, level.get(c) + laplace(&mut rng, scale));
            paths.path_mut(c).free_mut()[t - 1] = level.get(c);
        }
        cats.push(sample_category(&mut rng, &level));
    }
    (paths, cats)
}

pub(crate) fn sample_category<R: Rng + ?Sized>(rng: &mut R, theta: &ThetaTriple) -> DyadCategory {
    let p = masses(theta).to_array();
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (k, pk) in p.iter().enumerate() {
        acc += pk;
        if u < acc {
            return DyadCategory::ALL[k];
        }
    }
    DyadCategory::C11
}

fn run(spec: &SimSpec, workers: &Workers) -> Result<Simulated> {
    spec.validate()?;
    let pairs = dyad_pairs(spec.n);
    let per_dyad = workers.map_range(pairs.len(), |k| simulate_dyad(spec, k));
    let mut series = NetworkSeries::empty(spec.n, spec.len);
    let mut truth = Vec::with_capacity(pairs.len());
    for (&(i, j), (paths, cats)) in pairs.iter().zip(per_dyad) {
        for (t, cat) in cats.iter().enumerate() {
            series.set_link(t + 1, i, j, cat.y_ij())?;
            series.set_link(t + 1, j, i, cat.y_ji())?;
        }
        truth.push(paths);
    }
    Ok(Simulated { series, truth })
}

/// Pure random walk; `spec.break_time` must be unset.
pub fn simulate_de_walk(spec: &SimSpec, workers: &Workers) -> Result<Simulated> {
    if spec.break_time.is_some() {
        return Err(Error::invalid("simulate_de_walk does not take a break_time"));
    }
    run(spec, workers)
}

/// Random walk with the level shift `theta_shift` (default zero) applied at
/// `break_time`, before that step's increment.
pub fn simulate_break(spec: &SimSpec, workers: &Workers) -> Result<Simulated> {
    if spec.break_time.is_none() {
        return Err(Error::invalid("simulate_break requires a break_time"));
    }
    run(spec, workers)
}

/// Dispatches on whether a break is configured.
pub fn simulate(spec: &SimSpec, workers: &Workers) -> Result<Simulated> {
    run(spec, workers)
}
