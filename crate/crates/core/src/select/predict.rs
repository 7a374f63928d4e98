//! One-step-ahead link probabilities.

use crate::error::{Error, Result};
use crate::mcmc::PosteriorDraws;
use crate::model::{masses, Coef, DyadPaths, ThetaTriple};
use crate::network::dyad_pairs;
use crate::rng::{laplace, stream, Purpose};
use crate::workers::Workers;

/// `n × n` link probabilities for the next snapshot; diagonal is 0.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionMatrix {
    n: usize,
    probs: Vec<f64>,
}

impl PredictionMatrix {
    /// Fills from `(p_ij, p_ji)` per dyad in canonical order.
    pub fn from_dyads(n: usize, per_dyad: &[(f64, f64)]) -> Result<Self> {
        let pairs = dyad_pairs(n);
        if per_dyad.len() != pairs.len() {
            return Err(Error::dim(format!("{} dyad predictions for {} dyads", per_dyad.len(), pairs.len())));
        }
        let mut probs = vec![0.0; n * n];
        for (&(i, j), &(pij, pji)) in pairs.iter().zip(per_dyad) {
            probs[i * n + j] = pij;
            probs[j * n + i] = pji;
        }
        Ok(Self { n, probs })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, from: usize, to: usize) -> f64 {
        self.probs[from * self.n + to]
    }

    /// Off-diagonal `(from, to, prob)` in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let n = self.n;
        (0..n).flat_map(move |i| (0..n).filter(move |&j| j != i).map(move |j| (i, j, self.probs[i * n + j])))
    }
}

/// Largest double below 1.
const BELOW_ONE: f64 = 1.0 - f64::EPSILON / 2.0;

/// Keeps a probability inside the open unit interval when rounding would
/// saturate it.
fn open_unit(p: f64) -> f64 {
    p.clamp(f64::MIN_POSITIVE, BELOW_ONE)
}

fn link_pair(theta: &ThetaTriple) -> (f64, f64) {
    let p = masses(theta);
    (open_unit(p.forward()), open_unit(p.backward()))
}

/// Plug-in prediction from the last fitted value of each dyad.
pub fn predict_map(paths: &[DyadPaths], n: usize) -> Result<PredictionMatrix> {
    let per: Vec<(f64, f64)> = paths.iter().map(|p| link_pair(&p.last())).collect();
    PredictionMatrix::from_dyads(n, &per)
}

/// Monte Carlo predictive: each retained draw steps `θ_T` forward with
/// Laplace noise of scale `1/λ` and the resulting link probabilities are
/// averaged over draws.
pub fn predict_mcmc(draws: &PosteriorDraws, seed: u64, workers: &Workers) -> Result<PredictionMatrix> {
    let b = draws.draws();
    if b == 0 {
        return Err(Error::invalid("no posterior draws"));
    }
    let per = workers.map_range(draws.num_dyads(), |k| {
        let mut rng = stream(seed, Purpose::Predict, k as u64);
        let (mut sij, mut sji) = (0.0, 0.0);
        for d in 0..b {
            let scale = 1.0 / draws.lambda[d];
            let mut th = draws.last_theta(d, k);
            for c in Coef::ALL {
                th.set(c, th.get(c) + laplace(&mut rng, scale));
            }
            let (pij, pji) = link_pair(&th);
            sij += pij;
            sji += pji;
        }
        (open_unit(sij / b as f64), open_unit(sji / b as f64))
    });
    PredictionMatrix::from_dyads(draws.n, &per)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_prediction_examples() {
        let paths = vec![DyadPaths::constant(ThetaTriple::ZERO, 2); 3];
        let m = predict_map(&paths, 3).unwrap();
        for (_, _, p) in m.entries() {
            assert_eq!(p, 0.5);
        }
        assert_eq!(m.entries().count(), 6);
        let th = ThetaTriple::new(2f64.ln(), 3f64.ln(), 0.0);
        let m = predict_map(&[DyadPaths::constant(th, 1)], 2).unwrap();
        assert!((m.get(0, 1) - 2.0 / 3.0).abs() < 1e-15);
        assert!((m.get(1, 0) - 0.75).abs() < 1e-15);
        assert_eq!(m.get(0, 0), 0.0);
        assert!(predict_map(&paths, 4).is_err());
    }

    #[test]
    fn saturated_logits_stay_inside_the_unit_interval() {
        for th in [ThetaTriple::new(40.0, -40.0, 0.0), ThetaTriple::new(-800.0, 800.0, -5.0)] {
            let m = predict_map(&[DyadPaths::constant(th, 1)], 2).unwrap();
            for (_, _, p) in m.entries() {
                assert!(p > 0.0 && p < 1.0, "{p}");
            }
        }
    }
}
