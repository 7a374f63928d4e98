//! Four-category dyad likelihood.
//!
//! A dyad `(i, j)` with `i < j` is observed at each time as the pair
//! `(y_ij, y_ji)`. The category masses are proportional to
//! `1, e^θ1, e^θ2, e^(θ1+θ2+θ3)` for `(0,0), (1,0), (0,1), (1,1)`.

use crate::error::{Error, Result};
use crate::network::NetworkSeries;
use crate::special::log_sum_exp;

/// Joint outcome of the two directed links of a dyad `(i, j)`, `i < j`.
/// `C10` means `i → j` present and `j → i` absent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DyadCategory {
    C00,
    C10,
    C01,
    C11,
}

impl DyadCategory {
    pub const ALL: [DyadCategory; 4] = [Self::C00, Self::C10, Self::C01, Self::C11];

    pub fn from_links(y_ij: bool, y_ji: bool) -> Self {
        match (y_ij, y_ji) {
            (false, false) => Self::C00,
            (true, false) => Self::C10,
            (false, true) => Self::C01,
            (true, true) => Self::C11,
        }
    }

    pub fn y_ij(self) -> bool {
        matches!(self, Self::C10 | Self::C11)
    }

    pub fn y_ji(self) -> bool {
        matches!(self, Self::C01 | Self::C11)
    }

    /// Position in `[C00, C10, C01, C11]`.
    pub fn index(self) -> usize {
        self as usize
    }

    /// Binary response that coefficient `coef` multiplies in the exponent.
    pub fn response(self, coef: Coef) -> f64 {
        let hit = match coef {
            Coef::Forward => self.y_ij(),
            Coef::Backward => self.y_ji(),
            Coef::Mutual => self == Self::C11,
        };
        if hit {
            1.0
        } else {
            0.0
        }
    }
}

/// Which of the three dyad coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Coef {
    /// θ1: baseline log-odds of `i → j`.
    Forward,
    /// θ2: baseline log-odds of `j → i`.
    Backward,
    /// θ3: reciprocity.
    Mutual,
}

impl Coef {
    pub const ALL: [Coef; 3] = [Coef::Forward, Coef::Backward, Coef::Mutual];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(r: usize) -> Result<Self> {
        Self::ALL
            .get(r)
            .copied()
            .ok_or_else(|| Error::Index(format!("coefficient index {r} not in 0..3")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ThetaTriple {
    pub theta1: f64,
    pub theta2: f64,
    pub theta3: f64,
}

impl ThetaTriple {
    pub const ZERO: ThetaTriple = ThetaTriple { theta1: 0.0, theta2: 0.0, theta3: 0.0 };

    pub fn new(theta1: f64, theta2: f64, theta3: f64) -> Self {
        Self { theta1, theta2, theta3 }
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.theta1, self.theta2, self.theta3]
    }

    pub fn get(&self, coef: Coef) -> f64 {
        match coef {
            Coef::Forward => self.theta1,
            Coef::Backward => self.theta2,
            Coef::Mutual => self.theta3,
        }
    }

    pub fn set(&mut self, coef: Coef, value: f64) {
        match coef {
            Coef::Forward => self.theta1 = value,
            Coef::Backward => self.theta2 = value,
            Coef::Mutual => self.theta3 = value,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.theta1.is_finite() && self.theta2.is_finite() && self.theta3.is_finite()
    }

    fn check(&self) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::invalid(format!("non-finite theta {self:?}")))
        }
    }
}

/// Coefficient trajectory `(θ_0, θ_1, …, θ_T)`. The anchor `θ_0` is fixed at
/// construction; only `θ_1..θ_T` are mutable.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaPath {
    values: Vec<f64>,
}

impl ThetaPath {
    /// Constant path at `anchor` over `len` time points (length `len + 1`).
    pub fn constant(anchor: f64, len: usize) -> Self {
        Self { values: vec![anchor; len + 1] }
    }

    /// Builds a path from the full vector including the anchor.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::dim("a path needs at least the anchor value"));
        }
        Ok(Self { values })
    }

    pub fn anchor(&self) -> f64 {
        self.values[0]
    }

    /// Number of observed time points `T`.
    pub fn len(&self) -> usize {
        self.values.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `θ_1..θ_T`.
    pub fn free(&self) -> &[f64] {
        &self.values[1..]
    }

    pub fn free_mut(&mut self) -> &mut [f64] {
        &mut self.values[1..]
    }

    /// Value at time `t` in `0..=T`.
    pub fn at(&self, t: usize) -> f64 {
        self.values[t]
    }

    pub fn last(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// First differences `θ_t − θ_{t−1}` for `t = 1..T`.
    pub fn differences(&self) -> Vec<f64> {
        self.values.windows(2).map(|w| w[1] - w[0]).collect()
    }
}

/// The three coefficient paths of one dyad.
#[derive(Debug, Clone, PartialEq)]
pub struct DyadPaths {
    pub paths: [ThetaPath; 3],
}

impl DyadPaths {
    pub fn constant(theta0: ThetaTriple, len: usize) -> Self {
        Self {
            paths: [
                ThetaPath::constant(theta0.theta1, len),
                ThetaPath::constant(theta0.theta2, len),
                ThetaPath::constant(theta0.theta3, len),
            ],
        }
    }

    pub fn len(&self) -> usize {
        self.paths[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn at(&self, t: usize) -> ThetaTriple {
        ThetaTriple::new(self.paths[0].at(t), self.paths[1].at(t), self.paths[2].at(t))
    }

    pub fn last(&self) -> ThetaTriple {
        self.at(self.len())
    }

    pub fn anchor(&self) -> ThetaTriple {
        self.at(0)
    }

    pub fn path(&self, coef: Coef) -> &ThetaPath {
        &self.paths[coef.index()]
    }

    pub fn path_mut(&mut self, coef: Coef) -> &mut ThetaPath {
        &mut self.paths[coef.index()]
    }

    fn check_against(&self, obs: &DyadSeries) -> Result<()> {
        let len = self.len();
        if self.paths.iter().any(|p| p.len() != len) {
            return Err(Error::dim("the three paths differ in length"));
        }
        if len != obs.len() {
            return Err(Error::dim(format!(
                "paths cover {len} time points but the dyad has {} observations",
                obs.len()
            )));
        }
        Ok(())
    }
}

/// Observed categories of one dyad over `t = 1..T`.
#[derive(Debug, Clone, PartialEq)]
pub struct DyadSeries {
    pub i: usize,
    pub j: usize,
    pub categories: Vec<DyadCategory>,
}

impl DyadSeries {
    pub fn new(i: usize, j: usize, categories: Vec<DyadCategory>) -> Result<Self> {
        if i >= j {
            return Err(Error::invalid(format!("dyad requires i < j, got ({i}, {j})")));
        }
        if categories.is_empty() {
            return Err(Error::invalid("dyad series must have at least one time point"));
        }
        Ok(Self { i, j, categories })
    }

    pub fn len(&self) -> usize {
        self.categories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.categories.is_empty()
    }

    /// Category at time `t` in `1..=T`.
    pub fn at(&self, t: usize) -> DyadCategory {
        self.categories[t - 1]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CategoryProbs {
    pub p00: f64,
    pub p10: f64,
    pub p01: f64,
    pub p11: f64,
}

impl CategoryProbs {
    pub fn get(&self, cat: DyadCategory) -> f64 {
        self.to_array()[cat.index()]
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.p00, self.p10, self.p01, self.p11]
    }

    /// `Pr(y_ij = 1) = p10 + p11`.
    pub fn forward(&self) -> f64 {
        self.p10 + self.p11
    }

    /// `Pr(y_ji = 1) = p01 + p11`.
    pub fn backward(&self) -> f64 {
        self.p01 + self.p11
    }

    /// Mean of the response multiplied by `coef`.
    pub fn mean_response(&self, coef: Coef) -> f64 {
        match coef {
            Coef::Forward => self.forward(),
            Coef::Backward => self.backward(),
            Coef::Mutual => self.p11,
        }
    }
}

fn log_weights(theta: &ThetaTriple) -> [f64; 4] {
    [0.0, theta.theta1, theta.theta2, theta.theta1 + theta.theta2 + theta.theta3]
}

/// Unchecked category masses used by the hot loops.
pub(crate) fn masses(theta: &ThetaTriple) -> CategoryProbs {
    let w = log_weights(theta);
    let m = w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e = w.map(|x| (x - m).exp());
    let z: f64 = e.iter().sum();
    CategoryProbs { p00: e[0] / z, p10: e[1] / z, p01: e[2] / z, p11: e[3] / z }
}

pub fn category_probs(theta: ThetaTriple) -> Result<CategoryProbs> {
    theta.check()?;
    Ok(masses(&theta))
}

/// Marginal link probabilities `(Pr(i → j), Pr(j → i))`.
pub fn link_probs(theta: ThetaTriple) -> Result<(f64, f64)> {
    let p = category_probs(theta)?;
    Ok((p.forward(), p.backward()))
}

/// Log-likelihood contribution of a single time point.
pub(crate) fn point_loglik(theta: &ThetaTriple, cat: DyadCategory) -> f64 {
    let w = log_weights(theta);
    w[cat.index()] - log_sum_exp(&w)
}

/// Unpenalized dyad log-likelihood over `t = 1..T`.
pub fn dyad_loglik(paths: &DyadPaths, obs: &DyadSeries) -> Result<f64> {
    paths.check_against(obs)?;
    Ok(loglik_unchecked(paths, obs))
}

pub(crate) fn loglik_unchecked(paths: &DyadPaths, obs: &DyadSeries) -> f64 {
    (1..=obs.len()).map(|t| point_loglik(&paths.at(t), obs.at(t))).sum()
}

/// Gradient and information of one time point's log-likelihood in the
/// direction of `coef`: `g = y_r − E[y_r]`, `G = Var[y_r]`.
pub(crate) fn point_grad_info(theta: &ThetaTriple, cat: DyadCategory, coef: Coef) -> (f64, f64) {
    let q = masses(theta).mean_response(coef);
    (cat.response(coef) - q, q * (1.0 - q))
}

/// Gradient and information of the dyad log-likelihood with respect to
/// `θ_{t,coef}`, `1 ≤ t ≤ T`.
pub fn grad_info(paths: &DyadPaths, obs: &DyadSeries, t: usize, coef: Coef) -> Result<(f64, f64)> {
    paths.check_against(obs)?;
    if t == 0 || t > obs.len() {
        return Err(Error::Index(format!("time {t} outside 1..={}", obs.len())));
    }
    Ok(point_grad_info(&paths.at(t), obs.at(t), coef))
}

/// How the anchor `θ_0` is chosen from the data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitMode {
    /// Inverse multinomial logit of the pooled category proportions.
    #[default]
    TimeAverage,
    /// Logits of the pooled directed link rates; no reciprocity.
    LogitMargins,
    Zeros,
}

impl std::str::FromStr for InitMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "time-average" => Ok(Self::TimeAverage),
            "logit-margins" => Ok(Self::LogitMargins),
            "zeros" => Ok(Self::Zeros),
            other => Err(Error::invalid(format!("unknown init mode {other:?}"))),
        }
    }
}

/// Half a count added to each pooled cell.
pub const INIT_SMOOTHING: f64 = 0.5;

/// Inverse of [`category_probs`]: the unique θ reproducing `p`.
pub fn theta_from_probs(p: &CategoryProbs) -> ThetaTriple {
    ThetaTriple::new(
        (p.p10 / p.p00).ln(),
        (p.p01 / p.p00).ln(),
        (p.p11 * p.p00 / (p.p10 * p.p01)).ln(),
    )
}

/// Smoothed pooled category proportions over all dyads and times.
pub fn pooled_proportions(series: &NetworkSeries) -> CategoryProbs {
    let mut counts = [INIT_SMOOTHING; 4];
    for t in 1..=series.len() {
        for i in 0..series.n() {
            for j in (i + 1)..series.n() {
                let cat = DyadCategory::from_links(series.link(t, i, j), series.link(t, j, i));
                counts[cat.index()] += 1.0;
            }
        }
    }
    let total: f64 = counts.iter().sum();
    CategoryProbs {
        p00: counts[0] / total,
        p10: counts[1] / total,
        p01: counts[2] / total,
        p11: counts[3] / total,
    }
}

pub fn empirical_init(series: &NetworkSeries, mode: InitMode) -> ThetaTriple {
    match mode {
        InitMode::Zeros => ThetaTriple::ZERO,
        InitMode::TimeAverage => theta_from_probs(&pooled_proportions(series)),
        InitMode::LogitMargins => {
            let p = pooled_proportions(series);
            let logit = |q: f64| (q / (1.0 - q)).ln();
            ThetaTriple::new(logit(p.forward()), logit(p.backward()), 0.0)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn paths_from(thetas: &[ThetaTriple], anchor: ThetaTriple) -> DyadPaths {
        let mut p = DyadPaths::constant(anchor, thetas.len());
        for (t, th) in thetas.iter().enumerate() {
            for c in Coef::ALL {
                p.path_mut(c).free_mut()[t] = th.get(c);
            }
        }
        p
    }

    #[test]
    fn uniform_masses_at_zero() {
        let p = category_probs(ThetaTriple::ZERO).unwrap();
        for v in p.to_array() {
            assert_eq!(v, 0.25);
        }
    }

    #[test]
    fn closed_form_masses() {
        let p = category_probs(ThetaTriple::new(2f64.ln(), 3f64.ln(), 0.0)).unwrap();
        let want = [1.0 / 12.0, 2.0 / 12.0, 3.0 / 12.0, 6.0 / 12.0];
        for (a, b) in p.to_array().iter().zip(want) {
            assert!(close(*a, b, 1e-15));
        }
    }

    #[test]
    fn extreme_theta_does_not_overflow() {
        let p = category_probs(ThetaTriple::new(50.0, 0.0, 0.0)).unwrap();
        // masses: 1, e^50, 1, e^50 → p10 = p11 = 1/(2 + 2e^-50)
        assert!(close(p.p10, 0.5, 1e-15));
        assert!(p.to_array().iter().all(|v| v.is_finite()));
        let p = category_probs(ThetaTriple::new(700.0, 0.0, -700.0)).unwrap();
        assert!(close(p.p10, 1.0, 1e-15));
        assert!(p.to_array().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn non_finite_theta_is_rejected() {
        assert!(matches!(
            category_probs(ThetaTriple::new(f64::NAN, 0.0, 0.0)),
            Err(Error::InvalidArgument(_))
        ));
        assert!(link_probs(ThetaTriple::new(0.0, f64::INFINITY, 0.0)).is_err());
    }

    #[test]
    fn link_probs_examples() {
        assert_eq!(link_probs(ThetaTriple::ZERO).unwrap(), (0.5, 0.5));
        let (a, b) = link_probs(ThetaTriple::new(2f64.ln(), 3f64.ln(), 0.0)).unwrap();
        assert!(close(a, 8.0 / 12.0, 1e-15) && close(b, 9.0 / 12.0, 1e-15));
        let (a, b) = link_probs(ThetaTriple::new(1.3, -0.7, 0.0)).unwrap();
        assert!(close(a, crate::special::logistic(1.3), 1e-15));
        assert!(close(b, crate::special::logistic(-0.7), 1e-15));
    }

    #[test]
    fn loglik_examples() {
        let obs = DyadSeries::new(0, 1, vec![DyadCategory::C01]).unwrap();
        let p = DyadPaths::constant(ThetaTriple::ZERO, 1);
        assert!(close(dyad_loglik(&p, &obs).unwrap(), -(4f64.ln()), 1e-15));

        let obs = DyadSeries::new(0, 1, vec![DyadCategory::C11]).unwrap();
        let p = paths_from(&[ThetaTriple::new(2f64.ln(), 3f64.ln(), 0.0)], ThetaTriple::ZERO);
        assert!(close(dyad_loglik(&p, &obs).unwrap(), 0.5f64.ln(), 1e-15));
    }

    #[test]
    fn loglik_is_sum_of_category_log_masses() {
        let thetas = [
            ThetaTriple::new(0.3, -1.0, 0.5),
            ThetaTriple::new(-2.0, 0.1, 1.5),
            ThetaTriple::new(1.0, 1.0, -3.0),
        ];
        let cats = vec![DyadCategory::C10, DyadCategory::C11, DyadCategory::C00];
        let obs = DyadSeries::new(2, 5, cats.clone()).unwrap();
        let p = paths_from(&thetas, ThetaTriple::ZERO);
        let want: f64 = thetas
            .iter()
            .zip(&cats)
            .map(|(th, c)| category_probs(*th).unwrap().get(*c).ln())
            .sum();
        assert!(close(dyad_loglik(&p, &obs).unwrap(), want, 1e-13));
    }

    #[test]
    fn loglik_length_mismatch() {
        let obs = DyadSeries::new(0, 1, vec![DyadCategory::C00; 3]).unwrap();
        let p = DyadPaths::constant(ThetaTriple::ZERO, 2);
        assert!(matches!(dyad_loglik(&p, &obs), Err(Error::Dimension(_))));
    }

    #[test]
    fn grad_info_examples() {
        let obs = DyadSeries::new(0, 1, vec![DyadCategory::C10, DyadCategory::C00]).unwrap();
        let p = DyadPaths::constant(ThetaTriple::ZERO, 2);
        let (g, gg) = grad_info(&p, &obs, 1, Coef::Forward).unwrap();
        assert_eq!((g, gg), (0.5, 0.25));
        let (g, gg) = grad_info(&p, &obs, 2, Coef::Mutual).unwrap();
        assert_eq!((g, gg), (-0.25, 0.25 * 0.75));
        assert!(matches!(grad_info(&p, &obs, 0, Coef::Forward), Err(Error::Index(_))));
        assert!(matches!(grad_info(&p, &obs, 3, Coef::Forward), Err(Error::Index(_))));
    }

    #[test]
    fn init_zeros_and_inverse_logit() {
        let eq = CategoryProbs { p00: 0.25, p10: 0.25, p01: 0.25, p11: 0.25 };
        assert_eq!(theta_from_probs(&eq), ThetaTriple::ZERO);
        let th = theta_from_probs(&CategoryProbs { p00: 0.4, p10: 0.2, p01: 0.2, p11: 0.2 });
        assert!(close(th.theta1, 0.5f64.ln(), 1e-15));
        assert!(close(th.theta2, 0.5f64.ln(), 1e-15));
        assert!(close(th.theta3, 2f64.ln(), 1e-15));
    }

    #[test]
    fn reciprocity_sign_controls_dependence() {
        for &t3 in &[-1.2, 0.0, 0.8] {
            let p = category_probs(ThetaTriple::new(0.4, -0.3, t3)).unwrap();
            let lhs = p.p11;
            let rhs = p.forward() * p.backward();
            if t3 > 0.0 {
                assert!(lhs > rhs);
            } else if t3 < 0.0 {
                assert!(lhs < rhs);
            } else {
                assert!(close(lhs, rhs, 1e-12));
            }
        }
    }
}
