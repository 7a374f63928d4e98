//! ROC curves and the Mann–Whitney AUC.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    /// Items scoring at or above this value are called positive.
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    /// From `(0, 0)` at threshold `+∞` to `(1, 1)`.
    pub points: Vec<RocPoint>,
    pub auc: f64,
}

/// Step ROC over the distinct scores. The AUC is the concordance
/// probability with ties counted ½, accumulated in exact integer arithmetic.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<RocCurve> {
    if scores.len() != labels.len() {
        return Err(Error::dim(format!("{} scores for {} labels", scores.len(), labels.len())));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::invalid("scores contain NaN"));
    }
    let pos = labels.iter().filter(|&&l| l).count() as u64;
    let neg = labels.len() as u64 - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::UndefinedAuc(format!("{pos} positive and {neg} negative labels")));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut points = vec![RocPoint { threshold: f64::INFINITY, fpr: 0.0, tpr: 0.0 }];
    // twice the number of concordant pairs plus ties
    let mut twice: u128 = 0;
    let (mut tp, mut fp) = (0u64, 0u64);
    let mut k = 0;
    while k < order.len() {
        let s = scores[order[k]];
        let (mut gp, mut gn) = (0u64, 0u64);
        while k < order.len() && scores[order[k]] == s {
            if labels[order[k]] {
                gp += 1;
            } else {
                gn += 1;
            }
            k += 1;
        }
        twice += u128::from(gn) * (2 * u128::from(tp) + u128::from(gp));
        tp += gp;
        fp += gn;
        points.push(RocPoint { threshold: s, fpr: fp as f64 / neg as f64, tpr: tp as f64 / pos as f64 });
    }
    let auc = twice as f64 / (2 * u128::from(pos) * u128::from(neg)) as f64;
    Ok(RocCurve { points, auc })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_examples() {
        assert_eq!(roc_auc(&[0.9, 0.4, 0.7], &[true, false, false]).unwrap().auc, 1.0);
        assert_eq!(roc_auc(&[0.6, 0.4, 0.7], &[true, false, false]).unwrap().auc, 0.5);
        assert_eq!(roc_auc(&[0.5, 0.5], &[true, false]).unwrap().auc, 0.5);
        assert!(matches!(roc_auc(&[0.1, 0.2], &[true, true]), Err(Error::UndefinedAuc(_))));
        assert!(roc_auc(&[0.1], &[true, false]).is_err());
    }

    #[test]
    fn curve_spans_the_unit_square() {
        let c = roc_auc(&[0.3, 0.3, 0.8, 0.1, 0.5], &[true, false, true, false, false]).unwrap();
        let first = c.points[0];
        let last = *c.points.last().unwrap();
        assert_eq!((first.fpr, first.tpr), (0.0, 0.0));
        assert_eq!((last.fpr, last.tpr), (1.0, 1.0));
        for w in c.points.windows(2) {
            assert!(w[1].fpr >= w[0].fpr && w[1].tpr >= w[0].tpr && w[1].threshold < w[0].threshold);
        }
    }
}
