//! Binary classification metrics at an operating threshold, and ROC/AUC.
//!
//! Scores are the predicted probability of the positive class. A sample is
//! predicted positive iff `score >= threshold`.

use alloc::vec::Vec;
use core::cmp::Ordering;

use thiserror::Error;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub true_pos: usize,
    pub false_pos: usize,
    pub true_neg: usize,
    pub false_neg: usize,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.true_pos + self.false_pos + self.true_neg + self.false_neg
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum MetricsError {
    #[error("no scored samples")]
    Empty,
    #[error("need at least one positive and one negative sample")]
    SingleClass,
    #[error("score {0} is not finite")]
    NonFiniteScore(f64),
}

pub fn confusion_at_threshold(
    scored: &[(f64, usize)],
    threshold: f64,
    positive_class: usize,
) -> ConfusionMatrix {
    let mut cm = ConfusionMatrix::default();
    for &(score, label) in scored {
        let predicted = score >= threshold;
        match (predicted, label == positive_class) {
            (true, true) => cm.true_pos += 1,
            (true, false) => cm.false_pos += 1,
            (false, false) => cm.true_neg += 1,
            (false, true) => cm.false_neg += 1,
        }
    }
    cm
}

/// Derived rates; `None` where the denominator is zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rates {
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub accuracy: Option<f64>,
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn sens_spec_acc(cm: &ConfusionMatrix) -> Rates {
    Rates {
        sensitivity: ratio(cm.true_pos, cm.true_pos + cm.false_neg),
        specificity: ratio(cm.true_neg, cm.true_neg + cm.false_pos),
        accuracy: ratio(cm.true_pos + cm.true_neg, cm.total()),
    }
}

/// Threshold sweep from above the top score down through every distinct score.
#[derive(Clone, Debug, PartialEq)]
pub struct RocCurve {
    /// `(false_positive_rate, true_positive_rate)`, from (0, 0) to (1, 1).
    pub points: Vec<(f64, f64)>,
    /// Mann-Whitney estimate, ties counted one half.
    pub auc: f64,
}

fn check_scores(
    scored: &[(f64, usize)],
    positive_class: usize,
) -> Result<(usize, usize), MetricsError> {
    if scored.is_empty() {
        return Err(MetricsError::Empty);
    }
    if let Some(&(s, _)) = scored.iter().find(|(s, _)| !s.is_finite()) {
        return Err(MetricsError::NonFiniteScore(s));
    }
    let pos = scored.iter().filter(|(_, l)| *l == positive_class).count();
    let neg = scored.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(MetricsError::SingleClass);
    }
    Ok((pos, neg))
}

/// Rank-sum AUC: `P(score_pos > score_neg) + P(tie) / 2`.
pub fn mann_whitney_auc(
    scored: &[(f64, usize)],
    positive_class: usize,
) -> Result<f64, MetricsError> {
    let (pos, neg) = check_scores(scored, positive_class)?;
    let mut sorted: Vec<(f64, bool)> = scored
        .iter()
        .map(|&(s, l)| (s, l == positive_class))
        .collect();
    sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal));

    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j < sorted.len() && sorted[j].0 == sorted[i].0 {
            j += 1;
        }
        // ranks i+1 ..= j share their mean
        let mean_rank = (i + 1 + j) as f64 / 2.0;
        rank_sum += mean_rank * sorted[i..j].iter().filter(|s| s.1).count() as f64;
        i = j;
    }
    let (p, n) = (pos as f64, neg as f64);
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * n))
}

/// Area under a polyline by the trapezoid rule.
pub fn trapezoid_area(points: &[(f64, f64)]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0)
        .sum()
}

pub fn roc_auc(scored: &[(f64, usize)], positive_class: usize) -> Result<RocCurve, MetricsError> {
    let (pos, neg) = check_scores(scored, positive_class)?;
    let mut sorted: Vec<(f64, bool)> = scored
        .iter()
        .map(|&(s, l)| (s, l == positive_class))
        .collect();
    sorted.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(Ordering::Equal));

    let mut points = Vec::with_capacity(sorted.len() + 1);
    points.push((0.0, 0.0));
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < sorted.len() {
        let s = sorted[i].0;
        while i < sorted.len() && sorted[i].0 == s {
            if sorted[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push((fp as f64 / neg as f64, tp as f64 / pos as f64));
    }
    Ok(RocCurve {
        points,
        auc: mann_whitney_auc(scored, positive_class)?,
    })
}

/// Fraction of rows whose arg-max matches the label.
pub fn argmax_accuracy(distributions: &[Vec<f64>], labels: &[usize]) -> Option<f64> {
    if distributions.is_empty() || distributions.len() != labels.len() {
        return None;
    }
    let correct = distributions
        .iter()
        .zip(labels)
        .filter(|(row, &label)| argmax(row) == Some(label))
        .count();
    Some(correct as f64 / labels.len() as f64)
}

pub fn argmax(row: &[f64]) -> Option<usize> {
    row.iter()
        .enumerate()
        .fold(None, |best: Option<(usize, f64)>, (i, &v)| match best {
            Some((_, b)) if b >= v => best,
            _ => Some((i, v)),
        })
        .map(|(i, _)| i)
}
