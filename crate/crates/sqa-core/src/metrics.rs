//! Classification evaluation: AUC via the tie-aware rank statistic, the ROC
//! curve, accuracy, and the confusion matrix.

use crate::error::{Result, SqaError};

/// One scored prediction: probability of the Good class plus ground truth.
#[derive(Debug, Clone, Copy)]
pub struct ScoredSample {
    pub score: f64,
    pub good: bool,
}

impl ScoredSample {
    pub fn new(score: f64, good: bool) -> Self {
        Self { score, good }
    }
}

#[derive(Debug, Clone)]
pub struct RocCurve {
    /// (false positive rate, true positive rate), from (0,0) to (1,1).
    pub points: Vec<(f64, f64)>,
    /// Trapezoidal area under the points.
    pub auc: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub true_good: usize,
    pub false_good: usize,
    pub true_bad: usize,
    pub false_bad: usize,
}

fn class_counts(samples: &[ScoredSample]) -> Result<(usize, usize)> {
    let n_good = samples.iter().filter(|s| s.good).count();
    let n_bad = samples.len() - n_good;
    if n_good == 0 || n_bad == 0 {
        return Err(SqaError::SingleClass);
    }
    Ok((n_good, n_bad))
}

/// Area under the ROC curve via the Mann-Whitney rank statistic: the
/// fraction of (good, bad) pairs ranked correctly, ties credited 0.5.
pub fn auc(samples: &[ScoredSample]) -> Result<f64> {
    let (n_good, n_bad) = class_counts(samples)?;
    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.sort_by(|&a, &b| samples[a].score.partial_cmp(&samples[b].score).unwrap());
    // average ranks over tie groups, 1-based
    let mut rank_sum_good = 0.0f64;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len()
            && samples[order[j + 1]].score == samples[order[i]].score
        {
            j += 1;
        }
        let avg_rank = (i + 1 + j + 1) as f64 / 2.0;
        for &idx in &order[i..=j] {
            if samples[idx].good {
                rank_sum_good += avg_rank;
            }
        }
        i = j + 1;
    }
    let u = rank_sum_good - (n_good * (n_good + 1)) as f64 / 2.0;
    Ok(u / (n_good as f64 * n_bad as f64))
}

/// ROC curve with a threshold at every distinct score; tie groups produce
/// diagonal segments, so the trapezoidal area equals [`auc`].
pub fn roc_curve(samples: &[ScoredSample]) -> Result<RocCurve> {
    let (n_good, n_bad) = class_counts(samples)?;
    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.sort_by(|&a, &b| samples[b].score.partial_cmp(&samples[a].score).unwrap());
    let mut points = vec![(0.0, 0.0)];
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut i = 0;
    while i < order.len() {
        let score = samples[order[i]].score;
        while i < order.len() && samples[order[i]].score == score {
            if samples[order[i]].good {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push((fp as f64 / n_bad as f64, tp as f64 / n_good as f64));
    }
    let area = points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0)
        .sum();
    Ok(RocCurve { points, auc: area })
}

/// Fraction of samples where thresholding the score reproduces the label.
pub fn accuracy(samples: &[ScoredSample], threshold: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(SqaError::EmptyInput);
    }
    if !(0.0..=1.0).contains(&threshold) {
        return Err(SqaError::RangeError(format!(
            "threshold {threshold} outside [0, 1]"
        )));
    }
    let correct = samples
        .iter()
        .filter(|s| (s.score >= threshold) == s.good)
        .count();
    Ok(correct as f64 / samples.len() as f64)
}

pub fn confusion_matrix(samples: &[ScoredSample], threshold: f64) -> Result<ConfusionMatrix> {
    if samples.is_empty() {
        return Err(SqaError::EmptyInput);
    }
    let mut m = ConfusionMatrix {
        true_good: 0,
        false_good: 0,
        true_bad: 0,
        false_bad: 0,
    };
    for s in samples {
        match (s.score >= threshold, s.good) {
            (true, true) => m.true_good += 1,
            (true, false) => m.false_good += 1,
            (false, false) => m.true_bad += 1,
            (false, true) => m.false_bad += 1,
        }
    }
    Ok(m)
}

/// O(n^2) pair-counting definition of AUC; the independent cross-check for
/// the rank-statistic implementation.
pub fn auc_pair_counting(samples: &[ScoredSample]) -> Result<f64> {
    let (n_good, n_bad) = class_counts(samples)?;
    let mut credit = 0.0f64;
    for g in samples.iter().filter(|s| s.good) {
        for b in samples.iter().filter(|s| !s.good) {
            if g.score > b.score {
                credit += 1.0;
            } else if g.score == b.score {
                credit += 0.5;
            }
        }
    }
    Ok(credit / (n_good as f64 * n_bad as f64))
}
