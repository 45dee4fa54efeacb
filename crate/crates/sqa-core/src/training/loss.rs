//! Cross-entropy loss over logits with max-subtraction stabilization.

use crate::error::{Result, SqaError};
use crate::nn::scalar::Scalar;

/// Mean negative log softmax likelihood over the batch. Returns the loss
/// and its gradient with respect to the logits, `(softmax - onehot) / B`.
pub fn cross_entropy_loss<F: Scalar>(
    logits: &[F],
    labels: &[usize],
    num_classes: usize,
) -> Result<(F, Vec<F>)> {
    let batch = labels.len();
    if batch == 0 || logits.len() != batch * num_classes {
        return Err(SqaError::ShapeMismatch(format!(
            "cross_entropy: {} logits for {} labels x {} classes",
            logits.len(),
            batch,
            num_classes
        )));
    }
    let inv_b = F::from_f64(1.0 / batch as f64);
    let mut loss = F::zero();
    let mut grad = vec![F::zero(); logits.len()];
    for (r, &label) in labels.iter().enumerate() {
        if label >= num_classes {
            return Err(SqaError::RangeError(format!(
                "label {label} out of range for {num_classes} classes"
            )));
        }
        let row = &logits[r * num_classes..(r + 1) * num_classes];
        let max = row.iter().copied().fold(F::neg_infinity(), F::max);
        let mut denom = F::zero();
        for &z in row {
            denom += (z - max).exp();
        }
        loss += denom.ln() - (row[label] - max);
        let g = &mut grad[r * num_classes..(r + 1) * num_classes];
        for (c, gi) in g.iter_mut().enumerate() {
            let p = (row[c] - max).exp() / denom;
            let onehot = if c == label { F::one() } else { F::zero() };
            *gi = (p - onehot) * inv_b;
        }
    }
    loss *= inv_b;
    if !loss.is_finite() {
        return Err(SqaError::NonFinite("cross_entropy_loss"));
    }
    Ok((loss, grad))
}

/// Stabilized softmax probability of the positive class from a 2-logit row.
pub fn softmax_good<F: Scalar>(logit_bad: F, logit_good: F) -> f64 {
    let m = logit_bad.max(logit_good);
    let eb = (logit_bad - m).exp().to_f64();
    let eg = (logit_good - m).exp().to_f64();
    eg / (eb + eg)
}
