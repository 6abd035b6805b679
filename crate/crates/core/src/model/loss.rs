use crate::augment::SoftLabel;
use crate::dataset::{ExpressionClass, NUM_CLASSES};
use crate::{FerError, Result};

fn check_finite(logits: &[f64; NUM_CLASSES]) -> Result<()> {
    if logits.iter().all(|l| l.is_finite()) {
        Ok(())
    } else {
        Err(FerError::Numeric(format!("non-finite logits {logits:?}")))
    }
}

/// Max-subtracted softmax.
pub fn softmax(logits: &[f64; NUM_CLASSES]) -> [f64; NUM_CLASSES] {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exp = logits.map(|l| (l - max).exp());
    let sum: f64 = exp.iter().sum();
    exp.map(|e| e / sum)
}

/// `−Σ_c target_c · log softmax(logits)_c`.
///
/// Linear in the target, so for a half-mix label `α·y + (1 − α)·y_ref` this
/// is `α·CE(logits, y) + (1 − α)·CE(logits, y_ref)`.
pub fn soft_cross_entropy(logits: &[f64; NUM_CLASSES], target: &SoftLabel) -> Result<f64> {
    check_finite(logits)?;
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let log_sum_exp = max + logits.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
    Ok(target
        .probabilities()
        .iter()
        .zip(logits)
        .map(|(t, l)| t * (log_sum_exp - l))
        .sum())
}

/// Hard-label cross-entropy.
pub fn cross_entropy(logits: &[f64; NUM_CLASSES], class: ExpressionClass) -> Result<f64> {
    soft_cross_entropy(logits, &SoftLabel::one_hot(class)?)
}

/// Gradient of [`soft_cross_entropy`] with respect to the logits:
/// `softmax(logits) − target`.
pub fn grad_soft_cross_entropy(logits: &[f64; NUM_CLASSES], target: &SoftLabel) -> Result<[f64; NUM_CLASSES]> {
    check_finite(logits)?;
    let p = softmax(logits);
    let t = target.probabilities();
    Ok(std::array::from_fn(|i| p[i] - t[i]))
}
