use std::fmt;

use crate::dataset::{ExpressionClass, NUM_CLASSES};
use crate::{FerError, Result};

/// `counts[true][predicted]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionMatrix {
    pub counts: [[u64; NUM_CLASSES]; NUM_CLASSES],
}

impl ConfusionMatrix {
    pub fn add(&mut self, truth: ExpressionClass, predicted: ExpressionClass) -> Result<()> {
        match (truth.index(), predicted.index()) {
            (Some(t), Some(p)) => {
                self.counts[t][p] += 1;
                Ok(())
            }
            _ => Err(FerError::invalid("confusion entries must be labeled classes")),
        }
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) {
        for (row, o) in self.counts.iter_mut().zip(&other.counts) {
            for (c, v) in row.iter_mut().zip(o) {
                *c += v;
            }
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn true_positives(&self, k: usize) -> u64 {
        self.counts[k][k]
    }

    pub fn false_positives(&self, k: usize) -> u64 {
        (0..NUM_CLASSES).filter(|&t| t != k).map(|t| self.counts[t][k]).sum()
    }

    pub fn false_negatives(&self, k: usize) -> u64 {
        (0..NUM_CLASSES).filter(|&p| p != k).map(|p| self.counts[k][p]).sum()
    }

    pub fn support(&self, k: usize) -> u64 {
        self.counts[k].iter().sum()
    }
}

pub fn confusion(predictions: &[ExpressionClass], labels: &[ExpressionClass]) -> Result<ConfusionMatrix> {
    if predictions.len() != labels.len() {
        return Err(FerError::invalid(format!(
            "{} predictions for {} labels",
            predictions.len(),
            labels.len()
        )));
    }
    let mut cm = ConfusionMatrix::default();
    for (&p, &t) in predictions.iter().zip(labels) {
        cm.add(t, p)?;
    }
    Ok(cm)
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// `(precision, recall, f1)` of one class; every 0/0 is taken as 0.
pub fn f1_per_class(cm: &ConfusionMatrix, class: ExpressionClass) -> (f64, f64, f64) {
    let Some(k) = class.index() else {
        return (0.0, 0.0, 0.0);
    };
    let tp = cm.true_positives(k);
    let precision = ratio(tp, tp + cm.false_positives(k));
    let recall = ratio(tp, tp + cm.false_negatives(k));
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    (precision, recall, f1)
}

/// Unweighted mean of the eight per-class F1 values.
pub fn macro_f1(cm: &ConfusionMatrix) -> f64 {
    ExpressionClass::ALL.iter().map(|&c| f1_per_class(cm, c).2).sum::<f64>() / NUM_CLASSES as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub per_class: [ClassMetrics; NUM_CLASSES],
    pub macro_f1: f64,
    /// Frames in the confusion matrix.
    pub total: u64,
    pub confusion: ConfusionMatrix,
}

impl MetricsReport {
    pub fn from_confusion(cm: &ConfusionMatrix) -> Self {
        let per_class = std::array::from_fn(|k| {
            let (precision, recall, f1) = f1_per_class(cm, ExpressionClass::ALL[k]);
            ClassMetrics {
                precision,
                recall,
                f1,
                support: cm.support(k),
            }
        });
        MetricsReport {
            per_class,
            macro_f1: macro_f1(cm),
            total: cm.total(),
            confusion: *cm,
        }
    }
}

impl fmt::Display for MetricsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<10} {:>9} {:>9} {:>9} {:>9}", "class", "precision", "recall", "f1", "support")?;
        for (class, m) in ExpressionClass::ALL.iter().zip(&self.per_class) {
            writeln!(
                f,
                "{:<10} {:>9.4} {:>9.4} {:>9.4} {:>9}",
                class.name(),
                m.precision,
                m.recall,
                m.f1,
                m.support
            )?;
        }
        writeln!(f, "{:<10} {:>9} {:>9} {:>9.4} {:>9}", "macro", "", "", self.macro_f1, self.total)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use ExpressionClass::*;

    #[test]
    fn perfect_class() {
        let mut cm = ConfusionMatrix::default();
        cm.counts[2][2] = 10;
        assert_eq!(f1_per_class(&cm, Disgust), (1.0, 1.0, 1.0));
    }

    #[test]
    fn tp1_fp1_fn3_gives_one_third() {
        let mut cm = ConfusionMatrix::default();
        cm.counts[0][0] = 1;
        cm.counts[1][0] = 1;
        cm.counts[0][1] = 3;
        let (p, r, f1) = f1_per_class(&cm, Neutral);
        assert_eq!((p, r), (0.5, 0.25));
        assert!((f1 - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn never_predicted_class_scores_zero() {
        let mut cm = ConfusionMatrix::default();
        cm.counts[3][0] = 4;
        assert_eq!(f1_per_class(&cm, Fear), (0.0, 0.0, 0.0));
        assert_eq!(f1_per_class(&ConfusionMatrix::default(), Fear), (0.0, 0.0, 0.0));
    }

    #[test]
    fn constant_neutral_on_balanced_set() {
        let labels = ExpressionClass::ALL.to_vec();
        let cm = confusion(&[Neutral; 8], &labels).unwrap();
        let (_, _, f0) = f1_per_class(&cm, Neutral);
        assert!((f0 - 2.0 / 9.0).abs() < 1e-15);
        assert!((macro_f1(&cm) - 1.0 / 36.0).abs() < 1e-15);
    }

    #[test]
    fn perfect_predictions_score_one() {
        let labels: Vec<_> = (0..40).map(|i| ExpressionClass::ALL[i % 8]).collect();
        let report = MetricsReport::from_confusion(&confusion(&labels, &labels).unwrap());
        assert_eq!(report.macro_f1, 1.0);
        assert_eq!(report.total, 40);
        assert!(report.to_string().contains("macro"));
    }

    #[test]
    fn rejects_unlabeled_and_length_mismatch() {
        assert!(confusion(&[Neutral], &[Unlabeled]).is_err());
        assert!(confusion(&[Neutral], &[]).is_err());
    }

    fn classes(n: usize) -> impl Strategy<Value = Vec<usize>> {
        prop::collection::vec(0usize..NUM_CLASSES, n)
    }

    proptest! {
        #[test]
        fn invariants(pairs in (1usize..200).prop_flat_map(|n| (classes(n), classes(n))), perm in Just((0..8).collect::<Vec<usize>>()).prop_shuffle()) {
            let (pred, truth) = pairs;
            let p: Vec<_> = pred.iter().map(|&k| ExpressionClass::ALL[k]).collect();
            let t: Vec<_> = truth.iter().map(|&k| ExpressionClass::ALL[k]).collect();
            let cm = confusion(&p, &t).unwrap();
            prop_assert_eq!(cm.total(), p.len() as u64);
            let report = MetricsReport::from_confusion(&cm);
            prop_assert!((0.0..=1.0).contains(&report.macro_f1));
            for m in &report.per_class {
                for v in [m.precision, m.recall, m.f1] {
                    prop_assert!((0.0..=1.0).contains(&v));
                }
            }
            let mean = report.per_class.iter().map(|m| m.f1).sum::<f64>() / 8.0;
            prop_assert!((mean - report.macro_f1).abs() < 1e-15);

            let pp: Vec<_> = pred.iter().map(|&k| ExpressionClass::ALL[perm[k]]).collect();
            let tp: Vec<_> = truth.iter().map(|&k| ExpressionClass::ALL[perm[k]]).collect();
            let permuted = macro_f1(&confusion(&pp, &tp).unwrap());
            prop_assert!((permuted - report.macro_f1).abs() < 1e-12);
        }
    }
}
