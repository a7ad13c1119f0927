//! Confusion matrix and detection metrics.
//!
//! Malware is the positive class. The dataset files encode malware as label
//! 0, so [`Class::from_label`] is the single place where that mapping lives.

use core::fmt;

/// Ground-truth or predicted class of one sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Class {
    Malware,
    Benign,
}

impl Class {
    /// Maps the file-format label (malware 0, benign 1) to a class.
    pub fn from_label(label: u32) -> Result<Class, EvalError> {
        match label {
            0 => Ok(Class::Malware),
            1 => Ok(Class::Benign),
            other => Err(EvalError::InvalidLabel { label: other }),
        }
    }

    pub fn is_positive(&self) -> bool {
        matches!(self, Class::Malware)
    }
}

/// Binary confusion matrix with malware as the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub true_positives: usize,
    pub false_negatives: usize,
    pub false_positives: usize,
    pub true_negatives: usize,
}

impl ConfusionMatrix {
    pub fn new(tp: usize, fn_: usize, fp: usize, tn: usize) -> Self {
        ConfusionMatrix {
            true_positives: tp,
            false_negatives: fn_,
            false_positives: fp,
            true_negatives: tn,
        }
    }

    pub fn total(&self) -> usize {
        self.true_positives + self.false_negatives + self.false_positives + self.true_negatives
    }
}

/// The five detection metrics. A metric whose denominator is zero is
/// `None` ("undefined") rather than silently 0 or 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsReport {
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    pub false_alarm_rate: Option<f64>,
    pub accuracy: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalError {
    LengthMismatch { predictions: usize, truth: usize },
    EmptyMatrix,
    InvalidLabel { label: u32 },
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalError::LengthMismatch { predictions, truth } => {
                write!(f, "{predictions} predictions for {truth} truth values")
            }
            EvalError::EmptyMatrix => write!(f, "confusion matrix has no samples"),
            EvalError::InvalidLabel { label } => write!(f, "label {label} is not 0 or 1"),
        }
    }
}

impl core::error::Error for EvalError {}

/// Tallies predictions against ground truth.
pub fn confusion(predictions: &[Class], truth: &[Class]) -> Result<ConfusionMatrix, EvalError> {
    if predictions.len() != truth.len() {
        return Err(EvalError::LengthMismatch {
            predictions: predictions.len(),
            truth: truth.len(),
        });
    }
    let mut cm = ConfusionMatrix::new(0, 0, 0, 0);
    for (predicted, actual) in predictions.iter().zip(truth) {
        match (actual.is_positive(), predicted.is_positive()) {
            (true, true) => cm.true_positives += 1,
            (true, false) => cm.false_negatives += 1,
            (false, true) => cm.false_positives += 1,
            (false, false) => cm.true_negatives += 1,
        }
    }
    Ok(cm)
}

fn ratio(numerator: usize, denominator: usize) -> Option<f64> {
    (denominator > 0).then(|| numerator as f64 / denominator as f64)
}

/// Precision, recall, F1, false alarm rate, and accuracy from a non-empty
/// confusion matrix.
pub fn metrics(cm: &ConfusionMatrix) -> Result<MetricsReport, EvalError> {
    if cm.total() == 0 {
        return Err(EvalError::EmptyMatrix);
    }
    let tp = cm.true_positives;
    let precision = ratio(tp, tp + cm.false_positives);
    let recall = ratio(tp, tp + cm.false_negatives);
    let f1 = match (precision, recall) {
        (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
        _ => None,
    };
    Ok(MetricsReport {
        precision,
        recall,
        f1,
        false_alarm_rate: ratio(cm.false_positives, cm.true_negatives + cm.false_positives),
        accuracy: ratio(tp + cm.true_negatives, cm.total()),
    })
}
