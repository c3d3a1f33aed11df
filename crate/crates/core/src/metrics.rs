//! Confusion counts and the classification metrics derived from them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Positive class is `+1` (fraud).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl ConfusionCounts {
    pub fn from_predictions(truth: &[i8], predicted: &[i8]) -> Result<Self> {
        if truth.len() != predicted.len() {
            return Err(Error::DimensionMismatch {
                expected: truth.len(),
                got: predicted.len(),
            });
        }
        let mut c = Self::default();
        for (&t, &p) in truth.iter().zip(predicted) {
            match (t == 1, p == 1) {
                (true, true) => c.tp += 1,
                (true, false) => c.fn_ += 1,
                (false, true) => c.fp += 1,
                (false, false) => c.tn += 1,
            }
        }
        Ok(c)
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn metrics(&self) -> Metrics {
        metrics(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub recall: f64,
    pub balanced_accuracy: f64,
    pub accuracy: f64,
    pub precision: f64,
    pub f1: f64,
    /// Set when some ratio had a zero denominator and was taken as 0.
    pub degenerate: bool,
}

/// Recall `tp/(tp+fn)` and balanced accuracy `½[tp/(tp+fn) + tn/(tn+fp)]`,
/// plus accuracy, precision and F1.
pub fn metrics(c: &ConfusionCounts) -> Metrics {
    let mut degenerate = false;
    let mut ratio = |num: usize, den: usize| {
        if den == 0 {
            degenerate = true;
            0.0
        } else {
            num as f64 / den as f64
        }
    };
    let recall = ratio(c.tp, c.tp + c.fn_);
    let specificity = ratio(c.tn, c.tn + c.fp);
    let precision = ratio(c.tp, c.tp + c.fp);
    let accuracy = ratio(c.tp + c.tn, c.total());
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Metrics {
        recall,
        balanced_accuracy: 0.5 * (recall + specificity),
        accuracy,
        precision,
        f1,
        degenerate,
    }
}

/// Metric used to choose among candidate models on validation data.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMetric {
    #[default]
    Recall,
    BalancedAccuracy,
}

impl SelectionMetric {
    pub fn score(&self, m: &Metrics) -> f64 {
        match self {
            SelectionMetric::Recall => m.recall,
            SelectionMetric::BalancedAccuracy => m.balanced_accuracy,
        }
    }
}

/// Mean and sample standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
