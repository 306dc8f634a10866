//! Confusion matrices, macro-F1 and label/error distribution reports.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::{ClassIndex, Error, Result};

/// Counts indexed by (true class, predicted class).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    num_classes: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(num_classes: usize) -> Self {
        ConfusionMatrix {
            num_classes,
            counts: vec![0; num_classes * num_classes],
        }
    }

    /// Builds a matrix from rows of counts (rows = true class). Rows must be square.
    pub fn from_rows(rows: &[Vec<u64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidConfig("confusion rows must form a square matrix".into()));
        }
        Ok(ConfusionMatrix {
            num_classes: n,
            counts: rows.iter().flatten().copied().collect(),
        })
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn record(&mut self, truth: ClassIndex, predicted: ClassIndex) {
        self.counts[truth * self.num_classes + predicted] += 1;
    }

    pub fn get(&self, truth: ClassIndex, predicted: ClassIndex) -> u64 {
        self.counts[truth * self.num_classes + predicted]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn correct(&self) -> u64 {
        (0..self.num_classes).map(|c| self.get(c, c)).sum()
    }

    /// `None` for an empty matrix.
    pub fn accuracy(&self) -> Option<f64> {
        match self.total() {
            0 => None,
            total => Some(self.correct() as f64 / total as f64),
        }
    }

    pub fn true_positives(&self, class: ClassIndex) -> u64 {
        self.get(class, class)
    }

    pub fn false_positives(&self, class: ClassIndex) -> u64 {
        (0..self.num_classes)
            .filter(|&t| t != class)
            .map(|t| self.get(t, class))
            .sum()
    }

    pub fn false_negatives(&self, class: ClassIndex) -> u64 {
        (0..self.num_classes)
            .filter(|&p| p != class)
            .map(|p| self.get(class, p))
            .sum()
    }

    /// F1 of one class; a class that is never predicted correctly scores 0.
    pub fn f1(&self, class: ClassIndex) -> f64 {
        let tp = self.true_positives(class) as f64;
        if tp == 0.0 {
            return 0.0;
        }
        let fp = self.false_positives(class) as f64;
        let fn_ = self.false_negatives(class) as f64;
        2.0 * tp / (2.0 * tp + fp + fn_)
    }

    /// Unweighted mean of per-class F1.
    pub fn macro_f1(&self) -> Result<f64> {
        if self.num_classes == 0 || self.total() == 0 {
            return Err(Error::Empty("confusion matrix has no examples"));
        }
        let sum: f64 = (0..self.num_classes).map(|c| self.f1(c)).sum();
        Ok(sum / self.num_classes as f64)
    }

    /// Misclassified examples per true class.
    pub fn error_counts(&self) -> Vec<u64> {
        (0..self.num_classes).map(|c| self.false_negatives(c)).collect()
    }
}

/// Class histogram of acquired labels and test errors for one round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionReport {
    pub strategy: String,
    pub round: usize,
    pub label_counts: BTreeMap<String, u64>,
    pub test_error_counts: BTreeMap<String, u64>,
    pub allocations: Vec<usize>,
    pub cluster_accuracies: Vec<Option<f64>>,
}

/// Per-class label counts, zero-filled for every class.
pub fn label_counts(
    labels: impl IntoIterator<Item = ClassIndex>,
    class_names: &[String],
) -> BTreeMap<String, u64> {
    let mut counts = vec![0u64; class_names.len()];
    for l in labels {
        counts[l] += 1;
    }
    class_names.iter().cloned().zip(counts).collect()
}

/// Builds the report for a labeled set and the current test confusion.
///
/// The plan fields (`allocations`, `cluster_accuracies`) start empty; strategies
/// that allocate per cluster fill them in.
pub fn distribution_report(
    labels: impl IntoIterator<Item = ClassIndex>,
    test_confusion: Option<&ConfusionMatrix>,
    class_names: &[String],
    strategy: &str,
    round: usize,
) -> DistributionReport {
    let test_error_counts = match test_confusion {
        Some(cm) => class_names.iter().cloned().zip(cm.error_counts()).collect(),
        None => BTreeMap::new(),
    };
    DistributionReport {
        strategy: strategy.to_string(),
        round,
        label_counts: label_counts(labels, class_names),
        test_error_counts,
        allocations: Vec::new(),
        cluster_accuracies: Vec::new(),
    }
}
