//! Linear probabilistic classifiers trained by seeded mini-batch gradient descent.
//!
//! Two losses share one weight layout and optimizer: softmax cross-entropy
//! (multinomial logistic regression) and one-vs-rest hinge (linear SVM). Both
//! carry an L2 penalty on the weights (not the biases). Models are retrained
//! from zero weights every time; there is no warm start.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::metrics::ConfusionMatrix;
use crate::{seed, ClassIndex, Error, Result};

/// A training or evaluation example: feature vector and class.
pub type Example<'a> = (&'a [f64], ClassIndex);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerKind {
    #[default]
    LogisticRegression,
    LinearSvm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub kind: LearnerKind,
    pub epochs: usize,
    pub learning_rate: f64,
    pub l2: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            kind: LearnerKind::LogisticRegression,
            epochs: 50,
            learning_rate: 0.1,
            l2: 1e-4,
            batch_size: 32,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::InvalidConfig("epochs must be at least 1".into()));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::InvalidConfig("learning rate must be positive".into()));
        }
        if !(self.l2.is_finite() && self.l2 >= 0.0) {
            return Err(Error::InvalidConfig("l2 strength must be non-negative".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch size must be at least 1".into()));
        }
        Ok(())
    }
}

/// Per-class weight rows plus biases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearWeights {
    num_classes: usize,
    dim: usize,
    /// Row-major `num_classes × dim`.
    weights: Vec<f64>,
    bias: Vec<f64>,
}

impl LinearWeights {
    pub fn zeros(num_classes: usize, dim: usize) -> Self {
        LinearWeights {
            num_classes,
            dim,
            weights: vec![0.0; num_classes * dim],
            bias: vec![0.0; num_classes],
        }
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, class: ClassIndex) -> &[f64] {
        &self.weights[class * self.dim..(class + 1) * self.dim]
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    /// Number of free parameters (weights then biases).
    pub fn len(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flat parameter view: weights row-major, then biases.
    pub fn param(&self, i: usize) -> f64 {
        if i < self.weights.len() {
            self.weights[i]
        } else {
            self.bias[i - self.weights.len()]
        }
    }

    pub fn param_mut(&mut self, i: usize) -> &mut f64 {
        if i < self.weights.len() {
            &mut self.weights[i]
        } else {
            let n = self.weights.len();
            &mut self.bias[i - n]
        }
    }

    /// Raw per-class scores (logits or margins).
    pub fn scores(&self, x: &[f64]) -> Vec<f64> {
        (0..self.num_classes)
            .map(|c| {
                self.row(c)
                    .iter()
                    .zip(x)
                    .map(|(w, v)| w * v)
                    .sum::<f64>()
                    + self.bias[c]
            })
            .collect()
    }

    fn axpy(&mut self, alpha: f64, other: &LinearWeights) {
        for (w, g) in self.weights.iter_mut().zip(&other.weights) {
            *w += alpha * g;
        }
        for (b, g) in self.bias.iter_mut().zip(&other.bias) {
            *b += alpha * g;
        }
    }
}

/// Numerically stable softmax.
pub fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = exp.iter().sum();
    exp.into_iter().map(|e| e / total).collect()
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Mean loss over `batch` plus `l2 / 2 · ‖W‖²`, and its (sub)gradient.
pub fn objective(
    kind: LearnerKind,
    model: &LinearWeights,
    batch: &[Example<'_>],
    l2: f64,
) -> (f64, LinearWeights) {
    let mut grad = LinearWeights::zeros(model.num_classes, model.dim);
    let mut loss = 0.0;
    for &(x, y) in batch {
        let scores = model.scores(x);
        match kind {
            LearnerKind::LogisticRegression => {
                let p = softmax(&scores);
                loss -= p[y].max(f64::MIN_POSITIVE).ln();
                for (c, &pc) in p.iter().enumerate() {
                    let delta = pc - if c == y { 1.0 } else { 0.0 };
                    add_scaled(&mut grad, c, delta, x);
                }
            }
            LearnerKind::LinearSvm => {
                for (c, &score) in scores.iter().enumerate() {
                    let sign = if c == y { 1.0 } else { -1.0 };
                    let margin = sign * score;
                    if margin < 1.0 {
                        loss += 1.0 - margin;
                        add_scaled(&mut grad, c, -sign, x);
                    }
                }
            }
        }
    }
    let n = batch.len().max(1) as f64;
    loss /= n;
    for g in grad.weights.iter_mut().chain(grad.bias.iter_mut()) {
        *g /= n;
    }
    let mut penalty = 0.0;
    for (g, w) in grad.weights.iter_mut().zip(&model.weights) {
        *g += l2 * w;
        penalty += w * w;
    }
    (loss + 0.5 * l2 * penalty, grad)
}

fn add_scaled(grad: &mut LinearWeights, class: usize, alpha: f64, x: &[f64]) {
    let dim = grad.dim;
    for (g, v) in grad.weights[class * dim..(class + 1) * dim].iter_mut().zip(x) {
        *g += alpha * v;
    }
    grad.bias[class] += alpha;
}

/// Anything that maps a feature vector to a class distribution.
pub trait Classifier {
    fn num_classes(&self) -> usize;

    /// Length `num_classes`, non-negative, summing to one.
    fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>>;

    fn predict(&self, x: &[f64]) -> Result<ClassIndex> {
        Ok(argmax(&self.predict_proba(x)?))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    kind: LearnerKind,
    weights: LinearWeights,
}

impl TrainedModel {
    /// A zero-weight model: uniform probabilities everywhere.
    pub fn untrained(kind: LearnerKind, num_classes: usize, dim: usize) -> Self {
        TrainedModel {
            kind,
            weights: LinearWeights::zeros(num_classes, dim),
        }
    }

    pub fn from_weights(kind: LearnerKind, weights: LinearWeights) -> Self {
        TrainedModel { kind, weights }
    }

    pub fn kind(&self) -> LearnerKind {
        self.kind
    }

    pub fn weights(&self) -> &LinearWeights {
        &self.weights
    }

    pub fn scores(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.weights.dim {
            return Err(Error::DimensionMismatch {
                expected: self.weights.dim,
                found: x.len(),
            });
        }
        Ok(self.weights.scores(x))
    }
}

impl Classifier for TrainedModel {
    fn num_classes(&self) -> usize {
        self.weights.num_classes
    }

    /// Softmax of the logits, or of the one-vs-rest margins for the SVM.
    fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(softmax(&self.scores(x)?))
    }

    fn predict(&self, x: &[f64]) -> Result<ClassIndex> {
        Ok(argmax(&self.scores(x)?))
    }
}

/// Trains a model from zero weights on `examples`.
///
/// A single-class training set is accepted and yields a model that favours
/// that class everywhere.
pub fn train(
    examples: &[Example<'_>],
    num_classes: usize,
    config: &TrainConfig,
) -> Result<TrainedModel> {
    config.validate()?;
    let Some(&(first, _)) = examples.first() else {
        return Err(Error::Empty("no training examples"));
    };
    if num_classes == 0 {
        return Err(Error::InvalidConfig("num_classes must be positive".into()));
    }
    let dim = first.len();
    for &(x, y) in examples {
        if x.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: x.len(),
            });
        }
        if y >= num_classes {
            return Err(Error::ClassOutOfRange {
                index: y,
                num_classes,
            });
        }
    }

    let mut weights = LinearWeights::zeros(num_classes, dim);
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut rng = seed::rng(config.seed);
    let mut batch = Vec::with_capacity(config.batch_size);
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(config.batch_size) {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| examples[i]));
            let (_, grad) = objective(config.kind, &weights, &batch, config.l2);
            weights.axpy(-config.learning_rate, &grad);
        }
    }
    Ok(TrainedModel {
        kind: config.kind,
        weights,
    })
}

/// Accuracy and confusion of a classifier on labeled examples.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub confusion: ConfusionMatrix,
    /// `None` when there were no examples.
    pub accuracy: Option<f64>,
}

pub fn evaluate(model: &dyn Classifier, examples: &[Example<'_>]) -> Result<Evaluation> {
    let mut confusion = ConfusionMatrix::new(model.num_classes());
    for &(x, y) in examples {
        if y >= model.num_classes() {
            return Err(Error::ClassOutOfRange {
                index: y,
                num_classes: model.num_classes(),
            });
        }
        confusion.record(y, model.predict(x)?);
    }
    let accuracy = confusion.accuracy();
    Ok(Evaluation {
        confusion,
        accuracy,
    })
}
