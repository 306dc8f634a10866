//! Seeded Gaussian-blob corpora for desk-scale experiments.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{Corpus, Instance, Splits};
use crate::{seed, Error, Result};

/// Parameters of a Gaussian-blob corpus. Each class is one blob.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticConfig {
    /// Number of instances per class; unequal counts produce imbalanced corpora.
    pub class_counts: Vec<usize>,
    pub dim: usize,
    /// Standard deviation of the class centers around the origin.
    pub center_std: f64,
    /// Standard deviation of points around their class center.
    pub cluster_std: f64,
    /// Optional class names; defaults to `class_0`, `class_1`, ...
    pub class_names: Option<Vec<String>>,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            class_counts: vec![500, 50],
            dim: 16,
            center_std: 1.0,
            cluster_std: 1.0,
            class_names: None,
        }
    }
}

/// Generates a labeled blob corpus with a seeded 70/10/20 split.
///
/// The output is a pure function of `(config, seed)`.
pub fn generate_synthetic(config: &SyntheticConfig, seed: u64) -> Result<Corpus> {
    if config.class_counts.is_empty() {
        return Err(Error::InvalidConfig("no classes requested".into()));
    }
    if let Some(c) = config.class_counts.iter().position(|&n| n == 0) {
        return Err(Error::InvalidConfig(format!("class {c} has zero instances")));
    }
    if config.dim < 2 {
        return Err(Error::InvalidConfig("dimension must be at least 2".into()));
    }
    if !(config.center_std > 0.0 && config.cluster_std > 0.0) {
        return Err(Error::InvalidConfig("standard deviations must be positive".into()));
    }
    let class_names = match &config.class_names {
        Some(names) if names.len() == config.class_counts.len() => names.clone(),
        Some(_) => {
            return Err(Error::InvalidConfig(
                "class_names length differs from class_counts".into(),
            ))
        }
        None => (0..config.class_counts.len())
            .map(|c| format!("class_{c}"))
            .collect(),
    };

    let mut rng = seed::rng(seed);
    let center_dist = Normal::new(0.0, config.center_std).expect("positive std");
    let point_dist = Normal::new(0.0, config.cluster_std).expect("positive std");
    let centers: Vec<Vec<f64>> = config
        .class_counts
        .iter()
        .map(|_| (0..config.dim).map(|_| center_dist.sample(&mut rng)).collect())
        .collect();

    // Interleave classes so ids carry no class ordering.
    let mut labels: Vec<usize> = config
        .class_counts
        .iter()
        .enumerate()
        .flat_map(|(c, &n)| std::iter::repeat_n(c, n))
        .collect();
    for i in (1..labels.len()).rev() {
        let j = rng.random_range(0..=i);
        labels.swap(i, j);
    }

    let instances: Vec<Instance> = labels
        .iter()
        .enumerate()
        .map(|(id, &label)| Instance {
            id: id as u64,
            text: None,
            features: Some(
                centers[label]
                    .iter()
                    .map(|c| c + point_dist.sample(&mut rng))
                    .collect(),
            ),
            label: Some(label),
        })
        .collect();
    let ids: Vec<u64> = instances.iter().map(|i| i.id).collect();
    let splits = Splits::seeded_default(&ids, seed::derive_seed(seed, &[seed::stream::SPLIT]));
    Corpus::new(instances, class_names, splits)
}
