//! Batch selection strategies and the active-learning run loop.
//!
//! * Random: uniform sample of the unlabeled pool.
//! * TopN: the N most informative unlabeled instances.
//! * Cluster-TopN: the pool is clustered once into `m` clusters and each
//!   cluster contributes its top `N/m`.
//! * D-CALM: each cluster's share of the batch is proportional to the
//!   classifier's estimated error on the dev instances nearest that cluster.
//!   The cluster is then re-split every round into as many subclusters as it
//!   was allocated, and the most informative instance of each subcluster is
//!   queried.

mod allocation;
mod run;

use std::collections::{BTreeMap, BTreeSet};

use num::{BigRational, One};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::acquisition::{self, ProbTable, UncertaintyMeasure};
use crate::clustering::{self, ClusterModel, KMeansParams};
use crate::dataset::Corpus;
use crate::learner::{self, Classifier};
use crate::{seed, Error, InstanceId, Result};

pub use allocation::{
    apportion_with_caps, approx, exact, impute_weights, largest_remainder, AllocationMetric, Apportionment,
};
pub use run::{run_active_learning, ActiveLearningRun, RoundRecord, RunLog};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    Random,
    #[serde(rename = "topn")]
    TopN,
    #[serde(rename = "cluster_topn")]
    ClusterTopN,
    Dcalm,
}

impl StrategyKind {
    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::Random => "random",
            StrategyKind::TopN => "topn",
            StrategyKind::ClusterTopN => "cluster_topn",
            StrategyKind::Dcalm => "dcalm",
        }
    }

    pub fn uses_clusters(self) -> bool {
        matches!(self, StrategyKind::ClusterTopN | StrategyKind::Dcalm)
    }
}

impl std::fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for StrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(StrategyKind::Random),
            "topn" => Ok(StrategyKind::TopN),
            "cluster_topn" => Ok(StrategyKind::ClusterTopN),
            "dcalm" => Ok(StrategyKind::Dcalm),
            other => Err(Error::InvalidConfig(format!("unknown strategy {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StrategyConfig {
    pub kind: StrategyKind,
    pub measure: UncertaintyMeasure,
    /// Number of top-level pool clusters (`m`).
    pub clusters: usize,
    pub bootstrap: usize,
    /// Labels acquired per round (`N`).
    pub batch_size: usize,
    /// Total labels, bootstrap included.
    pub budget: usize,
    pub metric: AllocationMetric,
    pub seed: u64,
    pub kmeans: KMeansParams,
}

impl Default for StrategyConfig {
    fn default() -> Self {
        StrategyConfig {
            kind: StrategyKind::Dcalm,
            measure: UncertaintyMeasure::Entropy,
            clusters: 10,
            bootstrap: 50,
            batch_size: 50,
            budget: 100,
            metric: AllocationMetric::ErrorRate,
            seed: 0,
            kmeans: KMeansParams::default(),
        }
    }
}

impl StrategyConfig {
    pub fn validate(&self, pool_size: usize) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch size must be at least 1".into()));
        }
        if self.clusters == 0 {
            return Err(Error::InvalidConfig("cluster count must be at least 1".into()));
        }
        if self.bootstrap > self.budget {
            return Err(Error::InvalidConfig(format!(
                "bootstrap size {} exceeds budget {}",
                self.bootstrap, self.budget
            )));
        }
        if self.budget > pool_size {
            return Err(Error::InvalidConfig(format!(
                "budget {} exceeds pool size {pool_size}",
                self.budget
            )));
        }
        if self.kind.uses_clusters() && self.clusters > pool_size {
            return Err(Error::InvalidConfig(format!(
                "{} clusters requested for a pool of {pool_size}",
                self.clusters
            )));
        }
        Ok(())
    }
}

/// Where a selected instance came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Selection {
    pub id: InstanceId,
    pub cluster: Option<usize>,
    pub subcluster: Option<usize>,
}

impl Selection {
    fn plain(id: InstanceId) -> Self {
        Selection {
            id,
            cluster: None,
            subcluster: None,
        }
    }
}

/// One round's batch decision.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RoundPlan {
    pub round: usize,
    /// Dev-partition accuracy per top-level cluster (`None` when the partition is empty).
    pub cluster_accuracies: Vec<Option<f64>>,
    /// Allocation weights after imputation.
    pub weights: Vec<f64>,
    /// Labels allocated to each top-level cluster.
    pub allocations: Vec<usize>,
    pub selections: Vec<Selection>,
}

impl RoundPlan {
    pub fn ids(&self) -> Vec<InstanceId> {
        self.selections.iter().map(|s| s.id).collect()
    }
}

fn sample_without_replacement(
    ids: &[InstanceId],
    size: usize,
    seed: u64,
) -> Result<Vec<InstanceId>> {
    if size > ids.len() {
        return Err(Error::InvalidConfig(format!(
            "cannot draw {size} instances from {}",
            ids.len()
        )));
    }
    let mut sorted = ids.to_vec();
    sorted.sort_unstable();
    let mut rng = seed::rng(seed);
    let (chosen, _) = sorted.partial_shuffle(&mut rng, size);
    let mut chosen = chosen.to_vec();
    chosen.sort_unstable();
    Ok(chosen)
}

/// Uniform random bootstrap sample of the pool.
pub fn bootstrap(pool: &[InstanceId], size: usize, seed: u64) -> Result<Vec<InstanceId>> {
    sample_without_replacement(pool, size, seed)
}

/// Uniform random batch from the unlabeled instances.
pub fn select_random(unlabeled: &[InstanceId], n: usize, seed: u64) -> Result<Vec<InstanceId>> {
    sample_without_replacement(unlabeled, n, seed)
}

/// The `n` highest-scoring unlabeled instances, ties by lowest id. Asking for
/// more than are available returns all of them.
pub fn select_topn(
    unlabeled: &[InstanceId],
    probs: &ProbTable,
    measure: UncertaintyMeasure,
    n: usize,
) -> Result<Vec<InstanceId>> {
    let ranked = acquisition::rank(unlabeled, probs, measure)?;
    Ok(ranked.into_iter().take(n).map(|(id, _)| id).collect())
}

/// Unlabeled members of every top-level cluster, ascending.
fn unlabeled_by_cluster(
    clusters: &ClusterModel,
    unlabeled: &BTreeSet<InstanceId>,
) -> Vec<Vec<InstanceId>> {
    let mut members = vec![Vec::new(); clusters.k()];
    for &id in unlabeled {
        if let Some(c) = clusters.cluster_of(id) {
            members[c].push(id);
        }
    }
    members
}

/// Equal quotas of `n / m` per cluster (largest-remainder rounded), each
/// filled with that cluster's most informative unlabeled members.
pub fn select_cluster_topn(
    clusters: &ClusterModel,
    unlabeled: &BTreeSet<InstanceId>,
    probs: &ProbTable,
    measure: UncertaintyMeasure,
    n: usize,
) -> Result<RoundPlan> {
    let members = unlabeled_by_cluster(clusters, unlabeled);
    if members.iter().all(Vec::is_empty) {
        return Err(Error::PoolExhausted);
    }
    let caps: Vec<usize> = members.iter().map(Vec::len).collect();
    let allocations = apportion_with_caps(&vec![BigRational::one(); clusters.k()], n, &caps);
    let mut selections = Vec::with_capacity(n);
    for (c, (ids, &quota)) in members.iter().zip(&allocations).enumerate() {
        if quota == 0 {
            continue;
        }
        for id in select_topn(ids, probs, measure, quota)? {
            selections.push(Selection {
                id,
                cluster: Some(c),
                subcluster: None,
            });
        }
    }
    Ok(RoundPlan {
        weights: vec![1.0; clusters.k()],
        allocations,
        selections,
        ..RoundPlan::default()
    })
}

/// Inputs of one D-CALM round.
pub struct DcalmRound<'a> {
    pub corpus: &'a Corpus,
    /// Top-level clustering of the pool, fixed for the run.
    pub clusters: &'a ClusterModel,
    /// Dev ids nearest each top-level centroid.
    pub dev_partition: &'a BTreeMap<usize, Vec<InstanceId>>,
    pub model: &'a dyn Classifier,
    pub unlabeled: &'a BTreeSet<InstanceId>,
    pub measure: UncertaintyMeasure,
    pub batch_size: usize,
    pub metric: AllocationMetric,
    pub kmeans: KMeansParams,
    pub seed: u64,
    pub round: usize,
}

/// Per-cluster dev accuracy and raw allocation weight.
pub type ClusterEstimates = (Vec<Option<f64>>, Vec<Option<BigRational>>);

/// Dev accuracy and raw allocation weight of every top-level cluster.
pub fn estimate_cluster_errors(
    corpus: &Corpus,
    k: usize,
    dev_partition: &BTreeMap<usize, Vec<InstanceId>>,
    model: &dyn Classifier,
    metric: AllocationMetric,
) -> Result<ClusterEstimates> {
    let mut accuracies = Vec::with_capacity(k);
    let mut raw = Vec::with_capacity(k);
    for c in 0..k {
        let ids = dev_partition.get(&c).map(Vec::as_slice).unwrap_or_default();
        let eval = learner::evaluate(model, &corpus.labeled_examples(ids))?;
        accuracies.push(eval.accuracy);
        raw.push(metric.weight(&eval.confusion));
    }
    Ok((accuracies, raw))
}

/// Plans one D-CALM batch.
///
/// Allocations follow `N · w_i / Σ w_j` with `w_i = 1 − A_i` (or the configured
/// metric), rounded by largest remainder and clamped to each cluster's
/// unlabeled count. Each allocated cluster is re-clustered over its current
/// unlabeled members into `l_i` subclusters and contributes the most
/// informative member of each.
pub fn select_dcalm(input: &DcalmRound<'_>) -> Result<RoundPlan> {
    let k = input.clusters.k();
    let members = unlabeled_by_cluster(input.clusters, input.unlabeled);
    let available: usize = members.iter().map(Vec::len).sum();
    if available == 0 {
        return Err(Error::PoolExhausted);
    }
    let (accuracies, raw) = estimate_cluster_errors(
        input.corpus,
        k,
        input.dev_partition,
        input.model,
        input.metric,
    )?;
    let exact_weights = impute_weights(&raw);
    let caps: Vec<usize> = members.iter().map(Vec::len).collect();
    let allocations = apportion_with_caps(&exact_weights, input.batch_size, &caps);

    let mut selections = Vec::with_capacity(input.batch_size.min(available));
    for (c, (ids, &quota)) in members.iter().zip(&allocations).enumerate() {
        if quota == 0 {
            continue;
        }
        let mut probs = ProbTable::with_capacity(ids.len());
        for &id in ids {
            probs.insert(id, input.model.predict_proba(input.corpus.features(id))?);
        }
        let points: Vec<_> = ids.iter().map(|&id| (id, input.corpus.features(id))).collect();
        let sub_seed = seed::derive_seed(
            input.seed,
            &[seed::stream::SUBCLUSTER, input.round as u64, c as u64],
        );
        let sub = clustering::subcluster(&points, quota, sub_seed, &input.kmeans)?;
        let mut picked = BTreeSet::new();
        for (j, sub_members) in sub.members().iter().enumerate() {
            if sub_members.is_empty() {
                continue;
            }
            let id = acquisition::most_informative(sub_members, &probs, input.measure)?;
            picked.insert(id);
            selections.push(Selection {
                id,
                cluster: Some(c),
                subcluster: Some(j),
            });
        }
        // Coincident points can leave subclusters empty; top up from the rest of the cluster.
        if picked.len() < quota {
            let rest: Vec<InstanceId> =
                ids.iter().copied().filter(|id| !picked.contains(id)).collect();
            for id in select_topn(&rest, &probs, input.measure, quota - picked.len())? {
                selections.push(Selection {
                    id,
                    cluster: Some(c),
                    subcluster: sub.cluster_of(id),
                });
            }
        }
    }
    Ok(RoundPlan {
        round: input.round,
        cluster_accuracies: accuracies,
        weights: exact_weights.iter().map(allocation::approx).collect(),
        allocations,
        selections,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Instance, Splits};
    use crate::learner::{LearnerKind, LinearWeights, TrainedModel};

    #[test]
    fn bootstrap_shapes() {
        let pool: Vec<u64> = (0..50).collect();
        assert_eq!(bootstrap(&pool, 50, 3).unwrap(), pool);
        assert_eq!(bootstrap(&pool, 20, 3).unwrap(), bootstrap(&pool, 20, 3).unwrap());
        assert_ne!(bootstrap(&pool, 20, 3).unwrap(), bootstrap(&pool, 20, 4).unwrap());
        assert!(bootstrap(&pool, 0, 3).unwrap().is_empty());
        assert!(bootstrap(&pool, 51, 3).is_err());
    }

    #[test]
    fn random_shapes() {
        let pool: Vec<u64> = (100..140).collect();
        assert_eq!(select_random(&pool, 40, 1).unwrap(), pool);
        let a = select_random(&pool, 7, 1).unwrap();
        assert_eq!(a, select_random(&pool, 7, 1).unwrap());
        assert_eq!(a.len(), 7);
        assert!(a.iter().all(|id| pool.contains(id)));
        assert!(select_random(&pool, 0, 1).unwrap().is_empty());
    }

    fn binary_probs(scores: &[(u64, f64)]) -> ProbTable {
        // p = (1 - s/2, s/2) makes least-confident score exactly s/2.
        scores.iter().map(|&(id, s)| (id, vec![1.0 - s / 2.0, s / 2.0])).collect()
    }

    #[test]
    fn topn_forced_order() {
        let probs = binary_probs(&[(1, 0.9), (2, 0.1), (3, 0.5)]);
        let picked = select_topn(&[1, 2, 3], &probs, UncertaintyMeasure::LeastConfident, 2).unwrap();
        assert_eq!(picked, vec![1, 3]);
        let all = select_topn(&[1, 2, 3], &probs, UncertaintyMeasure::LeastConfident, 3).unwrap();
        assert_eq!(all.len(), 3);
        let over = select_topn(&[1, 2, 3], &probs, UncertaintyMeasure::LeastConfident, 9).unwrap();
        assert_eq!(over, vec![1, 3, 2]);
    }

    /// A 1-d corpus of `groups` well-separated groups of `per` points each;
    /// even groups are class 0, odd groups class 1.
    fn line_corpus(groups: usize, per: usize) -> Corpus {
        let mut instances = Vec::new();
        let mut splits = Splits::default();
        let mut id = 0;
        for g in 0..groups {
            for j in 0..per + 2 {
                instances.push(Instance {
                    id,
                    text: None,
                    features: Some(vec![g as f64 * 100.0 + j as f64 * 0.1, 0.0]),
                    label: Some(g % 2),
                });
                if j < per {
                    splits.pool.push(id);
                } else {
                    splits.dev.push(id);
                }
                id += 1;
            }
        }
        Corpus::new(instances, vec!["a".into(), "b".into()], splits).unwrap()
    }

    fn pool_clusters(corpus: &Corpus, k: usize) -> ClusterModel {
        let points: Vec<_> = corpus
            .splits()
            .pool
            .iter()
            .map(|&id| (id, corpus.features(id)))
            .collect();
        clustering::kmeans(&points, k, 1, &KMeansParams::default()).unwrap()
    }

    #[test]
    fn cluster_topn_quotas() {
        let corpus = line_corpus(3, 8);
        let clusters = pool_clusters(&corpus, 3);
        let unlabeled: BTreeSet<u64> = corpus.splits().pool.iter().copied().collect();
        let probs: ProbTable = unlabeled.iter().map(|&id| (id, vec![0.5, 0.5])).collect();
        let plan =
            select_cluster_topn(&clusters, &unlabeled, &probs, UncertaintyMeasure::Entropy, 10)
                .unwrap();
        assert_eq!(plan.allocations, vec![4, 3, 3]);
        assert_eq!(plan.selections.len(), 10);

        // Starve one cluster down to 2 unlabeled members.
        let starved = clusters.members()[1].clone();
        let unlabeled: BTreeSet<u64> = unlabeled
            .into_iter()
            .filter(|id| !starved[2..].contains(id))
            .collect();
        let plan =
            select_cluster_topn(&clusters, &unlabeled, &probs, UncertaintyMeasure::Entropy, 15)
                .unwrap();
        assert_eq!(plan.allocations[1], 2);
        assert_eq!(plan.allocations.iter().sum::<usize>(), 15);
        assert_eq!(plan.selections.len(), 15);

        assert!(matches!(
            select_cluster_topn(&clusters, &BTreeSet::new(), &probs, UncertaintyMeasure::Entropy, 5),
            Err(Error::PoolExhausted)
        ));
    }

    #[test]
    fn dcalm_favours_the_erroneous_cluster() {
        let corpus = line_corpus(2, 30);
        let clusters = pool_clusters(&corpus, 2);
        let dev: Vec<_> = corpus
            .splits()
            .dev
            .iter()
            .map(|&id| (id, corpus.features(id)))
            .collect();
        let partition = clustering::partition_by_centroids(&clusters, &dev).unwrap();
        // Always predicts class 0: right on group 0, wrong on group 1.
        let model = TrainedModel::from_weights(LearnerKind::LogisticRegression, {
            let mut w = LinearWeights::zeros(2, 2);
            *w.param_mut(4) = 1.0;
            w
        });
        let unlabeled: BTreeSet<u64> = corpus.splits().pool.iter().copied().collect();
        let plan = select_dcalm(&DcalmRound {
            corpus: &corpus,
            clusters: &clusters,
            dev_partition: &partition,
            model: &model,
            unlabeled: &unlabeled,
            measure: UncertaintyMeasure::Entropy,
            batch_size: 10,
            metric: AllocationMetric::ErrorRate,
            kmeans: KMeansParams::default(),
            seed: 5,
            round: 1,
        })
        .unwrap();
        let wrong = clusters.cluster_of(corpus.splits().pool[30]).unwrap();
        assert_eq!(plan.cluster_accuracies[wrong], Some(0.0));
        assert_eq!(plan.cluster_accuracies[1 - wrong], Some(1.0));
        assert_eq!(plan.allocations[wrong], 10);
        assert_eq!(plan.allocations[1 - wrong], 0);
        let ids = plan.ids();
        assert_eq!(ids.len(), 10);
        assert_eq!(ids.iter().collect::<BTreeSet<_>>().len(), 10);
        assert!(plan.selections.iter().all(|s| s.cluster == Some(wrong)));
        let subs: BTreeSet<_> = plan.selections.iter().map(|s| s.subcluster).collect();
        assert_eq!(subs.len(), 10);
    }

    #[test]
    fn strategy_kind_names_round_trip() {
        for kind in [
            StrategyKind::Random,
            StrategyKind::TopN,
            StrategyKind::ClusterTopN,
            StrategyKind::Dcalm,
        ] {
            assert_eq!(kind.name().parse::<StrategyKind>().unwrap(), kind);
            let json = serde_json::to_string(&kind).unwrap();
            assert_eq!(json, format!("\"{}\"", kind.name()));
        }
    }

    #[test]
    fn config_validation() {
        let ok = StrategyConfig::default();
        ok.validate(1000).unwrap();
        let bad = StrategyConfig {
            bootstrap: 200,
            ..StrategyConfig::default()
        };
        assert!(bad.validate(1000).is_err());
        assert!(ok.validate(50).is_err());
        let zero = StrategyConfig {
            batch_size: 0,
            ..StrategyConfig::default()
        };
        assert!(zero.validate(1000).is_err());
    }
}
