use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{
    bootstrap, select_cluster_topn, select_dcalm, select_random, select_topn, DcalmRound,
    RoundPlan, Selection, StrategyConfig, StrategyKind,
};
use crate::acquisition::{ProbTable, UncertaintyMeasure};
use crate::clustering::{self, ClusterModel};
use crate::dataset::{Corpus, LabelingState, Oracle, SimulatedOracle};
use crate::learner::{self, Classifier, TrainConfig, TrainedModel};
use crate::metrics::{self, ConfusionMatrix, DistributionReport};
use crate::seed::{self, stream};
use crate::{Error, InstanceId, Result};

/// Everything observed at the end of one round (after retraining).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    pub labeled_count: usize,
    pub selected: Vec<Selection>,
    pub allocations: Vec<usize>,
    pub cluster_accuracies: Vec<Option<f64>>,
    /// Acquired labels per class, over the whole labeled set.
    pub label_counts: Vec<u64>,
    pub dev_macro_f1: Option<f64>,
    pub dev_accuracy: Option<f64>,
    pub dev_error_counts: Vec<u64>,
    pub test_macro_f1: Option<f64>,
    pub test_accuracy: Option<f64>,
    pub test_error_counts: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunLog {
    pub strategy: StrategyKind,
    pub measure: UncertaintyMeasure,
    pub seed: u64,
    pub budget: usize,
    pub batch_size: usize,
    pub class_names: Vec<String>,
    pub rounds: Vec<RoundRecord>,
}

impl RunLog {
    pub fn last(&self) -> Option<&RoundRecord> {
        self.rounds.last()
    }

    /// Number of times the classifier was (re)trained.
    pub fn training_events(&self) -> usize {
        self.rounds.len()
    }
}

/// One active-learning run as an explicit state machine.
///
/// Each step is `plan` (choose the next batch) followed by `commit` (label the
/// batch through an oracle, retrain from scratch and evaluate). Round 0 is the
/// random bootstrap; the run is finished once the labeled set reaches the
/// budget or the pool runs dry.
pub struct ActiveLearningRun {
    corpus: Arc<Corpus>,
    strategy: StrategyConfig,
    learner: TrainConfig,
    state: LabelingState,
    model: TrainedModel,
    clusters: Option<ClusterModel>,
    dev_partition: BTreeMap<usize, Vec<InstanceId>>,
    next_round: usize,
    pending: Option<RoundPlan>,
    log: RunLog,
}

impl ActiveLearningRun {
    pub fn new(corpus: Arc<Corpus>, strategy: StrategyConfig, learner: TrainConfig) -> Result<Self> {
        strategy.validate(corpus.splits().pool.len())?;
        learner.validate()?;
        if corpus.num_classes() < 2 {
            return Err(Error::InvalidCorpus("active learning needs at least two classes".into()));
        }
        let (clusters, dev_partition) = if strategy.kind.uses_clusters() {
            let points: Vec<_> = corpus
                .splits()
                .pool
                .iter()
                .map(|&id| (id, corpus.features(id)))
                .collect();
            let model = clustering::kmeans(
                &points,
                strategy.clusters,
                seed::derive_seed(strategy.seed, &[stream::CLUSTERS]),
                &strategy.kmeans,
            )?;
            let dev: Vec<_> = corpus
                .splits()
                .dev
                .iter()
                .map(|&id| (id, corpus.features(id)))
                .collect();
            let partition = clustering::partition_by_centroids(&model, &dev)?;
            (Some(model), partition)
        } else {
            (None, BTreeMap::new())
        };
        let log = RunLog {
            strategy: strategy.kind,
            measure: strategy.measure,
            seed: strategy.seed,
            budget: strategy.budget,
            batch_size: strategy.batch_size,
            class_names: corpus.class_names().to_vec(),
            rounds: Vec::new(),
        };
        Ok(ActiveLearningRun {
            state: LabelingState::new(&corpus),
            model: TrainedModel::untrained(learner.kind, corpus.num_classes(), corpus.feature_dim()),
            corpus,
            strategy,
            learner,
            clusters,
            dev_partition,
            next_round: 0,
            pending: None,
            log,
        })
    }

    pub fn corpus(&self) -> &Arc<Corpus> {
        &self.corpus
    }

    pub fn strategy(&self) -> &StrategyConfig {
        &self.strategy
    }

    pub fn labeling(&self) -> &LabelingState {
        &self.state
    }

    pub fn model(&self) -> &TrainedModel {
        &self.model
    }

    pub fn clusters(&self) -> Option<&ClusterModel> {
        self.clusters.as_ref()
    }

    pub fn dev_partition(&self) -> &BTreeMap<usize, Vec<InstanceId>> {
        &self.dev_partition
    }

    pub fn log(&self) -> &RunLog {
        &self.log
    }

    pub fn into_log(self) -> RunLog {
        self.log
    }

    pub fn pending(&self) -> Option<&RoundPlan> {
        self.pending.as_ref()
    }

    fn remaining(&self) -> usize {
        let budget_left = self.strategy.budget.saturating_sub(self.state.labeled().len());
        budget_left.min(self.state.unlabeled().len())
    }

    pub fn is_finished(&self) -> bool {
        self.pending.is_none() && self.next_round > 0 && self.remaining() == 0
    }

    /// Plans the next batch, or returns `None` when the run is finished. A
    /// batch that was planned but not committed is returned again unchanged.
    pub fn plan(&mut self) -> Result<Option<&RoundPlan>> {
        if self.pending.is_none() && !self.is_finished() {
            let plan = self.plan_round(self.next_round)?;
            self.pending = Some(plan);
        }
        Ok(self.pending.as_ref())
    }

    fn plan_round(&self, round: usize) -> Result<RoundPlan> {
        let s = &self.strategy;
        if round == 0 {
            let ids = bootstrap(
                &self.corpus.splits().pool,
                s.bootstrap,
                seed::derive_seed(s.seed, &[stream::BOOTSTRAP]),
            )?;
            return Ok(RoundPlan {
                round,
                selections: ids.into_iter().map(Selection::plain).collect(),
                ..RoundPlan::default()
            });
        }
        let n = s.batch_size.min(self.remaining());
        let unlabeled: Vec<InstanceId> = self.state.unlabeled().iter().copied().collect();
        let mut plan = match s.kind {
            StrategyKind::Random => {
                let ids = select_random(
                    &unlabeled,
                    n,
                    seed::derive_seed(s.seed, &[stream::SELECT, round as u64]),
                )?;
                RoundPlan {
                    selections: ids.into_iter().map(Selection::plain).collect(),
                    ..RoundPlan::default()
                }
            }
            StrategyKind::TopN => {
                let probs = self.probabilities(&unlabeled)?;
                let ids = select_topn(&unlabeled, &probs, s.measure, n)?;
                RoundPlan {
                    selections: ids.into_iter().map(Selection::plain).collect(),
                    ..RoundPlan::default()
                }
            }
            StrategyKind::ClusterTopN => {
                let probs = self.probabilities(&unlabeled)?;
                let clusters = self.clusters.as_ref().expect("clustered strategy");
                select_cluster_topn(clusters, self.state.unlabeled(), &probs, s.measure, n)?
            }
            StrategyKind::Dcalm => select_dcalm(&DcalmRound {
                corpus: &self.corpus,
                clusters: self.clusters.as_ref().expect("clustered strategy"),
                dev_partition: &self.dev_partition,
                model: &self.model,
                unlabeled: self.state.unlabeled(),
                measure: s.measure,
                batch_size: n,
                metric: s.metric,
                kmeans: s.kmeans,
                seed: s.seed,
                round,
            })?,
        };
        plan.round = round;
        Ok(plan)
    }

    fn probabilities(&self, ids: &[InstanceId]) -> Result<ProbTable> {
        ids.iter()
            .map(|&id| Ok((id, self.model.predict_proba(self.corpus.features(id))?)))
            .collect()
    }

    /// Labels the pending batch through `oracle`, retrains and evaluates.
    ///
    /// Atomic: if any query fails, no label is recorded and the batch stays pending.
    pub fn commit(&mut self, oracle: &mut dyn Oracle) -> Result<&RoundRecord> {
        let plan = self
            .pending
            .as_ref()
            .ok_or_else(|| Error::BatchMismatch("no batch is pending".into()))?;
        let mut next_state = self.state.clone();
        for sel in &plan.selections {
            next_state.query(sel.id, plan.round, oracle)?;
        }
        let plan = self.pending.take().expect("checked above");
        self.state = next_state;
        self.retrain(plan.round)?;
        let record = self.evaluate(plan)?;
        self.log.rounds.push(record);
        self.next_round += 1;
        Ok(self.log.rounds.last().expect("just pushed"))
    }

    fn retrain(&mut self, round: usize) -> Result<()> {
        let corpus = &self.corpus;
        let examples: Vec<_> = self
            .state
            .labeled()
            .entries()
            .iter()
            .map(|e| (corpus.features(e.id), e.label))
            .collect();
        self.model = if examples.is_empty() {
            TrainedModel::untrained(self.learner.kind, corpus.num_classes(), corpus.feature_dim())
        } else {
            let config = TrainConfig {
                seed: seed::derive_seed(
                    self.strategy.seed,
                    &[stream::TRAIN, self.learner.seed, round as u64],
                ),
                ..self.learner.clone()
            };
            learner::train(&examples, corpus.num_classes(), &config)?
        };
        Ok(())
    }

    fn evaluate_split(&self, ids: &[InstanceId]) -> Result<ConfusionMatrix> {
        let examples = self.corpus.labeled_examples(ids);
        Ok(learner::evaluate(&self.model, &examples)?.confusion)
    }

    fn evaluate(&self, plan: RoundPlan) -> Result<RoundRecord> {
        let dev = self.evaluate_split(&self.corpus.splits().dev)?;
        let test = self.evaluate_split(&self.corpus.splits().test)?;
        let mut label_counts = vec![0u64; self.corpus.num_classes()];
        for l in self.state.labeled().labels() {
            label_counts[l] += 1;
        }
        Ok(RoundRecord {
            round: plan.round,
            labeled_count: self.state.labeled().len(),
            selected: plan.selections,
            allocations: plan.allocations,
            cluster_accuracies: plan.cluster_accuracies,
            label_counts,
            dev_macro_f1: dev.macro_f1().ok(),
            dev_accuracy: dev.accuracy(),
            dev_error_counts: dev.error_counts(),
            test_macro_f1: test.macro_f1().ok(),
            test_accuracy: test.accuracy(),
            test_error_counts: test.error_counts(),
        })
    }

    /// Label/error distribution of the latest round. With `sealed`, test
    /// errors are withheld.
    pub fn report(&self, sealed: bool) -> Option<DistributionReport> {
        let last = self.log.rounds.last()?;
        let names = self.corpus.class_names();
        let mut report = metrics::distribution_report(
            self.state.labeled().labels(),
            None,
            names,
            self.strategy.kind.name(),
            last.round,
        );
        if !sealed {
            report.test_error_counts = names
                .iter()
                .cloned()
                .zip(last.test_error_counts.iter().copied())
                .collect();
        }
        report.allocations = last.allocations.clone();
        report.cluster_accuracies = last.cluster_accuracies.clone();
        Some(report)
    }
}

/// Runs a strategy to its budget against the corpus' hidden pool labels.
pub fn run_active_learning(
    corpus: Arc<Corpus>,
    strategy: &StrategyConfig,
    learner: &TrainConfig,
) -> Result<RunLog> {
    corpus.require_pool_labels()?;
    let oracle_corpus = Arc::clone(&corpus);
    let mut oracle = SimulatedOracle::new(&oracle_corpus);
    let mut run = ActiveLearningRun::new(corpus, strategy.clone(), learner.clone())?;
    while run.plan()?.is_some() {
        run.commit(&mut oracle)?;
    }
    Ok(run.into_log())
}
