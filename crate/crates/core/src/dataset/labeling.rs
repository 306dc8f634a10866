use std::collections::{BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::Corpus;
use crate::{ClassIndex, Error, InstanceId, Result};

/// A label source for pool instances.
pub trait Oracle {
    fn answer(&mut self, id: InstanceId) -> Result<ClassIndex>;
}

/// Answers from the hidden ground-truth labels of the corpus.
pub struct SimulatedOracle<'a> {
    corpus: &'a Corpus,
}

impl<'a> SimulatedOracle<'a> {
    pub fn new(corpus: &'a Corpus) -> Self {
        SimulatedOracle { corpus }
    }
}

impl Oracle for SimulatedOracle<'_> {
    fn answer(&mut self, id: InstanceId) -> Result<ClassIndex> {
        self.corpus.label(id).ok_or(Error::MissingOracleLabel(id))
    }
}

/// Answers submitted by a human annotator, consumed once each.
#[derive(Debug, Default, Clone)]
pub struct HumanOracle {
    answers: HashMap<InstanceId, ClassIndex>,
}

impl HumanOracle {
    pub fn new(answers: HashMap<InstanceId, ClassIndex>) -> Self {
        HumanOracle { answers }
    }

    pub fn submit(&mut self, id: InstanceId, label: ClassIndex) {
        self.answers.insert(id, label);
    }

    pub fn has_answer(&self, id: InstanceId) -> bool {
        self.answers.contains_key(&id)
    }
}

impl Oracle for HumanOracle {
    fn answer(&mut self, id: InstanceId) -> Result<ClassIndex> {
        self.answers.remove(&id).ok_or(Error::NoPendingAnswer(id))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledEntry {
    pub id: InstanceId,
    pub label: ClassIndex,
    /// Round in which the label was acquired; 0 is the bootstrap.
    pub round: usize,
}

/// The growing training set, in acquisition order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LabeledSet {
    entries: Vec<LabeledEntry>,
    ids: HashSet<InstanceId>,
}

impl LabeledSet {
    pub fn entries(&self) -> &[LabeledEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, id: InstanceId) -> bool {
        self.ids.contains(&id)
    }

    pub fn labels(&self) -> impl Iterator<Item = ClassIndex> + '_ {
        self.entries.iter().map(|e| e.label)
    }

    fn push(&mut self, entry: LabeledEntry) {
        debug_assert!(self.entries.last().is_none_or(|e| e.round <= entry.round));
        self.ids.insert(entry.id);
        self.entries.push(entry);
    }
}

/// The labeled/unlabeled partition of the pool split.
#[derive(Debug, Clone)]
pub struct LabelingState {
    num_classes: usize,
    pool: BTreeSet<InstanceId>,
    unlabeled: BTreeSet<InstanceId>,
    labeled: LabeledSet,
}

impl LabelingState {
    pub fn new(corpus: &Corpus) -> Self {
        let pool: BTreeSet<_> = corpus.splits().pool.iter().copied().collect();
        LabelingState {
            num_classes: corpus.num_classes(),
            unlabeled: pool.clone(),
            pool,
            labeled: LabeledSet::default(),
        }
    }

    pub fn labeled(&self) -> &LabeledSet {
        &self.labeled
    }

    pub fn unlabeled(&self) -> &BTreeSet<InstanceId> {
        &self.unlabeled
    }

    pub fn is_unlabeled(&self, id: InstanceId) -> bool {
        self.unlabeled.contains(&id)
    }

    /// Checks that `id` may be queried without asking anyone.
    pub fn check_queryable(&self, id: InstanceId) -> Result<()> {
        if self.labeled.contains(id) {
            return Err(Error::AlreadyLabeled(id));
        }
        if !self.pool.contains(&id) {
            return Err(Error::NotInPool(id));
        }
        Ok(())
    }

    /// Asks `oracle` for the label of an unlabeled pool instance and moves it
    /// into the labeled set, tagged with `round`.
    pub fn query(
        &mut self,
        id: InstanceId,
        round: usize,
        oracle: &mut dyn Oracle,
    ) -> Result<ClassIndex> {
        self.check_queryable(id)?;
        let label = oracle.answer(id)?;
        if label >= self.num_classes {
            return Err(Error::ClassOutOfRange {
                index: label,
                num_classes: self.num_classes,
            });
        }
        self.unlabeled.remove(&id);
        self.labeled.push(LabeledEntry { id, label, round });
        Ok(label)
    }
}
