//! Corpus ingestion, splits, and the labeled/unlabeled partition of the pool.

mod labeling;
mod synthetic;

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::featurizer::{TfidfModel, TfidfParams};
use crate::seed;
use crate::{ClassIndex, Error, InstanceId, Result};

pub use labeling::{
    HumanOracle, LabeledEntry, LabeledSet, LabelingState, Oracle, SimulatedOracle,
};
pub use synthetic::{generate_synthetic, SyntheticConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub id: InstanceId,
    pub text: Option<String>,
    pub features: Option<Vec<f64>>,
    pub label: Option<ClassIndex>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitName {
    Pool,
    Dev,
    Test,
}

impl SplitName {
    pub fn as_str(self) -> &'static str {
        match self {
            SplitName::Pool => "pool",
            SplitName::Dev => "dev",
            SplitName::Test => "test",
        }
    }
}

/// Disjoint id sets, each sorted ascending.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Splits {
    pub pool: Vec<InstanceId>,
    pub dev: Vec<InstanceId>,
    pub test: Vec<InstanceId>,
}

impl Splits {
    pub fn get(&self, split: SplitName) -> &[InstanceId] {
        match split {
            SplitName::Pool => &self.pool,
            SplitName::Dev => &self.dev,
            SplitName::Test => &self.test,
        }
    }

    /// Seeded 70/10/20 pool/dev/test split over `ids`.
    pub fn seeded_default(ids: &[InstanceId], seed: u64) -> Splits {
        let mut shuffled = ids.to_vec();
        shuffled.sort_unstable();
        shuffled.shuffle(&mut seed::rng(seed));
        let n = shuffled.len();
        let n_pool = (n * 7 + 5) / 10;
        let n_dev = ((n + 5) / 10).min(n - n_pool);
        let mut pool = shuffled[..n_pool].to_vec();
        let mut dev = shuffled[n_pool..n_pool + n_dev].to_vec();
        let mut test = shuffled[n_pool + n_dev..].to_vec();
        pool.sort_unstable();
        dev.sort_unstable();
        test.sort_unstable();
        Splits { pool, dev, test }
    }
}

/// Where instance vectors come from when loading a corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureSource {
    /// Use the `vector` field of every record.
    #[default]
    Precomputed,
    /// Fit TF-IDF character n-grams on the pool texts and featurize every record.
    Tfidf(TfidfParams),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LoadOptions {
    pub features: FeatureSource,
    /// Fixed class order. When absent, the sorted set of label names is used.
    pub class_names: Option<Vec<String>>,
    /// Seed of the shuffle behind the default split.
    pub split_seed: u64,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            features: FeatureSource::Precomputed,
            class_names: None,
            split_seed: 0,
        }
    }
}

/// One JSONL line of a corpus file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Record {
    id: InstanceId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    vector: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    split: Option<SplitName>,
}

/// A validated, immutable labeled corpus with pool/dev/test splits.
#[derive(Debug, Clone)]
pub struct Corpus {
    instances: Vec<Instance>,
    index: HashMap<InstanceId, usize>,
    class_names: Vec<String>,
    splits: Splits,
    feature_dim: usize,
}

impl PartialEq for Corpus {
    fn eq(&self, other: &Self) -> bool {
        self.instances == other.instances
            && self.class_names == other.class_names
            && self.splits == other.splits
            && self.feature_dim == other.feature_dim
    }
}

impl Corpus {
    /// Builds a corpus and checks every structural invariant.
    ///
    /// All instances must carry features of one shared dimension. Dev and test
    /// instances must be labeled; pool labels are optional (human-oracle mode).
    pub fn new(
        mut instances: Vec<Instance>,
        class_names: Vec<String>,
        splits: Splits,
    ) -> Result<Corpus> {
        if instances.is_empty() {
            return Err(Error::Empty("corpus has no instances"));
        }
        if class_names.is_empty() {
            return Err(Error::InvalidCorpus("no classes".into()));
        }
        let distinct: HashSet<&String> = class_names.iter().collect();
        if distinct.len() != class_names.len() {
            return Err(Error::InvalidCorpus("duplicate class names".into()));
        }
        instances.sort_by_key(|i| i.id);
        let mut index = HashMap::with_capacity(instances.len());
        for (pos, inst) in instances.iter().enumerate() {
            if index.insert(inst.id, pos).is_some() {
                return Err(Error::InvalidCorpus(format!("duplicate id {}", inst.id)));
            }
        }

        let feature_dim = match instances[0].features.as_ref() {
            Some(v) => v.len(),
            None => {
                return Err(Error::InvalidCorpus(format!(
                    "instance {} has no feature vector",
                    instances[0].id
                )))
            }
        };
        if feature_dim == 0 {
            return Err(Error::InvalidCorpus("feature dimension is zero".into()));
        }
        for inst in &instances {
            let features = inst.features.as_ref().ok_or_else(|| {
                Error::InvalidCorpus(format!("instance {} has no feature vector", inst.id))
            })?;
            if features.len() != feature_dim {
                return Err(Error::Dimension {
                    id: inst.id,
                    expected: feature_dim,
                    found: features.len(),
                });
            }
            if let Some(label) = inst.label {
                if label >= class_names.len() {
                    return Err(Error::ClassOutOfRange {
                        index: label,
                        num_classes: class_names.len(),
                    });
                }
            }
        }

        let mut seen = HashSet::new();
        let mut splits = splits;
        for (name, ids) in [
            ("pool", &mut splits.pool),
            ("dev", &mut splits.dev),
            ("test", &mut splits.test),
        ] {
            ids.sort_unstable();
            for &id in ids.iter() {
                if !index.contains_key(&id) {
                    return Err(Error::InvalidCorpus(format!(
                        "{name} split references unknown id {id}"
                    )));
                }
                if !seen.insert(id) {
                    return Err(Error::InvalidCorpus(format!(
                        "id {id} appears in more than one split"
                    )));
                }
            }
        }
        for (name, ids) in [("dev", &splits.dev), ("test", &splits.test)] {
            for &id in ids {
                if instances[index[&id]].label.is_none() {
                    return Err(Error::UnlabeledSplit { split: name, id });
                }
            }
        }

        Ok(Corpus {
            instances,
            index,
            class_names,
            splits,
            feature_dim,
        })
    }

    pub fn instances(&self) -> &[Instance] {
        &self.instances
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn splits(&self) -> &Splits {
        &self.splits
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn get(&self, id: InstanceId) -> Option<&Instance> {
        self.index.get(&id).map(|&pos| &self.instances[pos])
    }

    pub fn contains(&self, id: InstanceId) -> bool {
        self.index.contains_key(&id)
    }

    /// Feature vector of `id`. Panics on unknown ids.
    pub fn features(&self, id: InstanceId) -> &[f64] {
        self.instances[self.index[&id]]
            .features
            .as_deref()
            .expect("validated corpus instances carry features")
    }

    pub fn label(&self, id: InstanceId) -> Option<ClassIndex> {
        self.get(id).and_then(|i| i.label)
    }

    pub fn class_index(&self, name: &str) -> Option<ClassIndex> {
        self.class_names.iter().position(|c| c == name)
    }

    /// `(vector, label)` pairs for the labeled members of `ids`.
    pub fn labeled_examples<'a>(&'a self, ids: &[InstanceId]) -> Vec<(&'a [f64], ClassIndex)> {
        ids.iter()
            .filter_map(|&id| self.label(id).map(|l| (self.features(id), l)))
            .collect()
    }

    /// Simulated-oracle mode requires every pool instance to carry a hidden label.
    pub fn require_pool_labels(&self) -> Result<()> {
        match self.splits.pool.iter().find(|&&id| self.label(id).is_none()) {
            Some(&id) => Err(Error::UnlabeledSplit { split: "pool", id }),
            None => Ok(()),
        }
    }

    /// Human-oracle mode requires text for every pool instance.
    pub fn require_pool_text(&self) -> Result<()> {
        match self
            .splits
            .pool
            .iter()
            .find(|&&id| self.get(id).and_then(|i| i.text.as_ref()).is_none())
        {
            Some(&id) => Err(Error::InvalidCorpus(format!(
                "pool instance {id} has no text to show an annotator"
            ))),
            None => Ok(()),
        }
    }

    pub fn split_of(&self, id: InstanceId) -> Option<SplitName> {
        [SplitName::Pool, SplitName::Dev, SplitName::Test]
            .into_iter()
            .find(|&s| self.splits.get(s).binary_search(&id).is_ok())
    }

    /// Writes the corpus as JSONL, one record per instance in id order.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for inst in &self.instances {
            let record = Record {
                id: inst.id,
                text: inst.text.clone(),
                vector: inst.features.clone(),
                label: inst.label.map(|l| self.class_names[l].clone()),
                split: self.split_of(inst.id),
            };
            serde_json::to_writer(&mut out, &record)?;
            out.write_all(b"\n")
                .map_err(|e| Error::io("<corpus writer>", e))?;
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut writer = std::io::BufWriter::new(file);
        self.write_jsonl(&mut writer)?;
        writer.flush().map_err(|e| Error::io(path, e))
    }
}

/// Loads and validates a JSONL corpus file.
pub fn load_corpus(path: &Path, options: &LoadOptions) -> Result<Corpus> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_corpus(BufReader::new(file), options)
}

/// Parses a JSONL corpus from any buffered reader.
pub fn read_corpus<R: BufRead>(reader: R, options: &LoadOptions) -> Result<Corpus> {
    let mut records = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<corpus reader>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: Record = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: lineno + 1,
            message: e.to_string(),
        })?;
        if record.text.is_none() && record.vector.is_none() {
            return Err(Error::Parse {
                line: lineno + 1,
                message: format!("instance {} has neither text nor vector", record.id),
            });
        }
        records.push(record);
    }
    if records.is_empty() {
        return Err(Error::Empty("corpus file has no records"));
    }

    let class_names = match &options.class_names {
        Some(names) => names.clone(),
        None => records
            .iter()
            .filter_map(|r| r.label.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect(),
    };

    let with_split = records.iter().filter(|r| r.split.is_some()).count();
    let splits = if with_split == 0 {
        let ids: Vec<_> = records.iter().map(|r| r.id).collect();
        Splits::seeded_default(&ids, options.split_seed)
    } else if with_split == records.len() {
        let mut splits = Splits::default();
        for r in &records {
            match r.split.expect("checked above") {
                SplitName::Pool => splits.pool.push(r.id),
                SplitName::Dev => splits.dev.push(r.id),
                SplitName::Test => splits.test.push(r.id),
            }
        }
        splits
    } else {
        return Err(Error::InvalidCorpus(
            "the split field must be present on every line or on none".into(),
        ));
    };

    let mut instances = Vec::with_capacity(records.len());
    for r in records {
        let label = match r.label {
            Some(name) => Some(
                class_names
                    .iter()
                    .position(|c| *c == name)
                    .ok_or(Error::UnknownClass(name))?,
            ),
            None => None,
        };
        instances.push(Instance {
            id: r.id,
            text: r.text,
            features: r.vector,
            label,
        });
    }

    if let FeatureSource::Tfidf(params) = &options.features {
        featurize_text(&mut instances, &splits.pool, params)?;
    }
    Corpus::new(instances, class_names, splits)
}

/// Replaces every instance's features with TF-IDF vectors fitted on the pool texts.
fn featurize_text(
    instances: &mut [Instance],
    pool: &[InstanceId],
    params: &TfidfParams,
) -> Result<()> {
    if let Some(inst) = instances.iter().find(|i| i.text.is_none()) {
        return Err(Error::InvalidCorpus(format!(
            "instance {} has no text for the tfidf featurizer",
            inst.id
        )));
    }
    let pool: HashSet<_> = pool.iter().copied().collect();
    let mut fit_texts: Vec<(InstanceId, &str)> = instances
        .iter()
        .filter(|i| pool.contains(&i.id))
        .map(|i| (i.id, i.text.as_deref().unwrap_or_default()))
        .collect();
    fit_texts.sort_by_key(|(id, _)| *id);
    let texts: Vec<&str> = fit_texts.into_iter().map(|(_, t)| t).collect();
    let model = TfidfModel::fit(&texts, params)?;
    let dim = model.len().max(1);
    for inst in instances.iter_mut() {
        let text = inst.text.as_deref().unwrap_or_default();
        inst.features = Some(model.transform_dense(text, dim));
    }
    Ok(())
}
