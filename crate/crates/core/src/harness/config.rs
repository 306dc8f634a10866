use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dataset::{generate_synthetic, load_corpus, Corpus, LoadOptions, SyntheticConfig};
use crate::learner::TrainConfig;
use crate::strategies::StrategyConfig;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum CorpusSource {
    File {
        path: PathBuf,
        #[serde(flatten)]
        options: LoadOptions,
    },
    Synthetic {
        #[serde(flatten)]
        config: SyntheticConfig,
        #[serde(default)]
        seed: u64,
    },
}

impl CorpusSource {
    pub fn load(&self) -> Result<Corpus> {
        match self {
            CorpusSource::File { path, options } => load_corpus(path, options),
            CorpusSource::Synthetic { config, seed } => generate_synthetic(config, *seed),
        }
    }

    fn resolve_relative_to(&mut self, base: &Path) {
        if let CorpusSource::File { path, .. } = self {
            if path.is_relative() {
                *path = base.join(&*path);
            }
        }
    }
}

/// A strategy entry of an experiment; `budget` and `seed` come from the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategySpec {
    /// Label used in output files; defaults to the strategy kind.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(flatten)]
    pub config: StrategyConfig,
}

impl StrategySpec {
    pub fn label(&self) -> String {
        self.name
            .clone()
            .unwrap_or_else(|| self.config.kind.name().to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub corpus: CorpusSource,
    #[serde(default)]
    pub learner: TrainConfig,
    pub strategies: Vec<StrategySpec>,
    pub budgets: Vec<usize>,
    pub seeds: Vec<u64>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("results")
}

impl ExperimentConfig {
    /// Reads a TOML (or, by extension, JSON) experiment file. Relative paths
    /// inside are resolved against the file's directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config: ExperimentConfig =
            if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
                serde_json::from_str(&text)?
            } else {
                toml::from_str(&text)?
            };
        let base = path.parent().unwrap_or(Path::new("."));
        config.corpus.resolve_relative_to(base);
        if config.output_dir.is_relative() {
            config.output_dir = base.join(&config.output_dir);
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.strategies.is_empty() {
            return Err(Error::InvalidConfig("no strategies".into()));
        }
        if self.budgets.is_empty() {
            return Err(Error::InvalidConfig("no budgets".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::InvalidConfig("no seeds".into()));
        }
        let mut labels = HashSet::new();
        for s in &self.strategies {
            let label = s.label();
            if label.is_empty() || label.contains([',', '/', '\\']) {
                return Err(Error::InvalidConfig(format!("bad strategy name {label:?}")));
            }
            if !labels.insert(label.clone()) {
                return Err(Error::InvalidConfig(format!("duplicate strategy name {label:?}")));
            }
        }
        let distinct: HashSet<_> = self.budgets.iter().collect();
        if distinct.len() != self.budgets.len() {
            return Err(Error::InvalidConfig("duplicate budgets".into()));
        }
        let distinct: HashSet<_> = self.seeds.iter().collect();
        if distinct.len() != self.seeds.len() {
            return Err(Error::InvalidConfig("duplicate seeds".into()));
        }
        self.learner.validate()
    }
}
