use std::path::PathBuf;

use crate::InstanceId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("instance {id}: expected feature dimension {expected}, found {found}")]
    Dimension {
        id: InstanceId,
        expected: usize,
        found: usize,
    },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("unknown class name {0:?}")]
    UnknownClass(String),
    #[error("class index {index} out of range for {num_classes} classes")]
    ClassOutOfRange { index: usize, num_classes: usize },
    #[error("{split} instance {id} has no label")]
    UnlabeledSplit { split: &'static str, id: InstanceId },
    #[error("invalid corpus: {0}")]
    InvalidCorpus(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("instance {0} is already labeled")]
    AlreadyLabeled(InstanceId),
    #[error("instance {0} is not in the pool")]
    NotInPool(InstanceId),
    #[error("no hidden label for pool instance {0}")]
    MissingOracleLabel(InstanceId),
    #[error("no pending answer for instance {0}")]
    NoPendingAnswer(InstanceId),
    #[error("invalid probability vector: {0}")]
    InvalidProbabilities(String),
    #[error("no probabilities for instance {0}")]
    MissingProbabilities(InstanceId),
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("k = {k} exceeds the number of points ({points})")]
    TooManyClusters { k: usize, points: usize },
    #[error("no unlabeled instances left to select from")]
    PoolExhausted,
    #[error("batch submission does not match the pending batch: {0}")]
    BatchMismatch(String),
    #[error("{0}")]
    Compare(String),
    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("config parse error: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
