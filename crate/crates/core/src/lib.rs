//! Pool-based active learning with dynamic clustering.
//!
//! The crate is organised around the labeling loop:
//!
//! * [`dataset`] loads corpora, owns the pool/dev/test splits and answers
//!   oracle queries.
//! * [`featurizer`] turns raw text into TF-IDF weighted character n-gram vectors.
//! * [`clustering`] is a seeded Lloyd's k-means used for top-level clusters,
//!   dev partitioning and per-round subclustering.
//! * [`learner`] holds the probabilistic classifiers that are retrained every round.
//! * [`acquisition`] scores instances by predictive uncertainty.
//! * [`strategies`] implements Random, TopN, Cluster-TopN and D-CALM batch
//!   selection plus the run state machine.
//! * [`metrics`] computes macro-F1 and label/error distribution reports.
//! * [`harness`] runs strategy × budget × seed grids and compares curves.

pub mod acquisition;
pub mod clustering;
pub mod dataset;
mod error;
pub mod featurizer;
pub mod harness;
pub mod learner;
pub mod metrics;
pub mod seed;
pub mod strategies;

pub use error::{Error, Result};

/// Identifier of a corpus instance, unique within a corpus.
pub type InstanceId = u64;

/// Dense class index in `[0, num_classes)`.
pub type ClassIndex = usize;
