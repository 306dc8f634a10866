//! Experiment grids over strategies, budgets and seeds.

mod compare;
mod config;
mod experiment;

pub use compare::{compare, compare_files, read_curves, BaselineComparison, CompareReport, Curves, DEFAULT_THRESHOLDS};
pub use config::{CorpusSource, ExperimentConfig, StrategySpec};
pub use experiment::{run_experiment, CurvePoint, ExperimentOutput};
