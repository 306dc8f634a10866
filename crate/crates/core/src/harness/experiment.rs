use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::dataset::Corpus;
use crate::metrics::DistributionReport;
use crate::strategies::{run_active_learning, RunLog, StrategyConfig};
use crate::{Error, Result};

/// Final test scores of one (strategy, budget, seed) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub strategy: String,
    pub budget: usize,
    pub seed: u64,
    pub macro_f1: f64,
    pub accuracy: f64,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    /// Cells in config order: strategy, then budget, then seed.
    pub points: Vec<CurvePoint>,
    pub logs: Vec<RunLog>,
    pub curves_path: PathBuf,
    pub mean_curves_path: PathBuf,
}

struct Cell {
    label: String,
    config: StrategyConfig,
}

/// Runs the full strategy × budget × seed grid and writes
///
/// * `curves.csv` with one row per cell,
/// * `curves_mean.csv` with seed-averaged rows (`seed` column = `mean`),
/// * `runs/<label>_b<budget>_s<seed>.json` with the run log,
/// * `reports/<label>_b<budget>_s<seed>.jsonl` with one distribution report per round.
///
/// Cells run in parallel; output bytes depend only on the config.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    config.validate()?;
    let corpus = Arc::new(config.corpus.load()?);
    corpus.require_pool_labels()?;

    let mut cells = Vec::new();
    for spec in &config.strategies {
        for &budget in &config.budgets {
            for &seed in &config.seeds {
                let strategy = StrategyConfig {
                    budget,
                    seed,
                    ..spec.config.clone()
                };
                strategy.validate(corpus.splits().pool.len())?;
                cells.push(Cell {
                    label: spec.label(),
                    config: strategy,
                });
            }
        }
    }

    let results: Vec<(CurvePoint, RunLog)> = cells
        .par_iter()
        .map(|cell| run_cell(&corpus, cell, config))
        .collect::<Result<_>>()?;

    let out = &config.output_dir;
    let runs_dir = out.join("runs");
    let reports_dir = out.join("reports");
    for dir in [out, &runs_dir, &reports_dir] {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    for (point, log) in &results {
        let stem = format!("{}_b{}_s{}", point.strategy, point.budget, point.seed);
        write_bytes(&runs_dir.join(format!("{stem}.json")), &serde_json::to_vec_pretty(log)?)?;
        let mut lines = Vec::new();
        for report in round_reports(&point.strategy, log) {
            serde_json::to_writer(&mut lines, &report)?;
            lines.push(b'\n');
        }
        write_bytes(&reports_dir.join(format!("{stem}.jsonl")), &lines)?;
    }

    let (points, logs): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let curves_path = out.join("curves.csv");
    write_curves(&curves_path, &points)?;
    let mean_curves_path = out.join("curves_mean.csv");
    write_mean_curves(&mean_curves_path, &points)?;
    Ok(ExperimentOutput {
        points,
        logs,
        curves_path,
        mean_curves_path,
    })
}

fn run_cell(corpus: &Arc<Corpus>, cell: &Cell, config: &ExperimentConfig) -> Result<(CurvePoint, RunLog)> {
    let log = run_active_learning(Arc::clone(corpus), &cell.config, &config.learner)?;
    let last = log.last().ok_or(Error::Empty("run produced no rounds"))?;
    let (Some(macro_f1), Some(accuracy)) = (last.test_macro_f1, last.test_accuracy) else {
        return Err(Error::InvalidCorpus("test split is empty".into()));
    };
    let point = CurvePoint {
        strategy: cell.label.clone(),
        budget: cell.config.budget,
        seed: cell.config.seed,
        macro_f1,
        accuracy,
    };
    Ok((point, log))
}

fn round_reports(label: &str, log: &RunLog) -> Vec<DistributionReport> {
    let names = &log.class_names;
    log.rounds
        .iter()
        .map(|r| DistributionReport {
            strategy: label.to_string(),
            round: r.round,
            label_counts: names.iter().cloned().zip(r.label_counts.iter().copied()).collect(),
            test_error_counts: names.iter().cloned().zip(r.test_error_counts.iter().copied()).collect(),
            allocations: r.allocations.clone(),
            cluster_accuracies: r.cluster_accuracies.clone(),
        })
        .collect()
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(bytes).map_err(|e| Error::io(path, e))
}

fn write_curves(path: &Path, points: &[CurvePoint]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    for p in points {
        writer.serialize(p)?;
    }
    writer.flush().map_err(|e| Error::io(path, e))
}

fn write_mean_curves(path: &Path, points: &[CurvePoint]) -> Result<()> {
    // Keep the config order of strategies and budgets.
    let mut order: Vec<(String, usize)> = Vec::new();
    let mut sums: BTreeMap<(String, usize), (f64, f64, usize)> = BTreeMap::new();
    for p in points {
        let key = (p.strategy.clone(), p.budget);
        let entry = sums.entry(key.clone()).or_insert_with(|| {
            order.push(key);
            (0.0, 0.0, 0)
        });
        entry.0 += p.macro_f1;
        entry.1 += p.accuracy;
        entry.2 += 1;
    }
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(["strategy", "budget", "seed", "macro_f1", "accuracy"])?;
    for key in order {
        let (f1, acc, n) = sums[&key];
        writer.write_record([
            key.0.clone(),
            key.1.to_string(),
            "mean".to_string(),
            (f1 / n as f64).to_string(),
            (acc / n as f64).to_string(),
        ])?;
    }
    writer.flush().map_err(|e| Error::io(path, e))
}
