use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Macro-F1 difference thresholds, in F1 points.
pub const DEFAULT_THRESHOLDS: [f64; 5] = [0.0, 1.0, 3.0, 5.0, 10.0];

#[derive(Debug, Clone, Deserialize)]
struct CurveRow {
    strategy: String,
    budget: usize,
    #[allow(dead_code)]
    seed: String,
    macro_f1: f64,
    #[allow(dead_code)]
    accuracy: f64,
}

/// Seed-averaged macro-F1 per strategy and budget.
pub type Curves = BTreeMap<String, BTreeMap<usize, f64>>;

/// Reads curve CSV files and averages macro-F1 over the rows of each
/// (strategy, budget), so per-seed and pre-averaged files both work.
pub fn read_curves(paths: &[&Path]) -> Result<Curves> {
    let mut sums: BTreeMap<String, BTreeMap<usize, (f64, usize)>> = BTreeMap::new();
    for path in paths {
        let mut reader = csv::Reader::from_path(path)?;
        for row in reader.deserialize() {
            let row: CurveRow = row?;
            let cell = sums.entry(row.strategy).or_default().entry(row.budget).or_default();
            cell.0 += row.macro_f1;
            cell.1 += 1;
        }
    }
    Ok(sums
        .into_iter()
        .map(|(s, budgets)| {
            let means = budgets.into_iter().map(|(b, (sum, n))| (b, sum / n as f64)).collect();
            (s, means)
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BaselineComparison {
    pub baseline: String,
    pub budgets: Vec<usize>,
    /// Reference minus baseline, in F1 points, per budget.
    pub diffs: Vec<f64>,
    /// Budgets where the difference exceeds each threshold.
    pub wins: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareReport {
    pub reference: String,
    pub thresholds: Vec<f64>,
    pub baselines: Vec<BaselineComparison>,
}

/// Counts, for every baseline, the budgets where `reference` beats it by more
/// than each threshold (in macro-F1 points). All strategies must share one
/// budget grid.
pub fn compare(curves: &Curves, reference: &str, thresholds: &[f64]) -> Result<CompareReport> {
    if curves.len() < 2 {
        return Err(Error::Compare("need curves for at least two strategies".into()));
    }
    let reference_curve = curves
        .get(reference)
        .ok_or_else(|| Error::Compare(format!("no curve for reference strategy {reference:?}")))?;
    let grid: Vec<usize> = reference_curve.keys().copied().collect();
    let mut baselines = Vec::new();
    for (name, curve) in curves {
        if name == reference {
            continue;
        }
        let budgets: Vec<usize> = curve.keys().copied().collect();
        if budgets != grid {
            return Err(Error::Compare(format!(
                "budget grid of {name:?} {budgets:?} differs from {reference:?} {grid:?}"
            )));
        }
        let diffs: Vec<f64> = grid
            .iter()
            .map(|b| (reference_curve[b] - curve[b]) * 100.0)
            .collect();
        let wins = thresholds
            .iter()
            .map(|&t| diffs.iter().filter(|&&d| d > t).count())
            .collect();
        baselines.push(BaselineComparison {
            baseline: name.clone(),
            budgets,
            diffs,
            wins,
        });
    }
    Ok(CompareReport {
        reference: reference.to_string(),
        thresholds: thresholds.to_vec(),
        baselines,
    })
}

pub fn compare_files(paths: &[&Path], reference: &str, thresholds: &[f64]) -> Result<CompareReport> {
    compare(&read_curves(paths)?, reference, thresholds)
}

impl fmt::Display for CompareReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:>8}", "diff")?;
        for b in &self.baselines {
            write!(f, " | {:>20}", format!("{} > {}", self.reference, b.baseline))?;
        }
        writeln!(f)?;
        for (i, t) in self.thresholds.iter().enumerate() {
            write!(f, "{:>8}", format!("> {t}"))?;
            for b in &self.baselines {
                write!(f, " | {:>20}", format!("{}/{}", b.wins[i], b.budgets.len()))?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}
