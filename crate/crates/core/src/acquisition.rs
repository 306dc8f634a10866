//! Uncertainty scores over predicted class distributions.
//!
//! Every measure follows the "higher is more informative" convention, so the
//! smallest-margin score is the negated gap between the two top classes.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::{Error, InstanceId, Result};

/// Predicted class distributions keyed by instance.
pub type ProbTable = HashMap<InstanceId, Vec<f64>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UncertaintyMeasure {
    LeastConfident,
    SmallestMargin,
    #[default]
    Entropy,
}

impl UncertaintyMeasure {
    pub const ALL: [UncertaintyMeasure; 3] = [
        UncertaintyMeasure::LeastConfident,
        UncertaintyMeasure::SmallestMargin,
        UncertaintyMeasure::Entropy,
    ];
}

const SUM_TOLERANCE: f64 = 1e-6;

fn validate(probs: &[f64]) -> Result<()> {
    if probs.len() < 2 {
        return Err(Error::InvalidProbabilities(format!(
            "need at least 2 classes, got {}",
            probs.len()
        )));
    }
    if let Some(p) = probs.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
        return Err(Error::InvalidProbabilities(format!("entry {p} is not a probability")));
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > SUM_TOLERANCE {
        return Err(Error::InvalidProbabilities(format!("entries sum to {sum}")));
    }
    Ok(())
}

/// Informativeness of one prediction under `measure`.
pub fn score(probs: &[f64], measure: UncertaintyMeasure) -> Result<f64> {
    validate(probs)?;
    Ok(match measure {
        UncertaintyMeasure::LeastConfident => {
            1.0 - probs.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        }
        UncertaintyMeasure::SmallestMargin => {
            let (mut first, mut second) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
            for &p in probs {
                if p > first {
                    second = first;
                    first = p;
                } else if p > second {
                    second = p;
                }
            }
            -(first - second)
        }
        UncertaintyMeasure::Entropy => -probs
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|&p| p * p.ln())
            .sum::<f64>(),
    })
}

/// Scores `candidates` and returns `(id, score)` sorted most informative first,
/// ties by ascending id.
pub fn rank(
    candidates: &[InstanceId],
    probs: &ProbTable,
    measure: UncertaintyMeasure,
) -> Result<Vec<(InstanceId, f64)>> {
    let mut scored = candidates
        .iter()
        .map(|&id| {
            let p = probs.get(&id).ok_or(Error::MissingProbabilities(id))?;
            Ok((id, score(p, measure)?))
        })
        .collect::<Result<Vec<_>>>()?;
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    Ok(scored)
}

/// The single most informative candidate; ties go to the lowest id.
pub fn most_informative(
    candidates: &[InstanceId],
    probs: &ProbTable,
    measure: UncertaintyMeasure,
) -> Result<InstanceId> {
    if candidates.is_empty() {
        return Err(Error::Empty("no candidates"));
    }
    let mut best: Option<(InstanceId, f64)> = None;
    for &id in candidates {
        let p = probs.get(&id).ok_or(Error::MissingProbabilities(id))?;
        let s = score(p, measure)?;
        best = match best {
            Some((bid, bs)) if bs > s || (bs == s && bid < id) => Some((bid, bs)),
            _ => Some((id, s)),
        };
    }
    Ok(best.expect("non-empty").0)
}
