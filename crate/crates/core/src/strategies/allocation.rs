//! Integer batch allocation across clusters.
//!
//! Real-valued shares `total · w_i / Σ w_j` are rounded with the largest
//! remainder (Hamilton) method: floors first, then one extra unit to each of
//! the largest fractional parts, ties to the lowest index. Weights are exact
//! rationals so equal remainders really compare equal.

use num::{BigInt, BigRational, One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::metrics::ConfusionMatrix;
use crate::ClassIndex;

/// What a dev partition contributes to its cluster's allocation weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AllocationMetric {
    /// `1 − accuracy` on the partition.
    #[default]
    ErrorRate,
    /// `FN / (FN + TP)` for one class of interest.
    FalseNegativeRate { positive_class: ClassIndex },
}

fn ratio(numer: u64, denom: u64) -> BigRational {
    BigRational::new(BigInt::from(numer), BigInt::from(denom))
}

/// Exact rational value of a finite float.
pub fn exact(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite weight")
}

/// Nearest float, for reporting.
pub fn approx(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

impl AllocationMetric {
    /// `None` when the partition gives no evidence (no examples, or no
    /// positives for the false-negative rate).
    pub fn weight(&self, confusion: &ConfusionMatrix) -> Option<BigRational> {
        match *self {
            AllocationMetric::ErrorRate => {
                let total = confusion.total();
                (total > 0).then(|| ratio(total - confusion.correct(), total))
            }
            AllocationMetric::FalseNegativeRate { positive_class } => {
                let tp = confusion.true_positives(positive_class);
                let fn_ = confusion.false_negatives(positive_class);
                (tp + fn_ > 0).then(|| ratio(fn_, tp + fn_))
            }
        }
    }
}

/// Fills undefined weights with the mean of the defined ones and falls back to
/// uniform weights when nothing is positive.
pub fn impute_weights(raw: &[Option<BigRational>]) -> Vec<BigRational> {
    let defined: Vec<&BigRational> = raw.iter().flatten().collect();
    let mean = if defined.is_empty() {
        BigRational::zero()
    } else {
        defined.iter().copied().sum::<BigRational>() / BigRational::from_integer(defined.len().into())
    };
    let weights: Vec<BigRational> = raw
        .iter()
        .map(|w| {
            let w = w.as_ref().unwrap_or(&mean);
            if w.is_negative() {
                BigRational::zero()
            } else {
                w.clone()
            }
        })
        .collect();
    if weights.iter().all(Zero::is_zero) {
        vec![BigRational::one(); raw.len()]
    } else {
        weights
    }
}

/// A rounded apportionment and the order in which surplus units are handed out.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Apportionment {
    pub counts: Vec<usize>,
    /// Indices by descending fractional remainder, ties by ascending index.
    pub remainder_order: Vec<usize>,
}

/// Largest-remainder rounding of `total · w_i / Σ w_j`. Negative weights count
/// as zero; an all-zero vector is treated as uniform.
pub fn largest_remainder(weights: &[BigRational], total: usize) -> Apportionment {
    let mut weights: Vec<BigRational> = weights
        .iter()
        .map(|w| if w.is_negative() { BigRational::zero() } else { w.clone() })
        .collect();
    if weights.iter().all(Zero::is_zero) {
        weights.iter_mut().for_each(|w| *w = BigRational::one());
    }
    let sum: BigRational = weights.iter().sum();
    let total_r = BigRational::from_integer(total.into());
    let mut counts = Vec::with_capacity(weights.len());
    let mut fractions = Vec::with_capacity(weights.len());
    for w in &weights {
        let quota = &total_r * w / &sum;
        let floor = quota.floor();
        fractions.push(&quota - &floor);
        counts.push(floor.to_integer().to_usize().expect("quota fits in usize"));
    }
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| fractions[b].cmp(&fractions[a]).then(a.cmp(&b)));
    let assigned: usize = counts.iter().sum();
    for &i in order.iter().take(total - assigned) {
        counts[i] += 1;
    }
    Apportionment {
        counts,
        remainder_order: order,
    }
}

/// Largest-remainder apportionment clamped to per-index capacities.
///
/// Units that do not fit are handed out one at a time, cycling through the
/// remainder order and skipping full indices. The result sums to
/// `min(total, Σ caps)`.
pub fn apportion_with_caps(weights: &[BigRational], total: usize, caps: &[usize]) -> Vec<usize> {
    assert_eq!(weights.len(), caps.len(), "one capacity per weight");
    let Apportionment {
        mut counts,
        remainder_order,
    } = largest_remainder(weights, total);
    let mut surplus = 0;
    for (c, &cap) in counts.iter_mut().zip(caps) {
        if *c > cap {
            surplus += *c - cap;
            *c = cap;
        }
    }
    while surplus > 0 {
        let mut progressed = false;
        for &i in &remainder_order {
            if surplus == 0 {
                break;
            }
            if counts[i] < caps[i] {
                counts[i] += 1;
                surplus -= 1;
                progressed = true;
            }
        }
        if !progressed {
            break;
        }
    }
    counts
}
