//! Acceptance suite. Every test prints one `PASS`/`FAIL` line naming its
//! criterion before asserting, so `cargo test --test acceptance -- --nocapture`
//! reads as a checklist.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::sync::Arc;
use std::time::{Duration, Instant};

use dcalm::acquisition::{self, ProbTable, UncertaintyMeasure};
use dcalm::clustering::{kmeans, partition_by_centroids, ClusterModel, KMeansParams};
use dcalm::dataset::{generate_synthetic, Corpus, Instance, Splits, SyntheticConfig};
use dcalm::harness::{compare, run_experiment, ExperimentConfig, DEFAULT_THRESHOLDS};
use dcalm::learner::{objective, Classifier, LearnerKind, LinearWeights, TrainConfig};
use dcalm::metrics::ConfusionMatrix;
use dcalm::strategies::{
    exact, largest_remainder, run_active_learning, select_cluster_topn, select_dcalm, AllocationMetric,
    DcalmRound, StrategyConfig, StrategyKind,
};
use dcalm::{ClassIndex, InstanceId, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ALLOCATION_CASES: usize = 1_000;
const ALLOCATION_TIME_LIMIT: Duration = Duration::from_secs(5);
const BINARY_TRIALS: usize = 10_000;
const KMEANS_INSTANCES: usize = 100;
const GRADIENT_PROBLEMS: usize = 50;
const GRADIENT_REL_TOL: f64 = 1e-4;
const MACRO_F1_MATRICES: usize = 500;
const MACRO_F1_TOL: f64 = 1e-12;
const BIAS_SEEDS: [u64; 5] = [0, 1, 2, 3, 4];
const BIAS_MIN_RATIO: f64 = 1.5;
const BIAS_MIN_F1_WINS: usize = 4;
const BIAS_TIME_LIMIT: Duration = Duration::from_secs(120);

fn report(criterion: &str, ok: bool, detail: &str) {
    println!("{} {criterion}: {detail}", if ok { "PASS" } else { "FAIL" });
}

/// Predicts the class stored in the last feature, with 0.9 of the mass on it.
struct LastFeatureClassifier {
    num_classes: usize,
}

impl Classifier for LastFeatureClassifier {
    fn num_classes(&self) -> usize {
        self.num_classes
    }

    fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>> {
        let k = self.num_classes;
        let c = *x.last().unwrap() as usize;
        let rest = 0.1 / (k - 1) as f64;
        Ok((0..k).map(|i| if i == c { 0.9 } else { rest }).collect())
    }
}

/// `m` far-apart clusters. Cluster `c` holds `pool_per_cluster` pool points
/// and `dev[c].0` dev points of class 0, of which the first `dev[c].1` are
/// predicted correctly by [`LastFeatureClassifier`].
struct AllocationFixture {
    corpus: Corpus,
    clusters: ClusterModel,
    dev_partition: BTreeMap<usize, Vec<InstanceId>>,
}

fn allocation_fixture(
    dev: &[(usize, usize)],
    pool_per_cluster: usize,
    rng: &mut ChaCha8Rng,
) -> AllocationFixture {
    let m = dev.len();
    let dim = m + 1;
    let at = |c: usize, jitter: &mut ChaCha8Rng, predicted: usize| {
        let mut v: Vec<f64> = (0..m).map(|_| jitter.random_range(-1.0..1.0)).collect();
        v[c] += 100.0;
        v.push(predicted as f64);
        v
    };
    let mut instances = Vec::new();
    let mut splits = Splits::default();
    let mut next_id = 0u64;
    for (c, &(size, correct)) in dev.iter().enumerate() {
        for _ in 0..pool_per_cluster {
            let predicted = rng.random_range(0..2);
            instances.push(Instance {
                id: next_id,
                text: None,
                features: Some(at(c, rng, predicted)),
                label: Some(0),
            });
            splits.pool.push(next_id);
            next_id += 1;
        }
        for j in 0..size {
            let predicted = usize::from(j >= correct);
            instances.push(Instance {
                id: next_id,
                text: None,
                features: Some(at(c, rng, predicted)),
                label: Some(0),
            });
            splits.dev.push(next_id);
            next_id += 1;
        }
    }
    let corpus = Corpus::new(instances, vec!["a".into(), "b".into()], splits).unwrap();
    let centroids: Vec<Vec<f64>> = (0..m)
        .map(|c| {
            let mut v = vec![0.0; dim];
            v[c] = 100.0;
            v
        })
        .collect();
    let pool_points: Vec<_> = corpus
        .splits()
        .pool
        .iter()
        .map(|&id| (id, corpus.features(id)))
        .collect();
    let clusters = ClusterModel::from_centroids(centroids, &pool_points).unwrap();
    let dev_points: Vec<_> = corpus
        .splits()
        .dev
        .iter()
        .map(|&id| (id, corpus.features(id)))
        .collect();
    let dev_partition = partition_by_centroids(&clusters, &dev_points).unwrap();
    AllocationFixture {
        corpus,
        clusters,
        dev_partition,
    }
}

fn plan_dcalm(fixture: &AllocationFixture, n: usize, seed: u64) -> dcalm::strategies::RoundPlan {
    let unlabeled: BTreeSet<InstanceId> = fixture.corpus.splits().pool.iter().copied().collect();
    let model = LastFeatureClassifier { num_classes: 2 };
    select_dcalm(&DcalmRound {
        corpus: &fixture.corpus,
        clusters: &fixture.clusters,
        dev_partition: &fixture.dev_partition,
        model: &model,
        unlabeled: &unlabeled,
        measure: UncertaintyMeasure::Entropy,
        batch_size: n,
        metric: AllocationMetric::ErrorRate,
        kmeans: KMeansParams::default(),
        seed,
        round: 1,
    })
    .unwrap()
}

fn gcd(a: u128, b: u128) -> u128 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Hamilton apportionment of `n` seats for weights `1 − correct/size`, in
/// integers only. Weights are scaled to a common denominator; a quota's floor
/// and remainder are then the quotient and remainder of one integer division.
fn reference_allocation(dev: &[(usize, usize)], n: usize) -> Vec<usize> {
    let lcm = dev.iter().fold(1u128, |l, &(d, _)| l / gcd(l, d as u128) * d as u128);
    let mut w: Vec<u128> = dev
        .iter()
        .map(|&(d, c)| (d - c) as u128 * (lcm / d as u128))
        .collect();
    if w.iter().all(|&x| x == 0) {
        w = vec![1; dev.len()];
    }
    let s: u128 = w.iter().sum();
    let n = n as u128;
    let mut seats: Vec<usize> = w.iter().map(|&wi| (n * wi / s) as usize).collect();
    let left = n as usize - seats.iter().sum::<usize>();
    let mut by_remainder: Vec<(u128, usize)> =
        w.iter().enumerate().map(|(i, &wi)| (n * wi % s, i)).collect();
    by_remainder.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    for &(_, i) in by_remainder.iter().take(left) {
        seats[i] += 1;
    }
    seats
}

#[test]
fn allocation_matches_integer_reference() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xA110C);
    let start = Instant::now();
    let mut mismatches = Vec::new();
    let mut bad_sums = 0;
    for case in 0..ALLOCATION_CASES {
        let m = rng.random_range(1..=12);
        let n = rng.random_range(1..=64);
        let dev: Vec<(usize, usize)> = (0..m)
            .map(|_| {
                let size = rng.random_range(1..=12);
                (size, rng.random_range(0..=size))
            })
            .collect();
        let fixture = allocation_fixture(&dev, n, &mut rng);
        let plan = plan_dcalm(&fixture, n, case as u64);
        let expected = reference_allocation(&dev, n);
        if plan.allocations.iter().sum::<usize>() != n || plan.selections.len() != n {
            bad_sums += 1;
        }
        if plan.allocations != expected {
            mismatches.push((dev, n, plan.allocations, expected));
        }
    }
    let elapsed = start.elapsed();
    let ok = mismatches.is_empty() && bad_sums == 0 && elapsed < ALLOCATION_TIME_LIMIT;
    report(
        "allocation oracle",
        ok,
        &format!(
            "{ALLOCATION_CASES} cases, {} mismatches, {bad_sums} bad sums, {elapsed:.2?} (limit {ALLOCATION_TIME_LIMIT:?})",
            mismatches.len()
        ),
    );
    assert!(mismatches.is_empty(), "first mismatch: {:?}", mismatches.first());
    assert_eq!(bad_sums, 0);
    assert!(elapsed < ALLOCATION_TIME_LIMIT, "took {elapsed:?}");
}

#[test]
fn worked_allocation_ten_forty() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    // Dev accuracies 9/10 and 6/10.
    let fixture = allocation_fixture(&[(10, 9), (10, 6)], 50, &mut rng);
    let plan = plan_dcalm(&fixture, 50, 0);
    let direct = largest_remainder(&[exact(1.0 - 0.9), exact(1.0 - 0.6)], 50).counts;
    let ok = plan.allocations == [10, 40] && direct == [10, 40];
    report(
        "worked allocation",
        ok,
        &format!(
            "accuracies {:?} -> select_dcalm {:?}, float weights {:?}",
            plan.cluster_accuracies, plan.allocations, direct
        ),
    );
    assert_eq!(plan.cluster_accuracies, vec![Some(0.9), Some(0.6)]);
    assert_eq!(plan.allocations, vec![10, 40]);
    assert_eq!(direct, vec![10, 40]);
}

#[test]
fn binary_measures_select_identically() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xB1);
    let mut mismatches = 0;
    let mut pairs = 0;
    for trial in 0..BINARY_TRIALS {
        let size = rng.random_range(1..=50);
        let probs: ProbTable = (0..size as u64)
            .map(|id| {
                // Half the trials draw from a coarse dyadic grid to force exact ties.
                let p = if trial % 2 == 0 {
                    rng.random_range(0..=64) as f64 / 64.0
                } else {
                    rng.random::<f64>()
                };
                (id, vec![p, 1.0 - p])
            })
            .collect();
        pairs += size;
        let ids: Vec<InstanceId> = (0..size as u64).collect();
        let picks: Vec<InstanceId> = UncertaintyMeasure::ALL
            .iter()
            .map(|&m| acquisition::most_informative(&ids, &probs, m).unwrap())
            .collect();
        if picks.iter().any(|&p| p != picks[0]) {
            mismatches += 1;
        }
    }
    report(
        "binary-measure equivalence",
        mismatches == 0,
        &format!("{BINARY_TRIALS} candidate sets, {pairs} probability pairs, {mismatches} mismatches"),
    );
    assert_eq!(mismatches, 0);
}

#[test]
fn uniform_accuracy_degenerates_to_cluster_topn() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xDE6);
    let fixture = allocation_fixture(&[(5, 4); 10], 50, &mut rng);
    let dcalm_plan = plan_dcalm(&fixture, 50, 0);
    let unlabeled: BTreeSet<InstanceId> = fixture.corpus.splits().pool.iter().copied().collect();
    let probs: ProbTable = unlabeled
        .iter()
        .map(|&id| {
            let p = LastFeatureClassifier { num_classes: 2 }
                .predict_proba(fixture.corpus.features(id))
                .unwrap();
            (id, p)
        })
        .collect();
    let ctn = select_cluster_topn(&fixture.clusters, &unlabeled, &probs, UncertaintyMeasure::Entropy, 50).unwrap();

    // Same comparison over random shapes with one shared accuracy.
    let mut extra_mismatches = 0;
    for case in 0..200u64 {
        let m = rng.random_range(1..=12);
        let n = rng.random_range(1..=64);
        let size = rng.random_range(1..=8);
        let correct = rng.random_range(0..=size);
        let f = allocation_fixture(&vec![(size, correct); m], n, &mut rng);
        let d = plan_dcalm(&f, n, case);
        let unl: BTreeSet<InstanceId> = f.corpus.splits().pool.iter().copied().collect();
        let pr: ProbTable = unl.iter().map(|&id| (id, vec![0.5, 0.5])).collect();
        let c = select_cluster_topn(&f.clusters, &unl, &pr, UncertaintyMeasure::Entropy, n).unwrap();
        if d.allocations != c.allocations {
            extra_mismatches += 1;
        }
    }
    let ok = dcalm_plan.allocations == vec![5; 10] && ctn.allocations == vec![5; 10] && extra_mismatches == 0;
    report(
        "degeneracy",
        ok,
        &format!(
            "m=10 N=50: dcalm {:?}, cluster-topn {:?}; {extra_mismatches}/200 random shapes differ",
            dcalm_plan.allocations, ctn.allocations
        ),
    );
    assert_eq!(dcalm_plan.allocations, vec![5; 10]);
    assert_eq!(ctn.allocations, dcalm_plan.allocations);
    assert_eq!(extra_mismatches, 0);
}

fn nearest_index(centers: &[Vec<f64>], v: &[f64]) -> usize {
    let d = |c: &Vec<f64>| c.iter().zip(v).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
    (0..centers.len())
        .min_by(|&a, &b| d(&centers[a]).total_cmp(&d(&centers[b])))
        .unwrap()
}

#[test]
fn kmeans_properties() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x4D);
    let params = KMeansParams::default();

    let mut increases = 0;
    for i in 0..KMEANS_INSTANCES {
        let n = rng.random_range(5..=120);
        let dim = rng.random_range(1..=6);
        let k = rng.random_range(1..=n.min(8));
        let data: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..dim).map(|_| rng.random_range(-5.0..5.0)).collect())
            .collect();
        let points: Vec<_> = data.iter().enumerate().map(|(j, v)| (j as u64, v.as_slice())).collect();
        let model = kmeans(&points, k, i as u64, &params).unwrap();
        if model.inertia_history().windows(2).any(|w| w[1] > w[0]) {
            increases += 1;
        }
    }

    // Four blobs, 40 points each, centers 100 apart, noise within ±1.
    let centers: Vec<Vec<f64>> = vec![vec![0.0, 0.0], vec![100.0, 0.0], vec![0.0, 100.0], vec![100.0, 100.0]];
    let mut blob_data = Vec::new();
    for _ in 0..40 {
        for c in &centers {
            blob_data.push(vec![c[0] + rng.random_range(-1.0..1.0), c[1] + rng.random_range(-1.0..1.0)]);
        }
    }
    let blob_points: Vec<_> = blob_data.iter().enumerate().map(|(j, v)| (j as u64, v.as_slice())).collect();
    let mut recovered = 0;
    for seed in 0..20u64 {
        let model = kmeans(&blob_points, 4, seed, &params).unwrap();
        // Same partition as the nearest true center, up to relabeling.
        let mut mapping: BTreeMap<usize, usize> = BTreeMap::new();
        let consistent = blob_points.iter().all(|(id, v)| {
            let truth = nearest_index(&centers, v);
            let got = model.cluster_of(*id).unwrap();
            *mapping.entry(got).or_insert(truth) == truth
        });
        let distinct: BTreeSet<usize> = mapping.values().copied().collect();
        if consistent && distinct.len() == 4 {
            recovered += 1;
        }
    }

    let mut deterministic = true;
    for seed in 0..10u64 {
        let a = kmeans(&blob_points, 3, seed, &params).unwrap();
        let b = kmeans(&blob_points, 3, seed, &params).unwrap();
        let bits = |m: &ClusterModel| -> Vec<u64> {
            m.centroids().iter().flatten().map(|x| x.to_bits()).collect()
        };
        deterministic &= bits(&a) == bits(&b)
            && a.assignment() == b.assignment()
            && a.inertia().to_bits() == b.inertia().to_bits();
    }

    let ok = increases == 0 && recovered == 20 && deterministic;
    report(
        "kmeans",
        ok,
        &format!(
            "{increases}/{KMEANS_INSTANCES} inertia increases, blobs recovered for {recovered}/20 seeds, bitwise deterministic: {deterministic}"
        ),
    );
    assert_eq!(increases, 0);
    assert_eq!(recovered, 20);
    assert!(deterministic);
}

/// Hinge terms have kinks at margin 1; returns false when any sample sits
/// within `gap` of one.
fn clear_of_kinks(w: &LinearWeights, batch: &[(&[f64], ClassIndex)], gap: f64) -> bool {
    batch.iter().all(|(x, y)| {
        w.scores(x).iter().enumerate().all(|(c, s)| {
            let signed = if c == *y { *s } else { -*s };
            (signed - 1.0).abs() > gap
        })
    })
}

fn gradient_problem(rng: &mut ChaCha8Rng, kind: LearnerKind) -> f64 {
    loop {
        let k = rng.random_range(2..=5);
        let dim = rng.random_range(1..=6);
        let n = rng.random_range(1..=10);
        let l2 = rng.random_range(0.0..0.1);
        let xs: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();
        let batch: Vec<(&[f64], ClassIndex)> = xs
            .iter()
            .map(|x| (x.as_slice(), rng.random_range(0..k)))
            .collect();
        let mut w = LinearWeights::zeros(k, dim);
        for i in 0..w.len() {
            *w.param_mut(i) = rng.random_range(-1.0..1.0);
        }
        let h = 1e-5;
        if kind == LearnerKind::LinearSvm && !clear_of_kinks(&w, &batch, 1e-3) {
            continue;
        }
        let (_, analytic) = objective(kind, &w, &batch, l2);
        let mut diff2 = 0.0;
        let mut a2 = 0.0;
        let mut n2 = 0.0;
        for i in 0..w.len() {
            let mut plus = w.clone();
            *plus.param_mut(i) += h;
            let mut minus = w.clone();
            *minus.param_mut(i) -= h;
            let numeric = (objective(kind, &plus, &batch, l2).0 - objective(kind, &minus, &batch, l2).0) / (2.0 * h);
            let a = analytic.param(i);
            diff2 += (a - numeric).powi(2);
            a2 += a * a;
            n2 += numeric * numeric;
        }
        let scale = a2.sqrt().max(n2.sqrt());
        return if scale == 0.0 { 0.0 } else { diff2.sqrt() / scale };
    }
}

#[test]
fn learner_gradients_match_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x6AD);
    let mut worst = BTreeMap::new();
    let mut failures = 0;
    for kind in [LearnerKind::LogisticRegression, LearnerKind::LinearSvm] {
        let mut max_rel: f64 = 0.0;
        for _ in 0..GRADIENT_PROBLEMS {
            let rel = gradient_problem(&mut rng, kind);
            if rel > GRADIENT_REL_TOL {
                failures += 1;
            }
            max_rel = max_rel.max(rel);
        }
        worst.insert(format!("{kind:?}"), max_rel);
    }
    report(
        "learner gradient checks",
        failures == 0,
        &format!("{GRADIENT_PROBLEMS} problems per loss, worst relative error {worst:?} (tol {GRADIENT_REL_TOL:e})"),
    );
    assert_eq!(failures, 0, "{worst:?}");
}

/// Per-class precision and recall from row and column sums, F1 as their
/// harmonic mean, undefined ratios counted as zero.
fn brute_force_macro_f1(rows: &[Vec<u64>]) -> f64 {
    let k = rows.len();
    let mut total = 0.0;
    for c in 0..k {
        let tp = rows[c][c] as f64;
        let predicted: u64 = rows.iter().map(|r| r[c]).sum();
        let actual: u64 = rows[c].iter().sum();
        let p = if predicted == 0 { 0.0 } else { tp / predicted as f64 };
        let r = if actual == 0 { 0.0 } else { tp / actual as f64 };
        total += if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
    }
    total / k as f64
}

#[test]
fn macro_f1_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xF1);
    let mut worst: f64 = 0.0;
    let mut tested = 0;
    while tested < MACRO_F1_MATRICES {
        let k = rng.random_range(2..=6);
        let sparse = rng.random_bool(0.3);
        let rows: Vec<Vec<u64>> = (0..k)
            .map(|_| {
                (0..k)
                    .map(|_| if sparse && rng.random_bool(0.6) { 0 } else { rng.random_range(0..50) })
                    .collect()
            })
            .collect();
        let cm = ConfusionMatrix::from_rows(&rows).unwrap();
        if cm.total() == 0 {
            continue;
        }
        tested += 1;
        worst = worst.max((cm.macro_f1().unwrap() - brute_force_macro_f1(&rows)).abs());
    }
    report(
        "macro-F1 oracle",
        worst <= MACRO_F1_TOL,
        &format!("{MACRO_F1_MATRICES} matrices, max abs error {worst:e} (tol {MACRO_F1_TOL:e})"),
    );
    assert!(worst <= MACRO_F1_TOL);
}

fn bias_corpus_config() -> SyntheticConfig {
    // 6000 instances: four majority classes of 1410 and two minorities of 180 (3% each).
    SyntheticConfig {
        class_counts: vec![1410, 1410, 1410, 1410, 180, 180],
        dim: 16,
        center_std: 1.2,
        cluster_std: 1.0,
        class_names: None,
    }
}

#[test]
fn bias_reproduction_on_imbalanced_blobs() {
    let start = Instant::now();
    let config = bias_corpus_config();
    let minority: BTreeSet<ClassIndex> = [4, 5].into();
    let mut acquired: BTreeMap<StrategyKind, Vec<usize>> = BTreeMap::new();
    let mut f1: BTreeMap<StrategyKind, Vec<f64>> = BTreeMap::new();
    for &seed in &BIAS_SEEDS {
        let corpus = Arc::new(generate_synthetic(&config, seed).unwrap());
        for kind in [StrategyKind::Random, StrategyKind::TopN, StrategyKind::Dcalm] {
            let strategy = StrategyConfig {
                kind,
                budget: 300,
                bootstrap: 50,
                batch_size: 50,
                seed,
                ..StrategyConfig::default()
            };
            let log = run_active_learning(Arc::clone(&corpus), &strategy, &TrainConfig::default()).unwrap();
            // The bootstrap is shared by every strategy; count only labels the strategy chose.
            let count = log
                .rounds
                .iter()
                .filter(|r| r.round >= 1)
                .flat_map(|r| &r.selected)
                .filter(|s| minority.contains(&corpus.label(s.id).unwrap()))
                .count();
            acquired.entry(kind).or_default().push(count);
            f1.entry(kind).or_default().push(log.last().unwrap().test_macro_f1.unwrap());
        }
    }
    let elapsed = start.elapsed();
    let mean = |v: &[usize]| v.iter().sum::<usize>() as f64 / v.len() as f64;
    let dcalm_mean = mean(&acquired[&StrategyKind::Dcalm]);
    let topn_mean = mean(&acquired[&StrategyKind::TopN]);
    let ratio = dcalm_mean / topn_mean;
    let wins = f1[&StrategyKind::Dcalm]
        .iter()
        .zip(&f1[&StrategyKind::Random])
        .filter(|(d, r)| d >= r)
        .count();
    let ok = ratio >= BIAS_MIN_RATIO && wins >= BIAS_MIN_F1_WINS && elapsed < BIAS_TIME_LIMIT;
    report(
        "bias reproduction",
        ok,
        &format!(
            "minority acquisitions dcalm {:?} vs topn {:?} (ratio {ratio:.2}, need {BIAS_MIN_RATIO}); \
             macro-F1 dcalm {:.3?} vs random {:.3?} ({wins}/5 seeds, need {BIAS_MIN_F1_WINS}); {elapsed:.1?}",
            acquired[&StrategyKind::Dcalm],
            acquired[&StrategyKind::TopN],
            f1[&StrategyKind::Dcalm],
            f1[&StrategyKind::Random],
        ),
    );
    assert!(ratio >= BIAS_MIN_RATIO, "ratio {ratio}");
    assert!(wins >= BIAS_MIN_F1_WINS, "wins {wins}");
    assert!(elapsed < BIAS_TIME_LIMIT, "took {elapsed:?}");
}

fn write_experiment(dir: &Path) -> ExperimentConfig {
    let text = r#"
budgets = [60, 90]
seeds = [3, 4]
output_dir = "out"

[corpus]
source = "synthetic"
class_counts = [150, 150, 30]
dim = 6
seed = 11

[learner]
epochs = 20

[[strategies]]
kind = "random"
bootstrap = 30
batch_size = 30
[[strategies]]
kind = "topn"
bootstrap = 30
batch_size = 30
[[strategies]]
kind = "cluster_topn"
bootstrap = 30
batch_size = 30
clusters = 4
[[strategies]]
kind = "dcalm"
bootstrap = 30
batch_size = 30
clusters = 4
"#;
    let path = dir.join("experiment.toml");
    std::fs::write(&path, text).unwrap();
    ExperimentConfig::from_file(&path).unwrap()
}

fn read_tree(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut files = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                files.insert(rel, std::fs::read(&path).unwrap());
            }
        }
    }
    files
}

#[test]
fn experiment_reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let out_a = run_experiment(&write_experiment(a.path())).unwrap();
    let out_b = run_experiment(&write_experiment(b.path())).unwrap();
    let curves_equal = std::fs::read(&out_a.curves_path).unwrap() == std::fs::read(&out_b.curves_path).unwrap()
        && std::fs::read(&out_a.mean_curves_path).unwrap() == std::fs::read(&out_b.mean_curves_path).unwrap();
    let tree_a = read_tree(&a.path().join("out"));
    let tree_b = read_tree(&b.path().join("out"));
    let trees_equal = tree_a == tree_b;
    let ok = curves_equal && trees_equal && out_a.points.len() == 16;
    report(
        "determinism",
        ok,
        &format!(
            "{} curve points, curve CSVs identical: {curves_equal}, all {} output files identical: {trees_equal}",
            out_a.points.len(),
            tree_a.len()
        ),
    );
    assert_eq!(out_a.points.len(), 4 * 2 * 2);
    assert!(curves_equal);
    assert!(trees_equal);
}

#[test]
fn compare_fixture_threshold_counts() {
    let budgets = [100usize, 150, 200, 250, 300];
    let gaps = [2.0, 4.0, 6.0, 8.0, 12.0];
    let mut curves = dcalm::harness::Curves::new();
    curves.insert("topn".into(), budgets.iter().map(|&b| (b, 0.5)).collect());
    curves.insert(
        "dcalm".into(),
        budgets.iter().zip(gaps).map(|(&b, g)| (b, 0.5 + g / 100.0)).collect(),
    );
    let report_ = compare(&curves, "dcalm", &DEFAULT_THRESHOLDS).unwrap();
    let counts = report_.baselines[0].wins.clone();
    let expected = vec![5, 5, 3, 3, 1];
    report(
        "compare fixture",
        counts == expected,
        &format!("gaps {gaps:?} at thresholds {DEFAULT_THRESHOLDS:?} -> {counts:?}, expected {expected:?}"),
    );
    assert_eq!(counts, expected);
}
