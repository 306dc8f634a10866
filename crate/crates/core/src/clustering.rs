//! Lloyd's k-means with k-means++ seeding.
//!
//! All reductions run in input order so a fixed seed gives bitwise-identical
//! centroids. Distances are squared Euclidean on the raw vectors.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{seed, Error, InstanceId, Result};

/// An id-tagged point borrowed from a corpus.
pub type Point<'a> = (InstanceId, &'a [f64]);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KMeansParams {
    /// Stop once no centroid moves farther than this (Euclidean).
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for KMeansParams {
    fn default() -> Self {
        KMeansParams {
            tolerance: 1e-4,
            max_iterations: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterModel {
    centroids: Vec<Vec<f64>>,
    assignment: BTreeMap<InstanceId, usize>,
    inertia: f64,
    inertia_history: Vec<f64>,
}

impl ClusterModel {
    pub fn k(&self) -> usize {
        self.centroids.len()
    }

    pub fn centroids(&self) -> &[Vec<f64>] {
        &self.centroids
    }

    pub fn assignment(&self) -> &BTreeMap<InstanceId, usize> {
        &self.assignment
    }

    /// Sum of squared distances of the assigned points to their centroids.
    pub fn inertia(&self) -> f64 {
        self.inertia
    }

    /// Inertia after every assignment step, last entry equal to [`ClusterModel::inertia`].
    pub fn inertia_history(&self) -> &[f64] {
        &self.inertia_history
    }

    pub fn cluster_of(&self, id: InstanceId) -> Option<usize> {
        self.assignment.get(&id).copied()
    }

    /// Member ids of every cluster, ascending, one entry per cluster.
    pub fn members(&self) -> Vec<Vec<InstanceId>> {
        let mut members = vec![Vec::new(); self.k()];
        for (&id, &c) in &self.assignment {
            members[c].push(id);
        }
        members
    }

    /// Index and squared distance of the nearest centroid; ties go to the lowest index.
    pub fn nearest(&self, vector: &[f64]) -> (usize, f64) {
        nearest(&self.centroids, vector)
    }

    /// Assigns every point to its nearest fixed centroid.
    pub fn from_centroids(centroids: Vec<Vec<f64>>, points: &[Point<'_>]) -> Result<ClusterModel> {
        let dim = check_points(points)?;
        if centroids.is_empty() {
            return Err(Error::Empty("no centroids"));
        }
        if let Some(c) = centroids.iter().find(|c| c.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: c.len(),
            });
        }
        let mut assignment = BTreeMap::new();
        let mut inertia = 0.0;
        for (id, v) in points {
            let (c, d) = nearest(&centroids, v);
            assignment.insert(*id, c);
            inertia += d;
        }
        Ok(ClusterModel {
            centroids,
            assignment,
            inertia,
            inertia_history: vec![inertia],
        })
    }
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(centroids: &[Vec<f64>], vector: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, centroid) in centroids.iter().enumerate() {
        let d = squared_distance(centroid, vector);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn check_points(points: &[Point<'_>]) -> Result<usize> {
    let dim = match points.first() {
        Some((_, v)) => v.len(),
        None => return Err(Error::Empty("no points to cluster")),
    };
    for (_, v) in points {
        if v.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: v.len(),
            });
        }
    }
    Ok(dim)
}

fn plus_plus_seeding(points: &[Point<'_>], k: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut centroids = Vec::with_capacity(k);
    centroids.push(points[rng.random_range(0..n)].1.to_vec());
    let mut d2: Vec<f64> = points
        .iter()
        .map(|(_, v)| squared_distance(v, &centroids[0]))
        .collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = None;
            for (i, &w) in d2.iter().enumerate() {
                if w <= 0.0 {
                    continue;
                }
                acc += w;
                chosen = Some(i);
                if acc > target {
                    break;
                }
            }
            chosen.expect("positive total weight")
        } else {
            rng.random_range(0..n)
        };
        let centroid = points[pick].1.to_vec();
        for (i, (_, v)) in points.iter().enumerate() {
            d2[i] = d2[i].min(squared_distance(v, &centroid));
        }
        centroids.push(centroid);
    }
    centroids
}

/// Clusters `points` into `k` groups.
///
/// Lloyd iterations start from k-means++ seeding and stop when the largest
/// centroid shift falls under `params.tolerance` or after
/// `params.max_iterations` assignment steps. A cluster that empties during the
/// iterations takes over the point farthest from its centroid.
pub fn kmeans(
    points: &[Point<'_>],
    k: usize,
    seed: u64,
    params: &KMeansParams,
) -> Result<ClusterModel> {
    let dim = check_points(points)?;
    if k == 0 {
        return Err(Error::InvalidConfig("k must be at least 1".into()));
    }
    if k > points.len() {
        return Err(Error::TooManyClusters {
            k,
            points: points.len(),
        });
    }
    let n = points.len();
    let mut rng = seed::rng(seed);
    let mut centroids = plus_plus_seeding(points, k, &mut rng);
    let mut labels = vec![0usize; n];
    let mut dists = vec![0.0f64; n];
    let mut history = Vec::new();

    for _ in 0..params.max_iterations.max(1) {
        for (i, (_, v)) in points.iter().enumerate() {
            (labels[i], dists[i]) = nearest(&centroids, v);
        }
        let repaired = repair_empty_clusters(points, &mut centroids, &mut labels, &mut dists);
        history.push(dists.iter().sum::<f64>());

        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (i, (_, v)) in points.iter().enumerate() {
            counts[labels[i]] += 1;
            for (s, x) in sums[labels[i]].iter_mut().zip(v.iter()) {
                *s += x;
            }
        }
        let mut shift = 0.0f64;
        for c in 0..k {
            if counts[c] == 0 {
                continue;
            }
            let inv = 1.0 / counts[c] as f64;
            for s in &mut sums[c] {
                *s *= inv;
            }
            shift = shift.max(squared_distance(&sums[c], &centroids[c]).sqrt());
            centroids[c] = std::mem::take(&mut sums[c]);
        }
        if shift < params.tolerance && !repaired {
            break;
        }
    }

    let mut assignment = BTreeMap::new();
    let mut inertia = 0.0;
    for (id, v) in points {
        let (c, d) = nearest(&centroids, v);
        assignment.insert(*id, c);
        inertia += d;
    }
    history.push(inertia);
    Ok(ClusterModel {
        centroids,
        assignment,
        inertia,
        inertia_history: history,
    })
}

/// Gives every empty cluster the point farthest from its current centroid,
/// taken only from clusters with more than one member. Returns whether
/// anything moved.
fn repair_empty_clusters(
    points: &[Point<'_>],
    centroids: &mut [Vec<f64>],
    labels: &mut [usize],
    dists: &mut [f64],
) -> bool {
    let mut counts = vec![0usize; centroids.len()];
    for &l in labels.iter() {
        counts[l] += 1;
    }
    let mut repaired = false;
    for c in 0..centroids.len() {
        if counts[c] != 0 {
            continue;
        }
        let mut far: Option<usize> = None;
        for i in 0..points.len() {
            if counts[labels[i]] > 1 && far.is_none_or(|f| dists[i] > dists[f]) {
                far = Some(i);
            }
        }
        let Some(i) = far else { break };
        counts[labels[i]] -= 1;
        counts[c] = 1;
        labels[i] = c;
        dists[i] = 0.0;
        centroids[c] = points[i].1.to_vec();
        repaired = true;
    }
    repaired
}

/// Assigns each point to its nearest centroid of `model`. Every cluster index
/// appears in the result, possibly with no members.
pub fn partition_by_centroids(
    model: &ClusterModel,
    points: &[Point<'_>],
) -> Result<BTreeMap<usize, Vec<InstanceId>>> {
    let dim = model.centroids.first().map_or(0, Vec::len);
    let mut partition: BTreeMap<usize, Vec<InstanceId>> =
        (0..model.k()).map(|c| (c, Vec::new())).collect();
    for (id, v) in points {
        if v.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: v.len(),
            });
        }
        let (c, _) = model.nearest(v);
        partition.get_mut(&c).expect("all clusters present").push(*id);
    }
    for ids in partition.values_mut() {
        ids.sort_unstable();
    }
    Ok(partition)
}

/// Splits the members of one cluster into `l` subclusters, capping `l` at the
/// member count.
pub fn subcluster(
    members: &[Point<'_>],
    l: usize,
    seed: u64,
    params: &KMeansParams,
) -> Result<ClusterModel> {
    if members.is_empty() {
        return Err(Error::Empty("cluster has no members to subcluster"));
    }
    if l == 0 {
        return Err(Error::InvalidConfig("subcluster count must be at least 1".into()));
    }
    kmeans(members, l.min(members.len()), seed, params)
}
