//! Lightweight coresets: sample rows with probability
//! `q(x) = 1/(2m) + (1/2) * |x - mu|^2 / D`, `D = sum |x - mu|^2`,
//! without replacement, then cluster only the sample.

use std::time::Instant;

use rand::Rng as _;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::init::{kmeans_pp_seed, DEFAULT_CANDIDATES};
use crate::kernel::{sq_dist, DistanceCounter};
use crate::lloyd::{run_lloyd, EmptyPolicy, StopRule};
use crate::result::{ClusteringResult, RunFlag};
use crate::rng::Rng;

/// Rows drawn for a coreset together with the sampling distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct CoresetSample {
    pub points: Dataset,
    pub source_indices: Vec<usize>,
    /// `q(x)` for every row of the source dataset.
    pub probabilities: Vec<f64>,
    /// All rows were identical, so `q` is uniform.
    pub uniform_fallback: bool,
}

/// Sampling probabilities. The second value is true when `D = 0` forced the
/// uniform distribution. Counts `m` distance evaluations.
pub fn lightweight_probabilities(data: &Dataset, counter: &DistanceCounter) -> (Vec<f64>, bool) {
    let m = data.m();
    let mu = data.mean();
    let d2: Vec<f64> = data.rows().map(|x| sq_dist(x, &mu)).collect();
    counter.add(m as u64);
    let total: f64 = d2.iter().sum();
    if !(total > 0.0) {
        return (vec![1.0 / m as f64; m], true);
    }
    let base = 0.5 / m as f64;
    (d2.iter().map(|d| base + 0.5 * d / total).collect(), false)
}

/// Binary indexed tree over non-negative weights, supporting point updates
/// and the inverse prefix-sum search used for weighted draws.
struct Fenwick {
    tree: Vec<f64>,
}

impl Fenwick {
    fn new(weights: &[f64]) -> Self {
        let n = weights.len();
        let mut tree = vec![0.0; n + 1];
        tree[1..].copy_from_slice(weights);
        for i in 1..=n {
            let j = i + (i & i.wrapping_neg());
            if j <= n {
                tree[j] += tree[i];
            }
        }
        Self { tree }
    }

    fn add(&mut self, idx: usize, delta: f64) {
        let mut i = idx + 1;
        while i < self.tree.len() {
            self.tree[i] += delta;
            i += i & i.wrapping_neg();
        }
    }

    fn total(&self) -> f64 {
        let mut i = self.tree.len() - 1;
        let mut s = 0.0;
        while i > 0 {
            s += self.tree[i];
            i -= i & i.wrapping_neg();
        }
        s
    }

    /// Smallest index whose inclusive prefix sum exceeds `target`.
    fn find(&self, mut target: f64) -> usize {
        let n = self.tree.len() - 1;
        let mut pos = 0;
        let mut step = n.next_power_of_two();
        while step > 0 {
            let next = pos + step;
            if next <= n && self.tree[next] <= target {
                pos = next;
                target -= self.tree[next];
            }
            step >>= 1;
        }
        pos.min(n - 1)
    }
}

/// Draws `s` distinct rows, each step proportional to `q` renormalised over
/// the rows not yet taken.
pub fn build_lightweight_coreset(
    data: &Dataset,
    s: usize,
    rng: &mut Rng,
    counter: &DistanceCounter,
) -> Result<CoresetSample> {
    let m = data.m();
    if s == 0 || s > m {
        return Err(Error::invalid(format!("coreset size s = {s} must be in 1..={m}")));
    }
    let (q, uniform_fallback) = lightweight_probabilities(data, counter);
    let mut weights = q.clone();
    let mut tree = Fenwick::new(&weights);
    let mut picked = Vec::with_capacity(s);
    for _ in 0..s {
        let mut i = tree.find(rng.random::<f64>() * tree.total());
        // rounding can land on a taken slot; walk to the next live one
        if weights[i] == 0.0 {
            i = (0..m).map(|o| (i + o) % m).find(|&j| weights[j] > 0.0).expect("mass left");
        }
        tree.add(i, -weights[i]);
        weights[i] = 0.0;
        picked.push(i);
    }
    Ok(CoresetSample { points: data.select(&picked), source_indices: picked, probabilities: q, uniform_fallback })
}

/// Clusters a lightweight coreset of size `s` with K-means++-seeded Lloyd
/// (unweighted) and assigns every row to the resulting centroids.
pub fn run_lw_coreset(
    data: &Dataset,
    k: usize,
    s: usize,
    rng: &mut Rng,
    counter: &DistanceCounter,
) -> Result<ClusteringResult> {
    if k == 0 || k > s {
        return Err(Error::invalid(format!("k = {k} must be in 1..=s = {s}")));
    }
    let start = Instant::now();
    let local = DistanceCounter::new();
    let core = build_lightweight_coreset(data, s, rng, &local)?;
    let seeds = kmeans_pp_seed(&core.points, k, rng, DEFAULT_CANDIDATES, &local)?;
    let r = run_lloyd(&core.points, seeds.centroids, StopRule::default(), EmptyPolicy::KeepPrevious, &local)?;
    let (centroids, assignment, objective) = ClusteringResult::finalize(data, r.centroids, &local);
    counter.add(local.get());
    let mut result = ClusteringResult {
        centroids,
        assignment,
        objective,
        elapsed_seconds: start.elapsed().as_secs_f64(),
        n_d: local.get(),
        n_s: s as u64,
        iterations: r.iterations,
        termination: r.termination,
        flags: Vec::new(),
    };
    if core.uniform_fallback {
        result.flag(RunFlag::UniformCoresetFallback);
    }
    if seeds.degenerate {
        result.flag(RunFlag::DegenerateSeeding);
    }
    if result.assignment.cluster_sizes(k).contains(&0) {
        result.flag(RunFlag::EmptyClusters);
    }
    Ok(result)
}
