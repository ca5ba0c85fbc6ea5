//! Minibatch and online K-means.

use std::time::Instant;

use rand::seq::{index, SliceRandom};

use crate::dataset::{Centroids, Dataset};
use crate::error::{Error, Result};
use crate::init::forgy_seed;
use crate::kernel::{nearest, DistanceCounter};
use crate::result::{ClusteringResult, RunFlag, Termination};
use crate::rng::Rng;

/// Lifetime number of points absorbed by each centroid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CenterCounts(pub Vec<u64>);

/// Minibatch K-means.
///
/// Starts from `k` random rows, then for `max_iters` iterations draws a
/// uniform batch of `batch_size` distinct points, assigns it, and moves every
/// touched centroid to `(c * n_c + sum of its batch members) / (n_c + b_c)`.
/// The reported objective comes from a final full assignment.
pub fn run_minibatch(
    data: &Dataset,
    k: usize,
    batch_size: usize,
    max_iters: usize,
    rng: &mut Rng,
    counter: &DistanceCounter,
) -> Result<ClusteringResult> {
    let m = data.m();
    if batch_size == 0 || batch_size > m {
        return Err(Error::invalid(format!("batch_size = {batch_size} must be in 1..={m}")));
    }
    if max_iters == 0 {
        return Err(Error::invalid("max_iters must be at least 1"));
    }
    let start = Instant::now();
    let local = DistanceCounter::new();
    let n = data.n();
    let mut c = forgy_seed(data, k, rng)?;
    let mut counts = CenterCounts(vec![0; k]);
    let mut sums = vec![0.0f64; k * n];
    let mut batch_counts = vec![0u64; k];
    let mut labels = vec![0usize; batch_size];

    for _ in 0..max_iters {
        let batch = index::sample(rng, m, batch_size);
        for (slot, i) in labels.iter_mut().zip(batch.iter()) {
            *slot = nearest(data.row(i), &c).0;
        }
        local.add((batch_size * k) as u64);

        sums.iter_mut().for_each(|s| *s = 0.0);
        batch_counts.iter_mut().for_each(|b| *b = 0);
        for (&l, i) in labels.iter().zip(batch.iter()) {
            batch_counts[l] += 1;
            for (s, v) in sums[l * n..(l + 1) * n].iter_mut().zip(data.row(i)) {
                *s += v;
            }
        }
        for j in 0..k {
            let b = batch_counts[j];
            if b == 0 {
                continue;
            }
            let old = counts.0[j] as f64;
            let denom = old + b as f64;
            for (cv, s) in c.row_mut(j).iter_mut().zip(&sums[j * n..(j + 1) * n]) {
                *cv = (*cv * old + s) / denom;
            }
            counts.0[j] += b;
        }
    }

    let (centroids, assignment, objective) = ClusteringResult::finalize(data, c, &local);
    counter.add(local.get());
    let mut result = ClusteringResult {
        centroids,
        assignment,
        objective,
        elapsed_seconds: start.elapsed().as_secs_f64(),
        n_d: local.get(),
        n_s: (max_iters * batch_size) as u64,
        iterations: max_iters,
        termination: Termination::Budget,
        flags: Vec::new(),
    };
    if result.assignment.cluster_sizes(k).contains(&0) {
        result.flag(RunFlag::EmptyClusters);
    }
    Ok(result)
}

/// Sequential K-means over a stream: each arriving point pulls its nearest
/// centroid to the running mean of everything that centroid has absorbed.
#[derive(Debug, Clone, PartialEq)]
pub struct OnlineKMeans {
    centroids: Centroids,
    counts: CenterCounts,
}

impl OnlineKMeans {
    /// Seeds one centroid per point, each with a count of 1.
    pub fn from_seeds(seeds: Centroids) -> Self {
        let k = seeds.k();
        Self { centroids: seeds, counts: CenterCounts(vec![1; k]) }
    }

    pub fn with_counts(centroids: Centroids, counts: CenterCounts) -> Result<Self> {
        if counts.0.len() != centroids.k() {
            return Err(Error::invalid("one count per centroid required"));
        }
        Ok(Self { centroids, counts })
    }

    pub fn centroids(&self) -> &Centroids {
        &self.centroids
    }

    pub fn counts(&self) -> &CenterCounts {
        &self.counts
    }

    pub fn into_centroids(self) -> Centroids {
        self.centroids
    }

    /// Absorbs `x` into its nearest centroid: `c <- (c * n + x) / (n + 1)`.
    /// Returns the index of the updated centroid. Counts `k` evaluations.
    pub fn update(&mut self, x: &[f64], counter: &DistanceCounter) -> Result<usize> {
        if x.len() != self.centroids.n() {
            return Err(Error::DimensionMismatch { expected: self.centroids.n(), actual: x.len() });
        }
        let (j, _) = nearest(x, &self.centroids);
        counter.add(self.centroids.k() as u64);
        let n = self.counts.0[j] as f64;
        for (cv, xv) in self.centroids.row_mut(j).iter_mut().zip(x) {
            *cv = (*cv * n + xv) / (n + 1.0);
        }
        self.counts.0[j] += 1;
        Ok(j)
    }
}

/// Seeds from the first `k` points of `stream` and absorbs the rest.
/// Returns the final state and the number of points consumed.
pub fn online_from_stream<I>(mut stream: I, k: usize, counter: &DistanceCounter) -> Result<(OnlineKMeans, u64)>
where
    I: Iterator<Item = Result<Vec<f64>>>,
{
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    let mut seeds: Vec<Vec<f64>> = Vec::with_capacity(k);
    while seeds.len() < k {
        match stream.next() {
            Some(p) => seeds.push(p?),
            None => {
                return Err(Error::invalid(format!(
                    "stream ended after {} points, {k} needed for seeding",
                    seeds.len()
                )))
            }
        }
    }
    let mut state = OnlineKMeans::from_seeds(Centroids::from_rows(&seeds)?);
    let mut seen = k as u64;
    for p in stream {
        state.update(&p?, counter)?;
        seen += 1;
    }
    Ok((state, seen))
}

/// Online K-means over `data` visited in a random order, then a full
/// assignment for the reported objective.
pub fn run_online(data: &Dataset, k: usize, rng: &mut Rng, counter: &DistanceCounter) -> Result<ClusteringResult> {
    if k == 0 || k > data.m() {
        return Err(Error::invalid(format!("k = {k} must be in 1..={}", data.m())));
    }
    let start = Instant::now();
    let local = DistanceCounter::new();
    let mut order: Vec<usize> = (0..data.m()).collect();
    order.shuffle(rng);
    let stream = order.iter().map(|&i| Ok(data.row(i).to_vec()));
    let (state, seen) = online_from_stream(stream, k, &local)?;
    let (centroids, assignment, objective) = ClusteringResult::finalize(data, state.into_centroids(), &local);
    counter.add(local.get());
    let mut result = ClusteringResult {
        centroids,
        assignment,
        objective,
        elapsed_seconds: start.elapsed().as_secs_f64(),
        n_d: local.get(),
        n_s: seen,
        iterations: 1,
        termination: Termination::Budget,
        flags: Vec::new(),
    };
    if result.assignment.cluster_sizes(k).contains(&0) {
        result.flag(RunFlag::EmptyClusters);
    }
    Ok(result)
}
