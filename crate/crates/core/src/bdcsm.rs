//! Chunked clustering: split the (shuffled) data into chunks, run Lloyd on
//! every chunk, pool the chunk centroids and cluster the pool.

use std::ops::Range;
use std::time::Instant;

use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::dataset::{Centroids, Dataset};
use crate::error::{Error, Result};
use crate::init::{forgy_seed, kmeans_pp_seed, DEFAULT_CANDIDATES};
use crate::kernel::DistanceCounter;
use crate::lloyd::{run_lloyd, EmptyPolicy, StopRule};
use crate::result::{ClusteringResult, RunFlag};
use crate::rng::{child_rng, rng_from_seed};

/// Contiguous chunk boundaries over `0..m`; the last chunk may be short.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChunkPlan {
    pub chunk_size: usize,
    pub chunks: Vec<Range<usize>>,
}

impl ChunkPlan {
    pub fn new(m: usize, chunk_size: usize) -> Result<Self> {
        if chunk_size == 0 {
            return Err(Error::invalid("chunk size must be at least 1"));
        }
        let chunks = (0..m).step_by(chunk_size).map(|lo| lo..(lo + chunk_size).min(m)).collect();
        Ok(Self { chunk_size, chunks })
    }
}

/// Centroids of one chunk's Lloyd run with empty clusters removed.
/// Also reports whether anything was dropped.
fn cluster_chunk(
    data: &Dataset,
    rows: &[usize],
    k: usize,
    seed: u64,
    chunk: usize,
    counter: &DistanceCounter,
) -> Result<(Vec<Vec<f64>>, bool)> {
    let sub = data.select(rows);
    let kc = k.min(sub.m());
    let mut rng = child_rng(seed, chunk as u64);
    let c0 = forgy_seed(&sub, kc, &mut rng)?;
    let r = run_lloyd(&sub, c0, StopRule::default(), EmptyPolicy::KeepPrevious, counter)?;
    let sizes = r.assignment.cluster_sizes(kc);
    let kept: Vec<Vec<f64>> =
        r.centroids.rows().zip(&sizes).filter(|(_, &n)| n > 0).map(|(row, _)| row.to_vec()).collect();
    let dropped = kept.len() < k;
    Ok((kept, dropped))
}

/// Runs the chunked pipeline with chunk size `p`.
///
/// The rows are shuffled once with `seed`, then cut into contiguous chunks of
/// `p`. Chunk `i` is Forgy-seeded from `(seed, i)`; the pooled centroids are
/// clustered by K-means++-seeded Lloyd and the result is applied to all rows.
pub fn run_bdcsm(data: &Dataset, k: usize, p: usize, seed: u64, counter: &DistanceCounter) -> Result<ClusteringResult> {
    let m = data.m();
    if k == 0 || k > m {
        return Err(Error::invalid(format!("k = {k} must be in 1..={m}")));
    }
    if p < k {
        return Err(Error::invalid(format!("chunk size p = {p} must be at least k = {k}")));
    }
    let start = Instant::now();
    let local = DistanceCounter::new();
    let mut order: Vec<usize> = (0..m).collect();
    let mut rng = rng_from_seed(seed);
    order.shuffle(&mut rng);
    let plan = ChunkPlan::new(m, p)?;

    let per_chunk: Vec<(Vec<Vec<f64>>, bool)> = plan
        .chunks
        .par_iter()
        .enumerate()
        .map(|(i, r)| cluster_chunk(data, &order[r.clone()], k, seed, i, &local))
        .collect::<Result<_>>()?;
    let dropped = per_chunk.iter().any(|(_, d)| *d);
    let pool_rows: Vec<Vec<f64>> = per_chunk.into_iter().flat_map(|(rows, _)| rows).collect();
    let pool = Dataset::from_rows(&pool_rows)?;

    let kp = k.min(pool.m());
    let seeds = kmeans_pp_seed(&pool, kp, &mut child_rng(seed, u64::MAX), DEFAULT_CANDIDATES, &local)?;
    let pooled = run_lloyd(&pool, seeds.centroids, StopRule::default(), EmptyPolicy::KeepPrevious, &local)?;
    let centroids: Centroids = pooled.centroids;

    let (centroids, assignment, objective) = ClusteringResult::finalize(data, centroids, &local);
    counter.add(local.get());
    let mut result = ClusteringResult {
        centroids,
        assignment,
        objective,
        elapsed_seconds: start.elapsed().as_secs_f64(),
        n_d: local.get(),
        n_s: 0,
        iterations: pooled.iterations,
        termination: pooled.termination,
        flags: Vec::new(),
    };
    if dropped {
        result.flag(RunFlag::EmptyClustersDropped);
    }
    if seeds.degenerate {
        result.flag(RunFlag::DegenerateSeeding);
    }
    if result.assignment.cluster_sizes(k).contains(&0) || kp < k {
        result.flag(RunFlag::EmptyClusters);
    }
    Ok(result)
}
