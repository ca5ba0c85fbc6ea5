//! DBSCAN, canopy clustering, and CluDataSE (DBSCAN on repeated samples to
//! seed Lloyd on the full data).

use std::collections::VecDeque;
use std::time::Instant;

use rand::seq::index;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::dataset::{Centroids, Dataset};
use crate::error::{Error, Result};
use crate::init::{D2Sampler, DEFAULT_CANDIDATES};
use crate::kernel::{sq_dist, DistanceCounter};
use crate::lloyd::{run_lloyd, EmptyPolicy, StopRule};
use crate::result::{ClusteringResult, RunFlag};
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DbscanParams {
    /// Neighbourhood radius (Euclidean).
    pub eps: f64,
    /// Neighbours within `eps`, the point itself included, that make a core point.
    pub min_pts: usize,
}

impl DbscanParams {
    pub fn new(eps: f64, min_pts: usize) -> Result<Self> {
        let p = Self { eps, min_pts };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::invalid(format!("eps = {} must be positive and finite", self.eps)));
        }
        if self.min_pts == 0 {
            return Err(Error::invalid("min_pts must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DbscanLabels {
    /// Cluster id per point, `None` for noise. Ids follow the smallest core
    /// point index of each cluster.
    pub labels: Vec<Option<usize>>,
    pub core: Vec<bool>,
    pub n_clusters: usize,
}

/// Brute-force DBSCAN. Core points are grouped into eps-connected components;
/// a border point joins the cluster of its nearest core neighbour, the lower
/// cluster id on a tie. Counts `m (m - 1) / 2` evaluations.
pub fn dbscan(data: &Dataset, params: &DbscanParams, counter: &DistanceCounter) -> Result<DbscanLabels> {
    params.validate()?;
    let m = data.m();
    let r2 = params.eps * params.eps;
    let mut nbrs: Vec<Vec<(usize, f64)>> = vec![Vec::new(); m];
    for i in 0..m {
        for j in i + 1..m {
            let d = sq_dist(data.row(i), data.row(j));
            if d <= r2 {
                nbrs[i].push((j, d));
                nbrs[j].push((i, d));
            }
        }
    }
    counter.add((m * m.saturating_sub(1) / 2) as u64);
    let core: Vec<bool> = nbrs.iter().map(|v| v.len() + 1 >= params.min_pts).collect();

    let mut labels = vec![None; m];
    let mut n_clusters = 0;
    let mut queue = VecDeque::new();
    for i in 0..m {
        if !core[i] || labels[i].is_some() {
            continue;
        }
        labels[i] = Some(n_clusters);
        queue.push_back(i);
        while let Some(p) = queue.pop_front() {
            for &(q, _) in &nbrs[p] {
                if core[q] && labels[q].is_none() {
                    labels[q] = Some(n_clusters);
                    queue.push_back(q);
                }
            }
        }
        n_clusters += 1;
    }
    for i in 0..m {
        if core[i] {
            continue;
        }
        labels[i] = nbrs[i]
            .iter()
            .filter(|(q, _)| core[*q])
            .map(|&(q, d)| (d, labels[q].expect("core points are labelled")))
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
            .map(|(_, c)| c);
    }
    Ok(DbscanLabels { labels, core, n_clusters })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CanopyThresholds {
    pub t1: f64,
    pub t2: f64,
}

impl CanopyThresholds {
    pub fn new(t1: f64, t2: f64) -> Result<Self> {
        let t = Self { t1, t2 };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t1 > self.t2 && self.t2 > 0.0 && self.t1.is_finite()) {
            return Err(Error::invalid(format!("need t1 > t2 > 0, got t1 = {}, t2 = {}", self.t1, self.t2)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Canopy {
    pub center: usize,
    pub members: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CanopySet {
    pub canopies: Vec<Canopy>,
}

/// Canopy clustering with squared Euclidean distance `d`: a point joins a
/// canopy when `d < t1` and stops being a center candidate when `d <= t2`.
pub fn canopy(data: &Dataset, t: &CanopyThresholds, rng: &mut Rng, counter: &DistanceCounter) -> Result<CanopySet> {
    canopy_with(data, t, counter, |pool| pool[rng.random_range(0..pool.len())])
}

/// [`canopy`] with the center choice delegated to `pick`, which receives the
/// remaining candidates in index order.
pub fn canopy_with<F>(data: &Dataset, t: &CanopyThresholds, counter: &DistanceCounter, mut pick: F) -> Result<CanopySet>
where
    F: FnMut(&[usize]) -> usize,
{
    t.validate()?;
    let m = data.m();
    let mut candidate = vec![true; m];
    let mut pool: Vec<usize> = (0..m).collect();
    let mut canopies = Vec::new();
    while !pool.is_empty() {
        let center = pick(&pool);
        if !candidate.get(center).copied().unwrap_or(false) {
            return Err(Error::invalid(format!("picked {center}, which is not a remaining candidate")));
        }
        let c = data.row(center);
        let mut members = Vec::new();
        for (i, x) in data.rows().enumerate() {
            let d = sq_dist(x, c);
            if d < t.t1 {
                members.push(i);
            }
            if d <= t.t2 {
                candidate[i] = false;
            }
        }
        candidate[center] = false;
        counter.add(m as u64);
        pool.retain(|&i| candidate[i]);
        canopies.push(Canopy { center, members });
    }
    Ok(CanopySet { canopies })
}

/// Component means from DBSCAN on fresh samples of size `s`, gathered until
/// at least `k` exist or `max_rounds` samples were used. Returns the pool and
/// the number of rounds.
pub fn cludatase_pool(
    data: &Dataset,
    k: usize,
    s: usize,
    params: &DbscanParams,
    max_rounds: usize,
    rng: &mut Rng,
    counter: &DistanceCounter,
) -> Result<(Vec<Vec<f64>>, usize)> {
    let mut pool: Vec<Vec<f64>> = Vec::new();
    let mut rounds = 0;
    while pool.len() < k && rounds < max_rounds {
        rounds += 1;
        let idx = index::sample(rng, data.m(), s).into_vec();
        let sample = data.select(&idx);
        let lab = dbscan(&sample, params, counter)?;
        let n = data.n();
        let mut sums = vec![vec![0.0; n]; lab.n_clusters];
        let mut counts = vec![0usize; lab.n_clusters];
        for (x, l) in sample.rows().zip(&lab.labels) {
            if let Some(c) = *l {
                counts[c] += 1;
                sums[c].iter_mut().zip(x).for_each(|(a, v)| *a += v);
            }
        }
        for (mut sum, cnt) in sums.into_iter().zip(counts) {
            sum.iter_mut().for_each(|a| *a /= cnt as f64);
            pool.push(sum);
        }
    }
    Ok((pool, rounds))
}

/// CluDataSE: pool DBSCAN component means over up to `max_rounds` samples,
/// pick `k` of them by greedy D^2 seeding over the pool (topping up from the
/// data by D^2 draws if the pool is short), then run Lloyd on all rows.
pub fn run_cludatase(
    data: &Dataset,
    k: usize,
    s: usize,
    params: &DbscanParams,
    max_rounds: usize,
    rng: &mut Rng,
    counter: &DistanceCounter,
) -> Result<ClusteringResult> {
    let m = data.m();
    if s == 0 || s > m {
        return Err(Error::invalid(format!("sample size s = {s} must be in 1..={m}")));
    }
    if k == 0 || k > s {
        return Err(Error::invalid(format!("k = {k} must be in 1..=s = {s}")));
    }
    if max_rounds == 0 {
        return Err(Error::invalid("max_rounds must be at least 1"));
    }
    params.validate()?;
    let start = Instant::now();
    let local = DistanceCounter::new();
    let (mut pool, rounds) = cludatase_pool(data, k, s, params, max_rounds, rng, &local)?;

    let topped_up = pool.len() < k;
    if topped_up {
        let mut sampler = D2Sampler::empty(data, DEFAULT_CANDIDATES);
        for p in &pool {
            sampler.absorb(p, &local);
        }
        let mut picked = Vec::new();
        while pool.len() < k {
            let i = sampler.next(rng, &picked, &local);
            picked.push(i);
            pool.push(data.row(i).to_vec());
        }
    }
    let pool = Dataset::from_rows(&pool)?;
    let mut sampler = D2Sampler::empty(&pool, DEFAULT_CANDIDATES);
    let mut chosen = Vec::with_capacity(k);
    for _ in 0..k {
        let i = sampler.next(rng, &chosen, &local);
        chosen.push(i);
    }
    let seeds = Centroids::from_indices(&pool, &chosen);
    let r = run_lloyd(data, seeds, StopRule::default(), EmptyPolicy::KeepPrevious, &local)?;
    counter.add(local.get());
    let mut result = ClusteringResult {
        elapsed_seconds: start.elapsed().as_secs_f64(),
        n_d: local.get(),
        n_s: (rounds * s) as u64,
        ..r
    };
    if topped_up {
        result.flag(RunFlag::PoolToppedUp);
    }
    if sampler.degenerate {
        result.flag(RunFlag::DegenerateSeeding);
    }
    Ok(result)
}
