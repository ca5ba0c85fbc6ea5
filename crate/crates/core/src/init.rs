//! Initial centroid selection: bounding-box uniform, Forgy, greedy
//! K-means++ and multi-start.

use std::time::Instant;

use rand::seq::index;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{Centroids, Dataset};
use crate::error::{Error, Result};
use crate::kernel::{sq_dist, DistanceCounter};
use crate::lloyd::{run_lloyd, EmptyPolicy, StopRule};
use crate::result::{ClusteringResult, RunFlag};
use crate::rng::{child_rng, Rng};

/// Greedy K-means++ draws this many candidates per step unless told otherwise.
pub const DEFAULT_CANDIDATES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeedMethod {
    /// Uniform per coordinate inside the bounding box of the data.
    UniformHull,
    Forgy,
    #[serde(alias = "kmeans++")]
    Kmeanspp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedConfig {
    pub method: SeedMethod,
    pub n_candidates: usize,
    pub rng_seed: u64,
}

impl SeedConfig {
    pub fn new(method: SeedMethod, rng_seed: u64) -> Self {
        Self { method, n_candidates: DEFAULT_CANDIDATES, rng_seed }
    }
}

/// Centroids chosen by a seeding routine.
#[derive(Debug, Clone, PartialEq)]
pub struct Seeding {
    pub centroids: Centroids,
    /// Rows of the dataset used as centers (empty for bounding-box seeding).
    pub indices: Vec<usize>,
    /// Set when D^2 sampling ran out of mass and picked uniformly instead.
    pub degenerate: bool,
}

/// Runs the seeding method described by `cfg`.
pub fn seed(data: &Dataset, k: usize, cfg: &SeedConfig, counter: &DistanceCounter) -> Result<Seeding> {
    let mut rng = crate::rng::rng_from_seed(cfg.rng_seed);
    match cfg.method {
        SeedMethod::UniformHull => {
            let centroids = uniform_hull_seed(data, k, &mut rng)?;
            Ok(Seeding { centroids, indices: Vec::new(), degenerate: false })
        }
        SeedMethod::Forgy => {
            let indices = forgy_indices(data.m(), k, &mut rng)?;
            Ok(Seeding { centroids: Centroids::from_indices(data, &indices), indices, degenerate: false })
        }
        SeedMethod::Kmeanspp => kmeans_pp_seed(data, k, &mut rng, cfg.n_candidates, counter),
    }
}

fn check_k(m: usize, k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    if k > m {
        return Err(Error::invalid(format!("k = {k} exceeds the number of points m = {m}")));
    }
    Ok(())
}

/// Per-coordinate uniform draw within the data's bounding box.
pub fn uniform_hull_seed(data: &Dataset, k: usize, rng: &mut Rng) -> Result<Centroids> {
    check_k(data.m(), k)?;
    let bounds = data.bounds();
    let mut values = Vec::with_capacity(k * data.n());
    for _ in 0..k {
        for &(lo, hi) in &bounds {
            values.push(if hi > lo { rng.random_range(lo..=hi) } else { lo });
        }
    }
    Centroids::new(values, data.n())
}

pub(crate) fn forgy_indices(m: usize, k: usize, rng: &mut Rng) -> Result<Vec<usize>> {
    check_k(m, k)?;
    Ok(index::sample(rng, m, k).into_vec())
}

/// `k` distinct rows of `data`, uniformly without replacement.
pub fn forgy_seed(data: &Dataset, k: usize, rng: &mut Rng) -> Result<Centroids> {
    let idx = forgy_indices(data.m(), k, rng)?;
    Ok(Centroids::from_indices(data, &idx))
}

/// Selection probabilities `d(x)^2 / sum d^2` for the given squared distances.
/// Returns `None` when the total mass is zero.
pub fn d2_probabilities(min_sq_dists: &[f64]) -> Option<Vec<f64>> {
    let total: f64 = min_sq_dists.iter().sum();
    if !(total > 0.0) {
        return None;
    }
    Some(min_sq_dists.iter().map(|d| d / total).collect())
}

/// Inverts the cumulative distribution of `prefix` (running sums of the
/// weights) at `u * total`. Never returns a zero-weight index.
fn draw_from_prefix(prefix: &[f64], u: f64) -> usize {
    let total = *prefix.last().expect("non-empty");
    let target = u * total;
    let mut i = prefix.partition_point(|&c| c <= target);
    if i >= prefix.len() {
        // rounding pushed the target past the end; back up to the last positive weight
        i = prefix.len() - 1;
        while i > 0 && prefix[i] == prefix[i - 1] {
            i -= 1;
        }
    }
    i
}

/// D^2 seeding state over a fixed point set: the squared distance from each
/// point to the nearest chosen center.
pub(crate) struct D2Sampler<'a> {
    data: &'a Dataset,
    pub(crate) min_d: Vec<f64>,
    n_candidates: usize,
    pub(crate) degenerate: bool,
}

impl<'a> D2Sampler<'a> {
    /// Starts from existing per-point distances (e.g. to surviving centers).
    pub(crate) fn with_distances(data: &'a Dataset, min_d: Vec<f64>, n_candidates: usize) -> Self {
        debug_assert_eq!(min_d.len(), data.m());
        Self { data, min_d, n_candidates: n_candidates.max(1), degenerate: false }
    }

    /// Starts with no centers: every point is infinitely far away.
    pub(crate) fn empty(data: &'a Dataset, n_candidates: usize) -> Self {
        Self::with_distances(data, vec![f64::INFINITY; data.m()], n_candidates)
    }

    /// Folds a new center into `min_d`; counts `m`.
    pub(crate) fn absorb(&mut self, center: &[f64], counter: &DistanceCounter) {
        for (d, x) in self.min_d.iter_mut().zip(self.data.rows()) {
            let nd = sq_dist(x, center);
            if nd < *d {
                *d = nd;
            }
        }
        counter.add(self.data.m() as u64);
    }

    /// Picks the next center index and updates `min_d`. `exclude` lists
    /// indices that must not be picked by the uniform fallback.
    pub(crate) fn next(&mut self, rng: &mut Rng, exclude: &[usize], counter: &DistanceCounter) -> usize {
        let m = self.data.m();
        if self.min_d.iter().all(|d| d.is_infinite()) {
            let i = rng.random_range(0..m);
            self.absorb(self.data.row(i), counter);
            return i;
        }
        let mut prefix = Vec::with_capacity(m);
        let mut acc = 0.0;
        for &d in &self.min_d {
            acc += d;
            prefix.push(acc);
        }
        if !(acc > 0.0) {
            self.degenerate = true;
            let pool: Vec<usize> = (0..m).filter(|i| !exclude.contains(i)).collect();
            let i = if pool.is_empty() { rng.random_range(0..m) } else { pool[rng.random_range(0..pool.len())] };
            // every distance is already zero, nothing to fold in
            return i;
        }

        let mut best: Option<(f64, usize, Vec<f64>)> = None;
        for _ in 0..self.n_candidates {
            let cand = draw_from_prefix(&prefix, rng.random::<f64>());
            let c = self.data.row(cand);
            let mut cost = 0.0;
            let dists: Vec<f64> = self
                .min_d
                .iter()
                .zip(self.data.rows())
                .map(|(&d, x)| {
                    let nd = sq_dist(x, c).min(d);
                    cost += nd;
                    nd
                })
                .collect();
            counter.add(m as u64);
            if best.as_ref().is_none_or(|(b, _, _)| cost < *b) {
                best = Some((cost, cand, dists));
            }
        }
        let (_, idx, dists) = best.expect("at least one candidate");
        self.min_d = dists;
        idx
    }
}

/// Greedy K-means++: the first center is a uniform row, every further one the
/// best (lowest resulting total cost) of `n_candidates` D^2 draws.
///
/// Counts `m + (k - 1) * n_candidates * m` distance evaluations. When all
/// remaining mass is zero (duplicate points) it falls back to uniform picks
/// among unused rows and sets `degenerate`.
pub fn kmeans_pp_seed(
    data: &Dataset,
    k: usize,
    rng: &mut Rng,
    n_candidates: usize,
    counter: &DistanceCounter,
) -> Result<Seeding> {
    check_k(data.m(), k)?;
    if n_candidates == 0 {
        return Err(Error::invalid("n_candidates must be at least 1"));
    }
    let mut sampler = D2Sampler::empty(data, n_candidates);
    let mut indices = Vec::with_capacity(k);
    for _ in 0..k {
        let i = sampler.next(rng, &indices, counter);
        indices.push(i);
    }
    Ok(Seeding { centroids: Centroids::from_indices(data, &indices), indices, degenerate: sampler.degenerate })
}

/// Best of `restarts` Forgy-seeded Lloyd runs. Restart `r` draws its seed
/// from `(seed, r)`, so a larger restart count only ever adds candidates.
pub fn multi_start(
    data: &Dataset,
    k: usize,
    restarts: usize,
    seed: u64,
    stop: StopRule,
    counter: &DistanceCounter,
) -> Result<ClusteringResult> {
    if restarts == 0 {
        return Err(Error::invalid("restarts must be at least 1"));
    }
    check_k(data.m(), k)?;
    let start = Instant::now();
    let runs: Vec<ClusteringResult> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = child_rng(seed, r as u64);
            let c0 = forgy_seed(data, k, &mut rng)?;
            run_lloyd(data, c0, stop, EmptyPolicy::KeepPrevious, counter)
        })
        .collect::<Result<_>>()?;
    let total_nd: u64 = runs.iter().map(|r| r.n_d).sum();
    let mut best =
        runs.into_iter().reduce(|a, b| if b.objective < a.objective { b } else { a }).expect("restarts >= 1");
    best.n_d = total_nd;
    best.elapsed_seconds = start.elapsed().as_secs_f64();
    if best.assignment.cluster_sizes(k).contains(&0) {
        best.flag(RunFlag::EmptyClusters);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    fn line(points: &[f64]) -> Dataset {
        Dataset::new(points.to_vec(), 1).unwrap()
    }

    fn is_row_of(data: &Dataset, row: &[f64]) -> bool {
        data.rows().any(|r| r == row)
    }

    #[test]
    fn forgy_examples() {
        let d = line(&[3.0]);
        let c = forgy_seed(&d, 1, &mut rng_from_seed(0)).unwrap();
        assert_eq!(c.as_slice(), &[3.0]);

        let d = line(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        let c = forgy_seed(&d, 5, &mut rng_from_seed(9)).unwrap();
        let mut got = c.as_slice().to_vec();
        got.sort_by(f64::total_cmp);
        assert_eq!(got, vec![1.0, 2.0, 3.0, 4.0, 5.0]);

        let big = Dataset::new((0..200).map(f64::from).collect(), 2).unwrap();
        let a = forgy_seed(&big, 3, &mut rng_from_seed(17)).unwrap();
        let b = forgy_seed(&big, 3, &mut rng_from_seed(17)).unwrap();
        assert_eq!(a, b);

        assert!(forgy_seed(&d, 6, &mut rng_from_seed(0)).is_err());
    }

    #[test]
    fn kmeanspp_single_center_is_a_row() {
        let d = line(&[1.0, 5.0, 9.0]);
        let counter = DistanceCounter::new();
        let s = kmeans_pp_seed(&d, 1, &mut rng_from_seed(4), 3, &counter).unwrap();
        assert!(is_row_of(&d, s.centroids.row(0)));
        assert_eq!(counter.get(), 3);
    }

    #[test]
    fn kmeanspp_second_center_forced() {
        // once (0,0) is chosen, (10,0) carries all the D^2 mass
        let d = Dataset::from_rows(&[[0.0, 0.0], [0.0, 0.0], [10.0, 0.0]]).unwrap();
        let counter = DistanceCounter::new();
        for seed in 0..50 {
            let mut rng = rng_from_seed(seed);
            let mut sampler = D2Sampler::empty(&d, 3);
            sampler.absorb(d.row(0), &counter);
            let next = sampler.next(&mut rng, &[0], &counter);
            assert_eq!(next, 2);
        }
    }

    #[test]
    fn kmeanspp_counts_and_rows() {
        let d = Dataset::new((0..40).map(|v| (v * v % 17) as f64).collect(), 2).unwrap();
        let counter = DistanceCounter::new();
        let s = kmeans_pp_seed(&d, 4, &mut rng_from_seed(1), 3, &counter).unwrap();
        assert_eq!(counter.get(), (20 + 3 * 3 * 20) as u64);
        for j in 0..4 {
            assert!(is_row_of(&d, s.centroids.row(j)));
        }
    }

    #[test]
    fn kmeanspp_identical_points_fall_back() {
        let d = Dataset::new(vec![2.0; 10], 2).unwrap();
        let counter = DistanceCounter::new();
        let s = kmeans_pp_seed(&d, 3, &mut rng_from_seed(3), 3, &counter).unwrap();
        assert!(s.degenerate);
        let mut idx = s.indices.clone();
        idx.sort_unstable();
        idx.dedup();
        assert_eq!(idx.len(), 3);
    }

    #[test]
    fn d2_probabilities_normalize() {
        let p = d2_probabilities(&[0.0, 1.0, 3.0]).unwrap();
        assert_eq!(p, vec![0.0, 0.25, 0.75]);
        assert!(d2_probabilities(&[0.0, 0.0]).is_none());
    }

    #[test]
    fn prefix_draw_skips_zero_weights() {
        let prefix = [0.0, 1.0, 1.0, 3.0, 3.0];
        assert_eq!(draw_from_prefix(&prefix, 0.0), 1);
        assert_eq!(draw_from_prefix(&prefix, 0.34), 3);
        assert_eq!(draw_from_prefix(&prefix, 1.0), 3);
    }

    #[test]
    fn uniform_hull_within_bounds() {
        let d = Dataset::from_rows(&[[0.0, 5.0], [2.0, 5.0], [1.0, 5.0]]).unwrap();
        let c = uniform_hull_seed(&d, 3, &mut rng_from_seed(2)).unwrap();
        for row in c.rows() {
            assert!((0.0..=2.0).contains(&row[0]));
            assert_eq!(row[1], 5.0);
        }
    }

    #[test]
    fn multi_start_single_restart_is_one_lloyd_run() {
        let d = Dataset::new((0..60).map(|v| ((v * 37) % 23) as f64).collect(), 3).unwrap();
        let counter = DistanceCounter::new();
        let ms = multi_start(&d, 3, 1, 11, StopRule::default(), &counter).unwrap();
        let mut rng = child_rng(11, 0);
        let c0 = forgy_seed(&d, 3, &mut rng).unwrap();
        let single = run_lloyd(&d, c0, StopRule::default(), EmptyPolicy::KeepPrevious, &counter).unwrap();
        assert_eq!(ms.centroids, single.centroids);
        assert_eq!(ms.objective, single.objective);
        assert_eq!(ms.n_d, single.n_d);

        let ms10 = multi_start(&d, 3, 10, 11, StopRule::default(), &counter).unwrap();
        assert!(ms10.objective <= ms.objective);
        assert!(multi_start(&d, 3, 0, 11, StopRule::default(), &counter).is_err());
    }
}
