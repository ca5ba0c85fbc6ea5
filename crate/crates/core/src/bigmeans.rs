//! Big-means: Lloyd on a stream of uniform samples, keeping the best
//! centroids seen so far and re-seeding empty clusters on each new sample.
//!
//! Work is organised in rounds. In every round each worker draws one sample
//! of `s` rows with its own RNG (derived from `(seed, worker)`), starts Lloyd
//! from the incumbent it currently follows and offers the outcome back.
//!
//! * competitive: every worker follows and updates a private incumbent;
//! * collective: all workers start a round from the shared incumbent and the
//!   round's results are published in worker order, each only if it is
//!   strictly better than what is there;
//! * hybrid: competitive for the first `hybrid_switch_fraction` of the budget,
//!   then the best private incumbent becomes the shared one.
//!
//! Rounds are bulk-synchronous, so a fixed `(seed, workers, mode)` with a
//! sample budget reproduces the same result regardless of scheduling.

use std::time::Instant;

use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{Centroids, Dataset};
use crate::error::{Error, Result};
use crate::init::{D2Sampler, DEFAULT_CANDIDATES};
use crate::kernel::{self, DistanceCounter};
use crate::lloyd::{run_lloyd, EmptyPolicy, StopRule};
use crate::result::{ClusteringResult, RunFlag, Termination};
use crate::rng::{child_rng, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParallelMode {
    Competitive,
    Collective,
    #[default]
    Hybrid,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BigMeansConfig {
    /// Sample size.
    pub s: usize,
    /// Rounds per worker; `None` runs until the time limit.
    pub max_samples: Option<usize>,
    pub time_limit_seconds: Option<f64>,
    pub workers: usize,
    pub mode: ParallelMode,
    pub hybrid_switch_fraction: f64,
    /// Inner Lloyd stop rule.
    #[serde(default)]
    pub stop: StopRule,
}

impl BigMeansConfig {
    pub fn new(s: usize, max_samples: usize) -> Self {
        Self {
            s,
            max_samples: Some(max_samples),
            time_limit_seconds: None,
            workers: 1,
            mode: ParallelMode::Hybrid,
            hybrid_switch_fraction: 0.5,
            stop: StopRule::default(),
        }
    }

    pub fn validate(&self, m: usize, k: usize) -> Result<()> {
        if self.s == 0 || self.s > m {
            return Err(Error::invalid(format!("sample size s = {} must be in 1..={m}", self.s)));
        }
        if k == 0 || k > self.s {
            return Err(Error::invalid(format!("k = {k} must be in 1..=s = {}", self.s)));
        }
        if self.workers == 0 {
            return Err(Error::invalid("workers must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.hybrid_switch_fraction) {
            return Err(Error::invalid("hybrid_switch_fraction must lie in [0, 1]"));
        }
        match (self.max_samples, self.time_limit_seconds) {
            (None, None) => return Err(Error::invalid("max_samples and time_limit_seconds cannot both be unbounded")),
            (Some(0), _) => return Err(Error::invalid("max_samples must be at least 1")),
            (_, Some(t)) if !(t.is_finite() && t > 0.0) => {
                return Err(Error::invalid("time_limit_seconds must be positive and finite"))
            }
            _ => {}
        }
        self.stop.validate()
    }
}

/// Best centroids found so far and the sample objective that got them there.
#[derive(Debug, Clone, PartialEq)]
pub struct Incumbent {
    /// `None` until the first sample has been clustered.
    pub centroids: Option<Centroids>,
    pub best_f: f64,
    pub updated_at_seconds: f64,
}

impl Default for Incumbent {
    fn default() -> Self {
        Self { centroids: None, best_f: f64::INFINITY, updated_at_seconds: 0.0 }
    }
}

impl Incumbent {
    /// Replaces the incumbent iff `f` is strictly better. Returns whether it did.
    pub fn offer(&mut self, centroids: &Centroids, f: f64, at_seconds: f64) -> bool {
        if f < self.best_f {
            self.centroids = Some(centroids.clone());
            self.best_f = f;
            self.updated_at_seconds = at_seconds;
            true
        } else {
            false
        }
    }
}

/// Accepted objective values, one list per private incumbent (index = worker)
/// plus a last list for the shared one.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IncumbentTrace(pub Vec<Vec<f64>>);

struct Step {
    centroids: Centroids,
    f: f64,
    too_few_distinct: bool,
}

/// Assigns the sample and moves every centroid that owns nothing onto a
/// sample point picked by greedy D^2 sampling, until none is empty or the
/// sample has no unclaimed mass left. Returns false in the latter case.
fn reseed_empty(sample: &Dataset, c: &mut Centroids, rng: &mut Rng, counter: &DistanceCounter) -> bool {
    let k = c.k();
    for _ in 0..=k {
        let (labels, dists) = kernel::assign_with_distances(sample, c, counter);
        let mut owned = vec![false; k];
        for &l in &labels {
            owned[l] = true;
        }
        if owned.iter().all(|&o| o) {
            return true;
        }
        let mut sampler = D2Sampler::with_distances(sample, dists, DEFAULT_CANDIDATES);
        for j in (0..k).filter(|&j| !owned[j]) {
            let i = sampler.next(rng, &[], counter);
            if sampler.degenerate {
                return false;
            }
            c.row_mut(j).copy_from_slice(sample.row(i));
        }
    }
    false
}

fn step(
    data: &Dataset,
    k: usize,
    cfg: &BigMeansConfig,
    from: Option<&Centroids>,
    rng: &mut Rng,
    counter: &DistanceCounter,
) -> Result<Step> {
    let idx = index::sample(rng, data.m(), cfg.s).into_vec();
    let sample = data.select(&idx);
    let (c0, ok) = match from {
        None => {
            let mut sampler = D2Sampler::empty(&sample, DEFAULT_CANDIDATES);
            let mut picks = Vec::with_capacity(k);
            for _ in 0..k {
                let i = sampler.next(rng, &picks, counter);
                picks.push(i);
            }
            (Centroids::from_indices(&sample, &picks), !sampler.degenerate)
        }
        Some(c) => {
            let mut c = c.clone();
            let ok = reseed_empty(&sample, &mut c, rng, counter);
            (c, ok)
        }
    };
    let r = run_lloyd(&sample, c0, cfg.stop, EmptyPolicy::KeepPrevious, counter)?;
    Ok(Step { centroids: r.centroids, f: r.objective, too_few_distinct: !ok })
}

/// Runs Big-means. See the module docs for the parallel semantics.
pub fn run_big_means(
    data: &Dataset,
    k: usize,
    cfg: &BigMeansConfig,
    seed: u64,
    counter: &DistanceCounter,
) -> Result<ClusteringResult> {
    run_big_means_traced(data, k, cfg, seed, counter, None)
}

/// [`run_big_means`] that also records every incumbent acceptance.
pub fn run_big_means_traced(
    data: &Dataset,
    k: usize,
    cfg: &BigMeansConfig,
    seed: u64,
    counter: &DistanceCounter,
    mut trace: Option<&mut IncumbentTrace>,
) -> Result<ClusteringResult> {
    cfg.validate(data.m(), k)?;
    let start = Instant::now();
    let local = DistanceCounter::new();
    let w = cfg.workers;
    if let Some(t) = trace.as_deref_mut() {
        t.0 = vec![Vec::new(); w + 1];
    }

    let switch_round = cfg.max_samples.map(|budget| match cfg.mode {
        ParallelMode::Competitive => budget,
        ParallelMode::Collective => 0,
        ParallelMode::Hybrid => (cfg.hybrid_switch_fraction * budget as f64).floor() as usize,
    });
    let switch_time = cfg.time_limit_seconds.map(|limit| match cfg.mode {
        ParallelMode::Competitive => f64::INFINITY,
        ParallelMode::Collective => 0.0,
        ParallelMode::Hybrid => cfg.hybrid_switch_fraction * limit,
    });

    let mut rngs: Vec<Rng> = (0..w).map(|i| child_rng(seed, i as u64)).collect();
    let mut private = vec![Incumbent::default(); w];
    let mut shared: Option<Incumbent> = None;
    let mut rounds = 0usize;
    let mut too_few = false;

    loop {
        let now = start.elapsed().as_secs_f64();
        if cfg.max_samples.is_some_and(|b| rounds >= b) || cfg.time_limit_seconds.is_some_and(|t| now >= t) {
            break;
        }
        let collective_phase = switch_round.is_some_and(|r| rounds >= r) || switch_time.is_some_and(|t| now >= t);
        if collective_phase && shared.is_none() {
            // adopt the best private incumbent, lowest worker on ties
            let mut best = Incumbent::default();
            for inc in &private {
                if inc.best_f < best.best_f {
                    best = inc.clone();
                }
            }
            if let Some(t) = trace.as_deref_mut().filter(|_| best.centroids.is_some()) {
                t.0[w].push(best.best_f);
            }
            shared = Some(best);
        }

        let steps: Vec<Result<Step>> = {
            let shared_c = shared.as_ref().and_then(|s| s.centroids.clone());
            rngs.par_iter_mut()
                .zip(private.par_iter())
                .map(|(rng, own)| {
                    let from = if collective_phase { shared_c.as_ref() } else { own.centroids.as_ref() };
                    step(data, k, cfg, from, rng, &local)
                })
                .collect()
        };
        let at = start.elapsed().as_secs_f64();
        for (i, s) in steps.into_iter().enumerate() {
            let s = s?;
            too_few |= s.too_few_distinct;
            let (inc, slot) = match shared.as_mut() {
                Some(sh) if collective_phase => (sh, w),
                _ => (&mut private[i], i),
            };
            if inc.offer(&s.centroids, s.f, at) {
                if let Some(t) = trace.as_deref_mut() {
                    t.0[slot].push(s.f);
                }
            }
        }
        rounds += 1;
    }

    let winner = match shared {
        Some(sh) => sh,
        None => private.into_iter().reduce(|a, b| if b.best_f < a.best_f { b } else { a }).expect("workers >= 1"),
    };
    let centroids =
        winner.centroids.ok_or_else(|| Error::invalid("time limit expired before the first sample was clustered"))?;
    let (centroids, assignment, objective) = ClusteringResult::finalize(data, centroids, &local);
    counter.add(local.get());
    let mut result = ClusteringResult {
        centroids,
        assignment,
        objective,
        elapsed_seconds: winner.updated_at_seconds,
        n_d: local.get(),
        n_s: (rounds * w * cfg.s) as u64,
        iterations: rounds,
        termination: Termination::Budget,
        flags: Vec::new(),
    };
    if too_few {
        result.flag(RunFlag::SampleTooFewDistinct);
    }
    if result.assignment.cluster_sizes(k).contains(&0) {
        result.flag(RunFlag::EmptyClusters);
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use rand::Rng as _;

    fn blobs(seed: u64, per: usize) -> Dataset {
        let mut g = rng_from_seed(seed);
        let centers = [[0.0, 0.0], [10.0, 0.0], [0.0, 10.0], [10.0, 10.0]];
        let mut v = Vec::new();
        for c in centers {
            for _ in 0..per {
                v.push(c[0] + g.random_range(-1.0..1.0));
                v.push(c[1] + g.random_range(-1.0..1.0));
            }
        }
        Dataset::new(v, 2).unwrap()
    }

    #[test]
    fn far_singletons_reach_zero() {
        let x = Dataset::from_rows(&[[0.0, 0.0], [100.0, 100.0]]).unwrap();
        let counter = DistanceCounter::new();
        let r = run_big_means(&x, 2, &BigMeansConfig::new(2, 5), 1, &counter).unwrap();
        assert_eq!(r.objective, 0.0);
    }

    #[test]
    fn full_sample_single_round_is_lloyd_fixed_point() {
        let x = blobs(3, 25);
        let counter = DistanceCounter::new();
        let r = run_big_means(&x, 4, &BigMeansConfig::new(100, 1), 7, &counter).unwrap();
        let again =
            run_lloyd(&x, r.centroids.clone(), StopRule::new(300, 0.0).unwrap(), EmptyPolicy::KeepPrevious, &counter)
                .unwrap();
        assert!(again.objective <= r.objective);
        assert!(r.verify(&x, 1e-12).unwrap());
        assert_eq!(r.n_s, 100);
    }

    #[test]
    fn single_worker_modes_agree() {
        let x = blobs(5, 40);
        let counter = DistanceCounter::new();
        let mut out = Vec::new();
        for mode in [ParallelMode::Competitive, ParallelMode::Collective, ParallelMode::Hybrid] {
            let cfg = BigMeansConfig { mode, ..BigMeansConfig::new(30, 12) };
            let mut r = run_big_means(&x, 4, &cfg, 11, &counter).unwrap();
            r.elapsed_seconds = 0.0;
            out.push(r);
        }
        assert_eq!(out[0], out[1]);
        assert_eq!(out[1], out[2]);
    }

    #[test]
    fn deterministic_across_invocations() {
        let x = blobs(6, 50);
        let counter = DistanceCounter::new();
        for mode in [ParallelMode::Competitive, ParallelMode::Collective, ParallelMode::Hybrid] {
            let cfg = BigMeansConfig { mode, workers: 3, ..BigMeansConfig::new(40, 10) };
            let mut a = run_big_means(&x, 4, &cfg, 2, &counter).unwrap();
            let mut b = run_big_means(&x, 4, &cfg, 2, &counter).unwrap();
            a.elapsed_seconds = 0.0;
            b.elapsed_seconds = 0.0;
            assert_eq!(a, b);
        }
    }

    #[test]
    fn cas_keeps_strictly_better() {
        let c = Centroids::from_rows(&[[0.0]]).unwrap();
        let mut inc = Incumbent::default();
        assert!(inc.offer(&c, 5.0, 1.0));
        assert!(!inc.offer(&c, 7.0, 2.0));
        assert!(!inc.offer(&c, 5.0, 3.0));
        assert_eq!(inc.best_f, 5.0);
        assert_eq!(inc.updated_at_seconds, 1.0);
    }

    #[test]
    fn trace_is_monotone() {
        let x = blobs(8, 60);
        let counter = DistanceCounter::new();
        let mut trace = IncumbentTrace::default();
        let cfg = BigMeansConfig { workers: 2, ..BigMeansConfig::new(30, 40) };
        run_big_means_traced(&x, 4, &cfg, 4, &counter, Some(&mut trace)).unwrap();
        for t in &trace.0 {
            assert!(t.windows(2).all(|w| w[1] < w[0]));
        }
        assert!(trace.0.iter().map(Vec::len).sum::<usize>() > 0);
    }

    #[test]
    fn reseeding_fills_empty_clusters() {
        let x = blobs(9, 20);
        let counter = DistanceCounter::new();
        let mut c = Centroids::from_rows(&[[0.0, 0.0], [1000.0, 1000.0], [-1000.0, 5.0], [10.0, 10.0]]).unwrap();
        assert!(reseed_empty(&x, &mut c, &mut rng_from_seed(1), &counter));
        let (a, _) = kernel::assign_points(&x, &c, &counter).unwrap();
        assert!(!a.cluster_sizes(4).contains(&0));
    }

    #[test]
    fn too_few_distinct_is_flagged() {
        let x = Dataset::from_rows(&[[1.0, 1.0], [1.0, 1.0], [1.0, 1.0], [1.0, 1.0]]).unwrap();
        let counter = DistanceCounter::new();
        let r = run_big_means(&x, 2, &BigMeansConfig::new(3, 3), 0, &counter).unwrap();
        assert!(r.flags.contains(&RunFlag::SampleTooFewDistinct));
        assert_eq!(r.objective, 0.0);
    }

    #[test]
    fn invalid_configs() {
        let x = blobs(1, 5);
        let counter = DistanceCounter::new();
        assert!(run_big_means(&x, 4, &BigMeansConfig::new(3, 1), 0, &counter).is_err());
        assert!(run_big_means(&x, 2, &BigMeansConfig::new(21, 1), 0, &counter).is_err());
        let cfg = BigMeansConfig { max_samples: None, ..BigMeansConfig::new(5, 1) };
        assert!(run_big_means(&x, 2, &cfg, 0, &counter).is_err());
        let cfg = BigMeansConfig { workers: 0, ..BigMeansConfig::new(5, 1) };
        assert!(run_big_means(&x, 2, &cfg, 0, &counter).is_err());
    }

    #[test]
    fn time_limited_run_finishes() {
        let x = blobs(2, 30);
        let counter = DistanceCounter::new();
        let cfg = BigMeansConfig {
            max_samples: None,
            time_limit_seconds: Some(0.05),
            workers: 2,
            ..BigMeansConfig::new(20, 1)
        };
        let r = run_big_means(&x, 4, &cfg, 0, &counter).unwrap();
        assert!(r.iterations >= 1);
        assert!(r.elapsed_seconds <= 1.0);
    }
}
