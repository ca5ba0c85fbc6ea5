//! IK-means: Lloyd with "early classification". A point whose two nearest
//! centroids are far apart relative to how much those centroids just moved is
//! excluded from reassignment; every `recheck_period` iterations excluded
//! points that drifted outside their cluster radius are brought back.
//!
//! Distance accounting: `n_d` counts point-to-centroid evaluations made to
//! classify points (assignment, re-inclusion checks and the final labelling).
//! Each point costs at most `k` per iteration, so `n_d <= iterations * m * k`.
//! Radius and shift bookkeeping is not counted.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::dataset::{Assignment, Centroids, Dataset};
use crate::error::{Error, Result};
use crate::init::forgy_seed;
use crate::kernel::{self, sq_dist, DistanceCounter};
use crate::lloyd::StopRule;
use crate::result::{ClusteringResult, RunFlag, Termination};
use crate::rng::Rng;

/// The test deciding when a point stops being reassigned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExclusionRule {
    /// `|d1^2 - d2^2| > S[idx1] + S[idx2]`: squared distances against plain
    /// centroid shifts.
    #[default]
    Verbatim,
    /// `d2 - d1 > S[idx1] + S[idx2]` on plain distances.
    StrictElkan,
    /// Never exclude; the search degenerates to Lloyd.
    Disabled,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IkMeansConfig {
    pub stop: StopRule,
    pub recheck_period: usize,
    pub rule: ExclusionRule,
}

impl Default for IkMeansConfig {
    fn default() -> Self {
        Self { stop: StopRule::default(), recheck_period: 5, rule: ExclusionRule::Verbatim }
    }
}

/// Per-run exclusion bookkeeping.
#[derive(Debug, Clone)]
pub struct ExclusionState {
    pub excluded: Vec<bool>,
    /// Largest plain distance from each centroid to one of its members.
    pub radii: Vec<f64>,
    /// Plain distance each centroid moved in the last update.
    pub shifts: Vec<f64>,
    pub labels: Vec<usize>,
    pub recheck_period: usize,
    // squared distance to own centroid, valid where `own_fresh` is set
    own_sq: Vec<f64>,
    own_fresh: Vec<bool>,
}

impl ExclusionState {
    fn new(m: usize, k: usize, recheck_period: usize) -> Self {
        Self {
            excluded: vec![false; m],
            radii: vec![0.0; k],
            shifts: vec![0.0; k],
            labels: vec![0; m],
            recheck_period,
            own_sq: vec![0.0; m],
            own_fresh: vec![false; m],
        }
    }

    pub fn excluded_count(&self) -> usize {
        self.excluded.iter().filter(|&&e| e).count()
    }

    /// Re-includes excluded points lying outside their cluster radius. One
    /// evaluation per excluded point.
    pub fn recheck(&mut self, data: &Dataset, c: &Centroids, counter: &DistanceCounter) {
        let mut evals = 0u64;
        for i in 0..self.excluded.len() {
            if !self.excluded[i] {
                continue;
            }
            let a = self.labels[i];
            let d = sq_dist(data.row(i), c.row(a));
            evals += 1;
            self.own_sq[i] = d;
            self.own_fresh[i] = true;
            if d.sqrt() > self.radii[a] {
                self.excluded[i] = false;
            }
        }
        counter.add(evals);
    }

    /// True when no excluded point lies outside its cluster radius.
    pub fn radius_invariant_holds(&self, data: &Dataset, c: &Centroids) -> bool {
        self.excluded
            .iter()
            .enumerate()
            .filter(|(_, &e)| e)
            .all(|(i, _)| sq_dist(data.row(i), c.row(self.labels[i])).sqrt() <= self.radii[self.labels[i]])
    }
}

/// IK-means from a Forgy start.
pub fn run_ikmeans(
    data: &Dataset,
    k: usize,
    rng: &mut Rng,
    cfg: &IkMeansConfig,
    counter: &DistanceCounter,
) -> Result<ClusteringResult> {
    if k == 0 || k > data.m() {
        return Err(Error::invalid(format!("k = {k} must be in 1..={}", data.m())));
    }
    let c0 = forgy_seed(data, k, rng)?;
    run_ikmeans_from(data, c0, cfg, counter)
}

/// IK-means from the given centroids.
pub fn run_ikmeans_from(
    data: &Dataset,
    c0: Centroids,
    cfg: &IkMeansConfig,
    counter: &DistanceCounter,
) -> Result<ClusteringResult> {
    run_ikmeans_observed(data, c0, cfg, counter, |_, _| {})
}

/// Same as [`run_ikmeans_from`], calling `observe` after every re-inclusion pass.
pub fn run_ikmeans_observed<F>(
    data: &Dataset,
    c0: Centroids,
    cfg: &IkMeansConfig,
    counter: &DistanceCounter,
    mut observe: F,
) -> Result<ClusteringResult>
where
    F: FnMut(&ExclusionState, &Centroids),
{
    kernel::check_dims(data, &c0)?;
    cfg.stop.validate()?;
    if cfg.recheck_period == 0 {
        return Err(Error::invalid("recheck_period must be at least 1"));
    }
    let start = Instant::now();
    let local = DistanceCounter::new();
    let (m, k) = (data.m(), c0.k());
    let mut st = ExclusionState::new(m, k, cfg.recheck_period);
    let mut c = c0;
    let mut d1 = vec![0.0f64; m];
    let mut fresh = vec![false; m];
    let mut prev_full_f: Option<f64> = None;
    let mut iters = 0;
    let mut dist_buf = vec![0.0f64; k];

    let termination = loop {
        iters += 1;
        let t = iters;
        st.own_fresh.iter_mut().for_each(|f| *f = false);
        fresh.iter_mut().for_each(|f| *f = false);
        if t % cfg.recheck_period == 0 {
            st.recheck(data, &c, &local);
            observe(&st, &c);
        }

        let mut evals = 0u64;
        for i in 0..m {
            if st.excluded[i] {
                continue;
            }
            let x = data.row(i);
            for (j, slot) in dist_buf.iter_mut().enumerate() {
                if st.own_fresh[i] && j == st.labels[i] {
                    *slot = st.own_sq[i];
                } else {
                    *slot = sq_dist(x, c.row(j));
                    evals += 1;
                }
            }
            let (idx1, idx2) = two_nearest(&dist_buf);
            st.labels[i] = idx1;
            d1[i] = dist_buf[idx1];
            fresh[i] = true;
            if t >= 2 && excludes(cfg.rule, &dist_buf, idx1, idx2, &st.shifts) {
                st.excluded[i] = true;
            }
        }
        local.add(evals);

        if st.excluded.iter().all(|&e| e) {
            break Termination::AllExcluded;
        }
        if t >= cfg.stop.max_iters {
            break Termination::MaxIterations;
        }
        let full = fresh.iter().all(|&f| f);
        if full {
            let f = kernel::total(&d1);
            if let Some(prev) = prev_full_f {
                if cfg.stop.stalled(prev, f) {
                    break Termination::RelativeTolerance;
                }
            }
            prev_full_f = Some(f);
        } else {
            prev_full_f = None;
        }

        let (next, _) = kernel::update_unchecked(data, &st.labels, &c);
        refresh_radii(data, &st.labels, &next, &mut st.radii);
        for j in 0..k {
            st.shifts[j] = sq_dist(c.row(j), next.row(j)).sqrt();
        }
        if next == c {
            break Termination::Converged;
        }
        c = next;
    };

    // Label points whose assignment predates the current centroids.
    let mut evals = 0u64;
    for i in 0..m {
        if fresh[i] {
            continue;
        }
        let x = data.row(i);
        let mut best = (0usize, f64::INFINITY);
        for j in 0..k {
            let d = if st.own_fresh[i] && j == st.labels[i] {
                st.own_sq[i]
            } else {
                evals += 1;
                sq_dist(x, c.row(j))
            };
            if d < best.1 {
                best = (j, d);
            }
        }
        st.labels[i] = best.0;
        d1[i] = best.1;
    }
    local.add(evals);
    counter.add(local.get());

    let objective = kernel::total(&d1);
    let assignment = Assignment::from_vec_unchecked(st.labels);
    let mut result = ClusteringResult {
        centroids: c,
        objective,
        elapsed_seconds: start.elapsed().as_secs_f64(),
        n_d: local.get(),
        n_s: 0,
        iterations: iters,
        termination,
        flags: Vec::new(),
        assignment,
    };
    if result.assignment.cluster_sizes(k).contains(&0) {
        result.flag(RunFlag::EmptyClusters);
    }
    Ok(result)
}

/// Indices of the nearest and second-nearest entries, ties to the lower index.
/// With a single entry both are 0.
fn two_nearest(d: &[f64]) -> (usize, usize) {
    let mut first = 0;
    for j in 1..d.len() {
        if d[j] < d[first] {
            first = j;
        }
    }
    let mut second = usize::MAX;
    for j in 0..d.len() {
        if j != first && (second == usize::MAX || d[j] < d[second]) {
            second = j;
        }
    }
    if second == usize::MAX {
        second = first;
    }
    (first, second)
}

fn excludes(rule: ExclusionRule, d: &[f64], idx1: usize, idx2: usize, shifts: &[f64]) -> bool {
    if idx1 == idx2 {
        // a single centroid: nothing can ever steal the point
        return rule != ExclusionRule::Disabled;
    }
    let bound = shifts[idx1] + shifts[idx2];
    match rule {
        ExclusionRule::Verbatim => (d[idx1] - d[idx2]).abs() > bound,
        ExclusionRule::StrictElkan => d[idx2].sqrt() - d[idx1].sqrt() > bound,
        ExclusionRule::Disabled => false,
    }
}

fn refresh_radii(data: &Dataset, labels: &[usize], c: &Centroids, radii: &mut [f64]) {
    radii.iter_mut().for_each(|r| *r = 0.0);
    for (x, &l) in data.rows().zip(labels) {
        let d = sq_dist(x, c.row(l));
        if d > radii[l] {
            radii[l] = d;
        }
    }
    radii.iter_mut().for_each(|r| *r = r.sqrt());
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lloyd::{run_lloyd, EmptyPolicy};
    use crate::rng::rng_from_seed;
    use rand::Rng as _;

    fn blobs(seed: u64, per: usize) -> Dataset {
        let mut rng = rng_from_seed(seed);
        let mut v = Vec::new();
        for &(cx, cy) in &[(0.0, 0.0), (20.0, 5.0), (-8.0, 30.0)] {
            for _ in 0..per {
                v.push(cx + rng.random_range(-3.0..3.0));
                v.push(cy + rng.random_range(-3.0..3.0));
            }
        }
        Dataset::new(v, 2).unwrap()
    }

    #[test]
    fn singleton_clusters_converge_immediately() {
        let x = Dataset::from_rows(&[[0.0, 0.0], [4.0, 4.0]]).unwrap();
        let c0 = Centroids::from_rows(&[[0.0, 0.0], [4.0, 4.0]]).unwrap();
        let counter = DistanceCounter::new();
        let ik = run_ikmeans_from(&x, c0.clone(), &IkMeansConfig::default(), &counter).unwrap();
        let ll = run_lloyd(&x, c0, StopRule::default(), EmptyPolicy::KeepPrevious, &counter).unwrap();
        assert_eq!(ik.iterations, 1);
        assert_eq!(ik.objective, 0.0);
        assert_eq!(ik.centroids, ll.centroids);
        assert_eq!(ik.assignment, ll.assignment);
    }

    #[test]
    fn disabled_exclusion_is_bit_identical_to_lloyd() {
        for seed in 0..10 {
            let x = blobs(seed, 40);
            let c0 = forgy_seed(&x, 4, &mut rng_from_seed(seed + 100)).unwrap();
            let cfg = IkMeansConfig { rule: ExclusionRule::Disabled, ..Default::default() };
            let counter = DistanceCounter::new();
            let ik = run_ikmeans_from(&x, c0.clone(), &cfg, &counter).unwrap();
            let ll = run_lloyd(&x, c0, cfg.stop, EmptyPolicy::KeepPrevious, &counter).unwrap();
            assert_eq!(ik.centroids, ll.centroids);
            assert_eq!(ik.assignment, ll.assignment);
            assert_eq!(ik.objective.to_bits(), ll.objective.to_bits());
            assert_eq!(ik.iterations, ll.iterations);
            assert_eq!(ik.n_d, ll.n_d);
        }
    }

    #[test]
    fn counter_bound_and_objective_consistency() {
        for rule in [ExclusionRule::Verbatim, ExclusionRule::StrictElkan] {
            for seed in 0..20 {
                let x = blobs(seed, 30);
                let cfg = IkMeansConfig { rule, recheck_period: 1 + (seed as usize % 4), ..Default::default() };
                let counter = DistanceCounter::new();
                let r = run_ikmeans(&x, 3, &mut rng_from_seed(seed), &cfg, &counter).unwrap();
                assert!(r.n_d <= (r.iterations * x.m() * 3) as u64);
                assert_eq!(counter.get(), r.n_d);
                assert!(r.verify(&x, 1e-9).unwrap());
            }
        }
    }

    #[test]
    fn excluded_points_stay_inside_radius_after_recheck() {
        for seed in 0..10 {
            let x = blobs(seed, 50);
            let c0 = forgy_seed(&x, 5, &mut rng_from_seed(seed)).unwrap();
            let cfg = IkMeansConfig { recheck_period: 2, ..Default::default() };
            let counter = DistanceCounter::new();
            let mut passes = 0;
            run_ikmeans_observed(&x, c0, &cfg, &counter, |st, c| {
                passes += 1;
                assert!(st.radius_invariant_holds(&x, c));
            })
            .unwrap();
            let _ = passes;
        }
    }

    #[test]
    fn recheck_period_one_matches_lloyd_on_separated_blobs() {
        let x = blobs(3, 60);
        // one centroid inside each blob: the partition is right from the start
        let c0 = Centroids::from_indices(&x, &[0, 60, 120]);
        let cfg = IkMeansConfig { recheck_period: 1, ..Default::default() };
        let counter = DistanceCounter::new();
        let ik = run_ikmeans_from(&x, c0.clone(), &cfg, &counter).unwrap();
        let ll = run_lloyd(&x, c0, StopRule::default(), EmptyPolicy::KeepPrevious, &counter).unwrap();
        assert_eq!(ik.assignment, ll.assignment);
    }

    #[test]
    fn k_one_and_errors() {
        let x = blobs(1, 10);
        let counter = DistanceCounter::new();
        let r = run_ikmeans(&x, 1, &mut rng_from_seed(0), &IkMeansConfig::default(), &counter).unwrap();
        let mean = x.mean();
        for (a, b) in r.centroids.row(0).iter().zip(&mean) {
            assert!((a - b).abs() < 1e-9);
        }
        assert!(run_ikmeans(&x, 31, &mut rng_from_seed(0), &IkMeansConfig::default(), &counter).is_err());
        let bad = IkMeansConfig { recheck_period: 0, ..Default::default() };
        assert!(run_ikmeans(&x, 2, &mut rng_from_seed(0), &bad, &counter).is_err());
    }

    #[test]
    fn two_nearest_ties() {
        assert_eq!(two_nearest(&[1.0, 1.0, 0.5]), (2, 0));
        assert_eq!(two_nearest(&[3.0]), (0, 0));
    }
}
