//! Lloyd's local search: alternate nearest-centroid assignment and mean
//! update until the partition is stable, the iteration budget runs out, or
//! the objective stops improving by more than `rel_tol`.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::dataset::{Assignment, Centroids, Dataset};
use crate::error::{Error, Result};
use crate::kernel::{self, DistanceCounter};
use crate::result::{ClusteringResult, RunFlag, Termination};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StopRule {
    pub max_iters: usize,
    pub rel_tol: f64,
}

impl Default for StopRule {
    fn default() -> Self {
        Self { max_iters: 300, rel_tol: 1e-4 }
    }
}

impl StopRule {
    pub fn new(max_iters: usize, rel_tol: f64) -> Result<Self> {
        let rule = Self { max_iters, rel_tol };
        rule.validate()?;
        Ok(rule)
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::invalid("max_iters must be at least 1"));
        }
        if !(self.rel_tol >= 0.0) {
            return Err(Error::invalid("rel_tol must be non-negative"));
        }
        Ok(())
    }

    /// True when the drop from `prev` to `cur` is below the relative tolerance.
    pub(crate) fn stalled(&self, prev: f64, cur: f64) -> bool {
        if prev <= 0.0 {
            return true;
        }
        ((prev - cur).abs() / prev) < self.rel_tol
    }
}

/// What to do with a centroid that lost all its points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EmptyPolicy {
    /// Leave it where it was.
    #[default]
    KeepPrevious,
    /// Move it onto the point currently farthest from its own centroid.
    ReseedFarthest,
}

/// Runs Lloyd from `c0`.
///
/// Each iteration is one full assignment (`m * k` evaluations) followed, if
/// no stop condition fires, by a mean update. The search stops when the
/// update leaves every centroid unchanged, after `max_iters` assignments, or
/// when the objective improved by less than `rel_tol` relative to the
/// previous iteration. Because every stop happens right after an assignment,
/// the returned labels and objective always belong to the returned centroids.
pub fn run_lloyd(
    data: &Dataset,
    c0: Centroids,
    stop: StopRule,
    policy: EmptyPolicy,
    counter: &DistanceCounter,
) -> Result<ClusteringResult> {
    run_lloyd_traced(data, c0, stop, policy, counter, None)
}

/// [`run_lloyd`] that also records the objective after every assignment.
pub fn run_lloyd_traced(
    data: &Dataset,
    c0: Centroids,
    stop: StopRule,
    policy: EmptyPolicy,
    counter: &DistanceCounter,
    mut trace: Option<&mut Vec<f64>>,
) -> Result<ClusteringResult> {
    kernel::check_dims(data, &c0)?;
    stop.validate()?;
    let start = Instant::now();
    let local = DistanceCounter::new();
    let k = c0.k();
    let mut c = c0;
    let mut prev_f = f64::INFINITY;
    let mut iters = 0;

    let (labels, f, termination) = loop {
        let (labels, dists) = kernel::assign_with_distances(data, &c, &local);
        let f = kernel::total(&dists);
        iters += 1;
        if let Some(t) = trace.as_deref_mut() {
            t.push(f);
        }
        debug_assert!(f <= prev_f * (1.0 + 1e-12) + 1e-12, "objective rose from {prev_f} to {f}");
        if iters >= stop.max_iters {
            break (labels, f, Termination::MaxIterations);
        }
        if prev_f.is_finite() && stop.stalled(prev_f, f) {
            break (labels, f, Termination::RelativeTolerance);
        }
        let (mut next, empty) = kernel::update_unchecked(data, &labels, &c);
        if policy == EmptyPolicy::ReseedFarthest && empty.iter().any(|&e| e) {
            reseed_farthest(data, &mut next, &empty, &dists);
        }
        if next == c {
            break (labels, f, Termination::Converged);
        }
        c = next;
        prev_f = f;
    };

    counter.add(local.get());
    let assignment = Assignment::from_vec_unchecked(labels);
    let mut result = ClusteringResult {
        centroids: c,
        objective: f,
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

/// Moves each empty centroid onto a distinct point, farthest first, using the
/// distances from the assignment that produced the empty clusters.
fn reseed_farthest(data: &Dataset, c: &mut Centroids, empty: &[bool], dists: &[f64]) {
    let mut order: Vec<usize> = (0..data.m()).collect();
    order.sort_by(|&a, &b| dists[b].total_cmp(&dists[a]).then(a.cmp(&b)));
    let mut donors = order.into_iter().filter(|&i| dists[i] > 0.0);
    for (j, _) in empty.iter().enumerate().filter(|(_, &e)| e) {
        match donors.next() {
            Some(i) => c.row_mut(j).copy_from_slice(data.row(i)),
            None => break,
        }
    }
}
