use serde::{Deserialize, Serialize};

use crate::dataset::{Assignment, Centroids, Dataset};
use crate::error::Result;
use crate::kernel::{self, DistanceCounter};

/// Degenerate situations an algorithm worked around instead of failing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunFlag {
    /// D^2 seeding hit a zero total cost and fell back to uniform picks.
    DegenerateSeeding,
    /// At least one cluster ended with no members.
    EmptyClusters,
    /// Empty chunk clusters were left out of a centroid pool.
    EmptyClustersDropped,
    /// A centroid pool came up short and was topped up from the data.
    PoolToppedUp,
    /// Coreset sampling fell back to uniform weights (all points identical).
    UniformCoresetFallback,
    /// A sample had fewer distinct points than clusters, so some stayed empty.
    SampleTooFewDistinct,
}

/// Why an iterative local search stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    MaxIterations,
    RelativeTolerance,
    /// Every point was excluded from reassignment.
    AllExcluded,
    /// The algorithm runs for a fixed budget and has no convergence test.
    Budget,
}

/// Output of one clustering run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteringResult {
    pub centroids: Centroids,
    pub assignment: Assignment,
    /// Sum-of-squares objective of `centroids` on the full dataset.
    pub objective: f64,
    /// Seconds of wall time. Big-means reports the time of its last incumbent
    /// update instead of the total.
    pub elapsed_seconds: f64,
    /// Squared-distance evaluations.
    pub n_d: u64,
    /// Samples processed (0 for algorithms that do not sample).
    pub n_s: u64,
    /// Local-search iterations of the (last or outermost) search.
    pub iterations: usize,
    pub termination: Termination,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<RunFlag>,
}

impl ClusteringResult {
    /// Final full-dataset assignment for `centroids`; counts `m * k`.
    pub(crate) fn finalize(
        data: &Dataset,
        centroids: Centroids,
        counter: &DistanceCounter,
    ) -> (Centroids, Assignment, f64) {
        let (labels, dists) = kernel::assign_with_distances(data, &centroids, counter);
        let f = kernel::total(&dists);
        (centroids, Assignment::from_vec_unchecked(labels), f)
    }

    pub(crate) fn flag(&mut self, flag: RunFlag) {
        if !self.flags.contains(&flag) {
            self.flags.push(flag);
        }
    }

    /// Recomputes the objective from scratch and compares it with the stored one.
    pub fn verify(&self, data: &Dataset, rel_tol: f64) -> Result<bool> {
        let scratch = DistanceCounter::new();
        let f = kernel::objective(data, &self.centroids, &scratch)?;
        let scale = f.abs().max(self.objective.abs()).max(f64::MIN_POSITIVE);
        Ok((f - self.objective).abs() <= rel_tol * scale || f == self.objective)
    }
}
