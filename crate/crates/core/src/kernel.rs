//! The squared-distance kernel, nearest-centroid assignment, centroid update
//! and the sum-of-squares objective shared by every algorithm.

use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;

use crate::dataset::{Assignment, Centroids, Dataset};
use crate::error::{Error, Result};

/// Running tally of squared-distance evaluations.
///
/// Safe to share between threads; it only ever grows.
#[derive(Debug, Default)]
pub struct DistanceCounter(AtomicU64);

impl DistanceCounter {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&self, evals: u64) {
        self.0.fetch_add(evals, Ordering::Relaxed);
    }

    #[inline]
    pub fn get(&self) -> u64 {
        self.0.load(Ordering::Relaxed)
    }
}

/// Squared Euclidean distance without bookkeeping. Callers account for the
/// evaluation on a [`DistanceCounter`] themselves, usually in bulk.
#[inline]
pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        acc += d * d;
    }
    acc
}

/// `sum_j (a_j - b_j)^2`, counted as one evaluation.
pub fn squared_distance(a: &[f64], b: &[f64], counter: &DistanceCounter) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch { expected: a.len(), actual: b.len() });
    }
    counter.add(1);
    Ok(sq_dist(a, b))
}

/// Index and squared distance of the centroid nearest to `x`; ties go to the
/// lowest index. Uncounted.
#[inline]
pub(crate) fn nearest(x: &[f64], c: &Centroids) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, row) in c.rows().enumerate() {
        let d = sq_dist(x, row);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

// Below this many scalar operations the rayon split costs more than it saves.
const PAR_THRESHOLD: usize = 1 << 16;
const CHUNK: usize = 1024;

/// Labels plus each point's squared distance to its centroid. Counts `m * k`.
pub(crate) fn assign_with_distances(
    data: &Dataset,
    c: &Centroids,
    counter: &DistanceCounter,
) -> (Vec<usize>, Vec<f64>) {
    let m = data.m();
    let mut labels = vec![0usize; m];
    let mut dists = vec![0.0f64; m];
    let fill = |offset: usize, ls: &mut [usize], ds: &mut [f64]| {
        for (i, (l, d)) in ls.iter_mut().zip(ds.iter_mut()).enumerate() {
            let (j, dist) = nearest(data.row(offset + i), c);
            *l = j;
            *d = dist;
        }
    };
    if m * c.k() * data.n() >= PAR_THRESHOLD {
        labels
            .par_chunks_mut(CHUNK)
            .zip(dists.par_chunks_mut(CHUNK))
            .enumerate()
            .for_each(|(ci, (ls, ds))| fill(ci * CHUNK, ls, ds));
    } else {
        fill(0, &mut labels, &mut dists);
    }
    counter.add((m * c.k()) as u64);
    (labels, dists)
}

/// Sequential left-to-right sum, so the objective is independent of how the
/// distances were produced.
#[inline]
pub(crate) fn total(dists: &[f64]) -> f64 {
    dists.iter().sum()
}

/// Maps every point to its nearest centroid and returns the sum-of-squares
/// objective. Advances `counter` by exactly `m * k`.
pub fn assign_points(data: &Dataset, c: &Centroids, counter: &DistanceCounter) -> Result<(Assignment, f64)> {
    check_dims(data, c)?;
    let (labels, dists) = assign_with_distances(data, c, counter);
    Ok((Assignment::from_vec_unchecked(labels), total(&dists)))
}

/// `f(C, X)`: the sum over points of the squared distance to the nearest center.
pub fn objective(data: &Dataset, c: &Centroids, counter: &DistanceCounter) -> Result<f64> {
    assign_points(data, c, counter).map(|(_, f)| f)
}

pub(crate) fn check_dims(data: &Dataset, c: &Centroids) -> Result<()> {
    if data.n() != c.n() {
        return Err(Error::DimensionMismatch { expected: data.n(), actual: c.n() });
    }
    Ok(())
}

/// Recomputes every centroid as the mean of its members.
///
/// Centroids with no members keep their row from `prev` and are flagged in
/// the returned vector. `prev.k()` is the cluster count.
pub fn update_centroids(data: &Dataset, assignment: &Assignment, prev: &Centroids) -> Result<(Centroids, Vec<bool>)> {
    check_dims(data, prev)?;
    if assignment.len() != data.m() {
        return Err(Error::invalid(format!("assignment covers {} points, dataset has {}", assignment.len(), data.m())));
    }
    let k = prev.k();
    if let Some(&l) = assignment.labels().iter().find(|&&l| l >= k) {
        return Err(Error::invalid(format!("label {l} is not < k = {k}")));
    }
    Ok(update_unchecked(data, assignment.labels(), prev))
}

pub(crate) fn update_unchecked(data: &Dataset, labels: &[usize], prev: &Centroids) -> (Centroids, Vec<bool>) {
    let (k, n) = (prev.k(), prev.n());
    let mut sums = vec![0.0f64; k * n];
    let mut counts = vec![0usize; k];
    for (row, &l) in data.rows().zip(labels) {
        counts[l] += 1;
        for (s, v) in sums[l * n..(l + 1) * n].iter_mut().zip(row) {
            *s += v;
        }
    }
    let mut out = prev.clone();
    let mut empty = vec![false; k];
    for j in 0..k {
        if counts[j] == 0 {
            empty[j] = true;
            continue;
        }
        let inv = counts[j] as f64;
        for (dst, s) in out.row_mut(j).iter_mut().zip(&sums[j * n..(j + 1) * n]) {
            *dst = s / inv;
        }
    }
    (out, empty)
}

/// Relative error in percent, `100 * (f - f_star) / f_star`. Negative when
/// `f` beats the reference.
pub fn relative_error(f: f64, f_star: f64) -> Result<f64> {
    if !(f_star > 0.0) {
        return Err(Error::invalid(format!("reference objective must be > 0, got {f_star}")));
    }
    Ok(100.0 * (f - f_star) / f_star)
}
