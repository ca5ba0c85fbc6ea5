//! CURE: hierarchical clustering of a sample through shrunken representative
//! points.
//!
//! The sample is split into `p = max(1, floor(s / (f * k * q)))` balanced
//! partitions. Each partition is reduced to `q * k` clusters by centroid
//! linkage, and every cluster keeps up to `c` farthest-first representatives
//! moved a fraction `alpha` toward its centroid. The pooled clusters are then
//! merged down to `k` by single linkage over their representatives. Every row
//! of the dataset joins the cluster of its nearest representative; the
//! reported centroids are the means of those groups.

use std::time::Instant;

use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{Centroids, Dataset};
use crate::error::{Error, Result};
use crate::kernel::{self, sq_dist, DistanceCounter};
use crate::result::{ClusteringResult, RunFlag, Termination};
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CureParams {
    pub k: usize,
    /// Sample size.
    pub s: usize,
    /// Partition factor.
    pub f: usize,
    /// Clusters kept per partition, as a multiple of `k`.
    pub q: usize,
    /// Representatives per cluster.
    pub c: usize,
    /// Shrink fraction toward the centroid.
    pub alpha: f64,
}

impl CureParams {
    pub fn new(k: usize, s: usize) -> Self {
        Self { k, s, f: 10, q: 5, c: 10, alpha: 0.3 }
    }

    pub fn partitions(&self) -> usize {
        (self.s / (self.f * self.k * self.q)).max(1)
    }

    pub fn validate(&self, m: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::invalid(msg));
        if self.k == 0 || self.f == 0 || self.q == 0 || self.c == 0 {
            return bad("k, f, q and c must all be at least 1".into());
        }
        if self.s == 0 || self.s > m {
            return bad(format!("sample size s = {} must satisfy 1 <= s <= m = {m}", self.s));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return bad(format!("alpha = {} must satisfy 0 <= alpha <= 1", self.alpha));
        }
        let smallest = self.s / self.partitions();
        if smallest < self.q * self.k {
            return bad(format!("smallest partition holds {smallest} points, fewer than q * k = {}", self.q * self.k));
        }
        Ok(())
    }
}

/// A cluster summarised by its centroid, size and representatives.
#[derive(Debug, Clone, PartialEq)]
pub struct RepCluster {
    pub centroid: Vec<f64>,
    pub count: usize,
    pub reps: Vec<Vec<f64>>,
}

/// Balanced contiguous split of `0..len` into `p` parts.
fn balanced(len: usize, p: usize) -> Vec<std::ops::Range<usize>> {
    let (base, extra) = (len / p, len % p);
    let mut lo = 0;
    (0..p)
        .map(|i| {
            let hi = lo + base + usize::from(i < extra);
            let r = lo..hi;
            lo = hi;
            r
        })
        .collect()
}

fn mean_of(data: &Dataset, members: &[usize]) -> Vec<f64> {
    let mut mu = vec![0.0; data.n()];
    for &i in members {
        for (a, v) in mu.iter_mut().zip(data.row(i)) {
            *a += v;
        }
    }
    let inv = members.len() as f64;
    mu.iter_mut().for_each(|a| *a /= inv);
    mu
}

/// Agglomerates `rows` of `data` by centroid linkage until `target` groups
/// remain. Returns the member lists in order of their smallest original slot.
pub fn centroid_linkage(data: &Dataset, rows: &[usize], target: usize, counter: &DistanceCounter) -> Vec<Vec<usize>> {
    let n = rows.len();
    let mut members: Vec<Option<Vec<usize>>> = rows.iter().map(|&i| Some(vec![i])).collect();
    let mut centroid: Vec<Vec<f64>> = rows.iter().map(|&i| data.row(i).to_vec()).collect();
    let mut evals = 0u64;
    let nearest_of = |i: usize, members: &[Option<Vec<usize>>], centroid: &[Vec<f64>], evals: &mut u64| {
        let mut best = (f64::INFINITY, usize::MAX);
        for j in 0..n {
            if j != i && members[j].is_some() {
                let d = sq_dist(&centroid[i], &centroid[j]);
                *evals += 1;
                if d < best.0 {
                    best = (d, j);
                }
            }
        }
        best
    };
    let mut nn: Vec<(f64, usize)> = (0..n).map(|i| nearest_of(i, &members, &centroid, &mut evals)).collect();
    let mut active = n;
    while active > target {
        let mut a = usize::MAX;
        for i in 0..n {
            if members[i].is_some() && (a == usize::MAX || nn[i].0 < nn[a].0) {
                a = i;
            }
        }
        let b = nn[a].1;
        let (lo, hi) = (a.min(b), a.max(b));
        let absorbed = members[hi].take().expect("active");
        let merged = members[lo].as_mut().expect("active");
        merged.extend(absorbed);
        centroid[lo] = mean_of(data, merged);
        active -= 1;
        for x in 0..n {
            if x == lo || members[x].is_none() {
                continue;
            }
            if nn[x].1 == lo || nn[x].1 == hi {
                nn[x] = nearest_of(x, &members, &centroid, &mut evals);
            } else {
                let d = sq_dist(&centroid[x], &centroid[lo]);
                evals += 1;
                if d < nn[x].0 || (d == nn[x].0 && lo < nn[x].1) {
                    nn[x] = (d, lo);
                }
            }
        }
        nn[lo] = nearest_of(lo, &members, &centroid, &mut evals);
    }
    counter.add(evals);
    members.into_iter().flatten().collect()
}

/// Up to `c` farthest-first representatives of `members`, each moved
/// `alpha` of the way toward `centroid`.
pub fn representatives(
    data: &Dataset,
    members: &[usize],
    centroid: &[f64],
    c: usize,
    alpha: f64,
    counter: &DistanceCounter,
) -> Vec<Vec<f64>> {
    let want = c.min(members.len());
    // distance of every member to the nearest chosen representative; the
    // first pick is the member farthest from the centroid
    let mut gap: Vec<f64> = members.iter().map(|&i| sq_dist(data.row(i), centroid)).collect();
    let mut evals = members.len() as u64;
    let mut chosen: Vec<usize> = Vec::with_capacity(want);
    for round in 0..want {
        let mut best = 0;
        for (t, &g) in gap.iter().enumerate() {
            if g > gap[best] {
                best = t;
            }
        }
        chosen.push(members[best]);
        let p = data.row(members[best]);
        for (t, g) in gap.iter_mut().enumerate() {
            let d = sq_dist(data.row(members[t]), p);
            *g = if round == 0 { d } else { g.min(d) };
        }
        gap[best] = f64::NEG_INFINITY;
        evals += members.len() as u64;
    }
    counter.add(evals);
    chosen.into_iter().map(|i| data.row(i).iter().zip(centroid).map(|(x, mu)| x + alpha * (mu - x)).collect()).collect()
}

/// Single-linkage merge of `pool` down to `k` groups, where the distance
/// between two clusters is the smallest distance between their
/// representatives. Returns the group of every pool cluster (numbered by
/// first appearance) and the height of each merge in order.
pub fn merge_pool(pool: &[RepCluster], k: usize, counter: &DistanceCounter) -> (Vec<usize>, Vec<f64>) {
    let p = pool.len();
    let link = |a: &RepCluster, b: &RepCluster| {
        let mut best = f64::INFINITY;
        for x in &a.reps {
            for y in &b.reps {
                best = best.min(sq_dist(x, y));
            }
        }
        best
    };
    // Prim over the complete cluster graph gives the single-linkage tree.
    let mut in_tree = vec![false; p];
    let mut best = vec![(f64::INFINITY, usize::MAX); p];
    let mut edges: Vec<(f64, usize, usize)> = Vec::with_capacity(p.saturating_sub(1));
    let mut evals = 0u64;
    let mut cur = 0;
    in_tree[0] = true;
    for _ in 1..p {
        for j in 0..p {
            if !in_tree[j] {
                let d = link(&pool[cur], &pool[j]);
                evals += (pool[cur].reps.len() * pool[j].reps.len()) as u64;
                if d < best[j].0 {
                    best[j] = (d, cur);
                }
            }
        }
        let next = (0..p)
            .filter(|&j| !in_tree[j])
            .min_by(|&a, &b| best[a].0.total_cmp(&best[b].0).then(a.cmp(&b)))
            .expect("vertices left");
        in_tree[next] = true;
        edges.push((best[next].0, best[next].1.min(next), best[next].1.max(next)));
        cur = next;
    }
    counter.add(evals);
    edges.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut parent: Vec<usize> = (0..p).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut groups = p;
    let mut heights = Vec::new();
    for (d, a, b) in edges {
        if groups <= k {
            break;
        }
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra.max(rb)] = ra.min(rb);
            groups -= 1;
            heights.push(d);
        }
    }
    let mut label_of_root = vec![usize::MAX; p];
    let mut next = 0;
    let labels = (0..p)
        .map(|i| {
            let r = find(&mut parent, i);
            if label_of_root[r] == usize::MAX {
                label_of_root[r] = next;
                next += 1;
            }
            label_of_root[r]
        })
        .collect();
    (labels, heights)
}

/// Runs CURE on `data`.
pub fn run_cure(
    data: &Dataset,
    params: &CureParams,
    rng: &mut Rng,
    counter: &DistanceCounter,
) -> Result<ClusteringResult> {
    params.validate(data.m())?;
    let start = Instant::now();
    let local = DistanceCounter::new();
    let k = params.k;
    let sample = index::sample(rng, data.m(), params.s).into_vec();
    let parts = balanced(sample.len(), params.partitions());
    let target = params.q * k;

    let pool: Vec<RepCluster> = parts
        .par_iter()
        .map(|r| {
            let groups = centroid_linkage(data, &sample[r.clone()], target, &local);
            groups
                .into_iter()
                .map(|g| {
                    let centroid = mean_of(data, &g);
                    let reps = representatives(data, &g, &centroid, params.c, params.alpha, &local);
                    RepCluster { centroid, count: g.len(), reps }
                })
                .collect::<Vec<_>>()
        })
        .flatten()
        .collect();

    let (group, _) = merge_pool(&pool, k, &local);
    let kk = group.iter().max().map_or(0, |g| g + 1);
    let mut reps: Vec<&[f64]> = Vec::new();
    let mut rep_group: Vec<usize> = Vec::new();
    let mut fallback = vec![vec![0.0; data.n()]; kk];
    let mut weight = vec![0usize; kk];
    for (cl, &g) in pool.iter().zip(&group) {
        for r in &cl.reps {
            reps.push(r);
            rep_group.push(g);
        }
        for (a, v) in fallback[g].iter_mut().zip(&cl.centroid) {
            *a += v * cl.count as f64;
        }
        weight[g] += cl.count;
    }
    for (row, w) in fallback.iter_mut().zip(&weight) {
        row.iter_mut().for_each(|a| *a /= *w as f64);
    }

    let by_rep: Vec<usize> = (0..data.m())
        .into_par_iter()
        .map(|i| {
            let x = data.row(i);
            let mut best = (f64::INFINITY, 0);
            for (t, r) in reps.iter().enumerate() {
                let d = sq_dist(x, r);
                if d < best.0 {
                    best = (d, t);
                }
            }
            rep_group[best.1]
        })
        .collect();
    local.add((data.m() * reps.len()) as u64);

    let prev = Centroids::from_rows(&fallback)?;
    let (means, _) = kernel::update_unchecked(data, &by_rep, &prev);
    let (centroids, assignment, objective) = ClusteringResult::finalize(data, means, &local);
    counter.add(local.get());
    let mut result = ClusteringResult {
        centroids,
        assignment,
        objective,
        elapsed_seconds: start.elapsed().as_secs_f64(),
        n_d: local.get(),
        n_s: params.s as u64,
        iterations: 1,
        termination: Termination::Converged,
        flags: Vec::new(),
    };
    if kk < k || result.assignment.cluster_sizes(kk).contains(&0) {
        result.flag(RunFlag::EmptyClusters);
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use rand::Rng as _;

    #[test]
    fn partition_arithmetic() {
        let p = CureParams { k: 2, s: 1000, f: 10, q: 5, c: 10, alpha: 0.3 };
        assert_eq!(p.partitions(), 10);
        assert_eq!(balanced(10, 3), vec![0..4, 4..7, 7..10]);
        let small = CureParams { s: 50, ..p };
        assert_eq!(small.partitions(), 1);
        assert!(small.validate(100).is_ok());
        let infeasible = CureParams { s: 9, ..p };
        let err = infeasible.validate(100).unwrap_err().to_string();
        assert!(err.contains("q * k"), "{err}");
        assert!(CureParams { alpha: 1.5, ..p }.validate(2000).is_err());
        assert!(CureParams { s: 3000, ..p }.validate(2000).is_err());
    }

    #[test]
    fn far_pairs_become_the_two_clusters() {
        let x = Dataset::from_rows(&[[0.0, 0.0], [1.0, 0.0], [100.0, 0.0], [101.0, 0.0]]).unwrap();
        for (q, c, alpha) in [(1, 1, 0.0), (2, 2, 0.3), (2, 1, 1.0)] {
            let p = CureParams { k: 2, s: 4, f: 1, q, c, alpha };
            let r = run_cure(&x, &p, &mut rng_from_seed(1), &DistanceCounter::new()).unwrap();
            assert_eq!(r.objective, 1.0);
            let mut rows = r.centroids.to_rows();
            rows.sort_by(|a, b| a[0].total_cmp(&b[0]));
            assert_eq!(rows, vec![vec![0.5, 0.0], vec![100.5, 0.0]]);
        }
    }

    #[test]
    fn centroid_linkage_merges_closest_centroids_first() {
        // 0, 1 merge (d=1); then centroid 0.5 vs 3: 6.25, 3 vs 10: 49 -> {0,1,3}
        let x = Dataset::from_rows(&[[0.0], [1.0], [3.0], [10.0]]).unwrap();
        let g = centroid_linkage(&x, &[0, 1, 2, 3], 2, &DistanceCounter::new());
        assert_eq!(g, vec![vec![0, 1, 2], vec![3]]);
    }

    #[test]
    fn alpha_one_collapses_reps_and_alpha_zero_keeps_points() {
        let x = Dataset::from_rows(&[[0.0, 0.0], [4.0, 0.0], [0.0, 4.0]]).unwrap();
        let members = [0, 1, 2];
        let mu = mean_of(&x, &members);
        let c = DistanceCounter::new();
        for r in representatives(&x, &members, &mu, 3, 1.0, &c) {
            assert!(r.iter().zip(&mu).all(|(a, b)| (a - b).abs() < 1e-12));
        }
        let raw = representatives(&x, &members, &mu, 3, 0.0, &c);
        for r in &raw {
            assert!(x.rows().any(|row| row == r.as_slice()));
        }
        assert_eq!(representatives(&x, &members, &mu, 2, 0.0, &c).len(), 2);
    }

    #[test]
    fn shrunk_reps_lie_on_segment_to_centroid() {
        let mut g = rng_from_seed(2);
        let x = Dataset::new((0..60).map(|_| g.random_range(-3.0..3.0)).collect(), 2).unwrap();
        let members: Vec<usize> = (0..30).collect();
        let mu = mean_of(&x, &members);
        let raw = representatives(&x, &members, &mu, 5, 0.0, &DistanceCounter::new());
        let shrunk = representatives(&x, &members, &mu, 5, 0.25, &DistanceCounter::new());
        for (r, s) in raw.iter().zip(&shrunk) {
            for d in 0..2 {
                let expect = r[d] + 0.25 * (mu[d] - r[d]);
                assert!((s[d] - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn pool_merge_heights_never_decrease() {
        let mut g = rng_from_seed(7);
        for _ in 0..20 {
            let pool: Vec<RepCluster> = (0..15)
                .map(|_| {
                    let reps: Vec<Vec<f64>> =
                        (0..3).map(|_| vec![g.random_range(0.0..10.0), g.random_range(0.0..10.0)]).collect();
                    RepCluster { centroid: reps[0].clone(), count: 1, reps }
                })
                .collect();
            let (labels, h) = merge_pool(&pool, 3, &DistanceCounter::new());
            assert!(h.windows(2).all(|w| w[0] <= w[1]));
            assert_eq!(labels.iter().max(), Some(&2));
        }
    }

    #[test]
    fn single_partition_unit_alpha_matches_centroid_linkage() {
        let mut g = rng_from_seed(4);
        let x = Dataset::new((0..80).map(|_| g.random_range(0.0..20.0)).collect(), 2).unwrap();
        let p = CureParams { k: 3, s: 40, f: 100, q: 1, c: 1, alpha: 1.0 };
        let r = run_cure(&x, &p, &mut rng_from_seed(5), &DistanceCounter::new()).unwrap();
        let sample = index::sample(&mut rng_from_seed(5), 40, 40).into_vec();
        let groups = centroid_linkage(&x, &sample, 3, &DistanceCounter::new());
        let cents: Vec<Vec<f64>> = groups.iter().map(|gr| mean_of(&x, gr)).collect();
        let c = Centroids::from_rows(&cents).unwrap();
        let (by_centroid, _) = kernel::assign_points(&x, &c, &DistanceCounter::new()).unwrap();
        let (means, _) = kernel::update_centroids(&x, &by_centroid, &c).unwrap();
        let f = kernel::objective(&x, &means, &DistanceCounter::new()).unwrap();
        assert!((r.objective - f).abs() <= 1e-9 * f);
        assert!(r.verify(&x, 1e-12).unwrap());
    }
}
