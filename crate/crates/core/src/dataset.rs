//! Dense row-major point matrices: the dataset being clustered, the centroid
//! set, and the point-to-cluster assignment.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// An `m x n` matrix of finite `f64` values; row `i` is point `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    m: usize,
    n: usize,
    values: Vec<f64>,
}

impl Dataset {
    /// Builds a dataset from a row-major buffer of `values.len() / n` points.
    pub fn new(values: Vec<f64>, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("dataset needs at least one feature"));
        }
        if values.is_empty() {
            return Err(Error::invalid("dataset needs at least one point"));
        }
        if !values.len().is_multiple_of(n) {
            return Err(Error::invalid(format!("buffer of {} values is not a multiple of n = {n}", values.len())));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite value at point {}, feature {}", pos / n, pos % n)));
        }
        Ok(Self { m: values.len() / n, n, values })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let n = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut values = Vec::with_capacity(rows.len() * n);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != n {
                return Err(Error::invalid(format!("row {i} has {} features, expected {n}", row.len())));
            }
            values.extend_from_slice(row);
        }
        Self::new(values, n)
    }

    #[inline]
    pub fn m(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f64> {
        self.values.chunks_exact(self.n)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Copies the given rows (in order, repeats allowed) into a new dataset.
    pub fn select(&self, indices: &[usize]) -> Dataset {
        assert!(!indices.is_empty(), "cannot select an empty subset");
        let mut values = Vec::with_capacity(indices.len() * self.n);
        for &i in indices {
            values.extend_from_slice(self.row(i));
        }
        Dataset { m: indices.len(), n: self.n, values }
    }

    /// Column-wise mean of all points.
    pub fn mean(&self) -> Vec<f64> {
        let mut mu = vec![0.0; self.n];
        for row in self.rows() {
            for (acc, v) in mu.iter_mut().zip(row) {
                *acc += v;
            }
        }
        let m = self.m as f64;
        mu.iter_mut().for_each(|v| *v /= m);
        mu
    }

    /// Per-feature `(min, max)` over all points.
    pub fn bounds(&self) -> Vec<(f64, f64)> {
        let mut b = vec![(f64::INFINITY, f64::NEG_INFINITY); self.n];
        for row in self.rows() {
            for (bj, &v) in b.iter_mut().zip(row) {
                bj.0 = bj.0.min(v);
                bj.1 = bj.1.max(v);
            }
        }
        b
    }
}

/// `k` cluster centers living in the same `n`-dimensional space as a dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct Centroids {
    k: usize,
    n: usize,
    values: Vec<f64>,
}

impl Centroids {
    pub fn new(values: Vec<f64>, n: usize) -> Result<Self> {
        if n == 0 || values.is_empty() || !values.len().is_multiple_of(n) {
            return Err(Error::invalid(format!(
                "centroid buffer of {} values does not form rows of width {n}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("centroids must be finite"));
        }
        Ok(Self { k: values.len() / n, n, values })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let d = Dataset::from_rows(rows)?;
        Ok(Self::from(d))
    }

    /// The rows of `data` at `indices`, used as centers.
    pub fn from_indices(data: &Dataset, indices: &[usize]) -> Self {
        Self::from(data.select(indices))
    }

    #[inline]
    pub fn k(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn row(&self, j: usize) -> &[f64] {
        &self.values[j * self.n..(j + 1) * self.n]
    }

    #[inline]
    pub fn row_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.values[j * self.n..(j + 1) * self.n]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f64> {
        self.values.chunks_exact(self.n)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rows().map(<[f64]>::to_vec).collect()
    }
}

impl From<Dataset> for Centroids {
    fn from(d: Dataset) -> Self {
        Centroids { k: d.m, n: d.n, values: d.values }
    }
}

impl From<Centroids> for Dataset {
    fn from(c: Centroids) -> Self {
        Dataset { m: c.k, n: c.n, values: c.values }
    }
}

impl Serialize for Centroids {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(self.rows())
    }
}

impl<'de> Deserialize<'de> for Centroids {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        Centroids::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

/// Cluster index per point.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Assignment {
    labels: Vec<usize>,
}

impl Assignment {
    /// Wraps `labels`, checking each is below `k`.
    pub fn new(labels: Vec<usize>, k: usize) -> Result<Self> {
        if let Some((i, &l)) = labels.iter().enumerate().find(|(_, &l)| l >= k) {
            return Err(Error::invalid(format!("label {l} at point {i} is not < k = {k}")));
        }
        Ok(Self { labels })
    }

    pub(crate) fn from_vec_unchecked(labels: Vec<usize>) -> Self {
        Self { labels }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Number of points carrying each label in `0..k`.
    pub fn cluster_sizes(&self, k: usize) -> Vec<usize> {
        let mut sizes = vec![0; k];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }

    pub fn into_vec(self) -> Vec<usize> {
        self.labels
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite_and_ragged() {
        assert!(Dataset::new(vec![0.0, f64::NAN], 2).is_err());
        assert!(Dataset::new(vec![0.0, 1.0, 2.0], 2).is_err());
        assert!(Dataset::new(vec![], 2).is_err());
        assert!(Dataset::from_rows(&[vec![0.0, 1.0], vec![2.0]]).is_err());
    }

    #[test]
    fn rows_and_select() {
        let d = Dataset::from_rows(&[[0.0, 1.0], [2.0, 3.0], [4.0, 5.0]]).unwrap();
        assert_eq!(d.m(), 3);
        assert_eq!(d.row(1), &[2.0, 3.0]);
        let s = d.select(&[2, 0]);
        assert_eq!(s.as_slice(), &[4.0, 5.0, 0.0, 1.0]);
        assert_eq!(d.mean(), vec![2.0, 3.0]);
    }

    #[test]
    fn assignment_label_bound() {
        assert!(Assignment::new(vec![0, 1, 2], 2).is_err());
        let a = Assignment::new(vec![0, 1, 1], 2).unwrap();
        assert_eq!(a.cluster_sizes(3), vec![1, 2, 0]);
    }

    #[test]
    fn centroids_serialize_as_rows() {
        let c = Centroids::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap();
        let json = serde_json::to_string(&c).unwrap();
        assert_eq!(json, "[[1.0,2.0],[3.0,4.0]]");
        let back: Centroids = serde_json::from_str(&json).unwrap();
        assert_eq!(back, c);
    }
}
