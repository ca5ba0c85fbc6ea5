#![allow(dead_code)]

use std::path::PathBuf;

use mssc::io::{load_dataset, LoadOptions};
use mssc::Dataset;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(rng: &mut ChaCha8Rng, m: usize, n: usize, scale: f64) -> Dataset {
    let values = (0..m * n).map(|_| rng.random::<f64>() * scale).collect();
    Dataset::new(values, n).unwrap()
}

/// `groups` Gaussian-ish blobs (sum of uniforms) on a wide grid.
pub fn blobs(rng: &mut ChaCha8Rng, groups: usize, per: usize, n: usize, spread: f64) -> Dataset {
    let mut values = Vec::with_capacity(groups * per * n);
    for g in 0..groups {
        let center: Vec<f64> = (0..n).map(|d| ((g * (d + 3)) % 7) as f64 * 20.0 + rng.random::<f64>()).collect();
        for _ in 0..per {
            for c in &center {
                let noise: f64 = (0..3).map(|_| rng.random::<f64>() - 0.5).sum();
                values.push(c + noise * spread);
            }
        }
    }
    Dataset::new(values, n).unwrap()
}

fn sse(data: &Dataset, labels: &[usize], k: usize) -> f64 {
    let n = data.n();
    let mut sums = vec![0.0; k * n];
    let mut counts = vec![0usize; k];
    for (i, &l) in labels.iter().enumerate() {
        counts[l] += 1;
        for (s, v) in sums[l * n..(l + 1) * n].iter_mut().zip(data.row(i)) {
            *s += v;
        }
    }
    labels
        .iter()
        .enumerate()
        .map(|(i, &l)| {
            data.row(i)
                .iter()
                .enumerate()
                .map(|(d, v)| {
                    let c = sums[l * n + d] / counts[l] as f64;
                    (v - c) * (v - c)
                })
                .sum::<f64>()
        })
        .sum()
}

/// Exact MSSC optimum over all partitions into exactly `k` non-empty
/// clusters, by enumerating restricted growth strings.
pub fn brute_force_opt(data: &Dataset, k: usize) -> f64 {
    let m = data.m();
    assert!(k >= 1 && k <= m && m <= 12);
    let mut labels = vec![0usize; m];
    let mut best = f64::INFINITY;
    fn rec(i: usize, used: usize, k: usize, labels: &mut Vec<usize>, data: &Dataset, best: &mut f64) {
        let m = labels.len();
        if m - i < k - used {
            return;
        }
        if i == m {
            let f = sse(data, labels, k);
            if f < *best {
                *best = f;
            }
            return;
        }
        for l in 0..(used + 1).min(k) {
            labels[i] = l;
            rec(i + 1, used.max(l + 1), k, labels, data, best);
        }
    }
    rec(0, 0, k, &mut labels, data, &mut best);
    best
}

/// Looks for `<name>.tsp` or `<name>.csv` under `$MSSC_DATA_DIR` and then the
/// workspace `data/` directory.
pub fn find_dataset(name: &str) -> Result<Dataset, String> {
    let mut dirs = Vec::new();
    if let Some(d) = std::env::var_os("MSSC_DATA_DIR") {
        dirs.push(PathBuf::from(d));
    }
    dirs.push(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data"));
    for dir in &dirs {
        for ext in ["tsp", "csv", "txt"] {
            let p = dir.join(format!("{name}.{ext}"));
            if p.exists() {
                return load_dataset(&p, LoadOptions::default()).map_err(|e| e.to_string());
            }
        }
    }
    Err(format!(
        "{name}.tsp not found in {}; set MSSC_DATA_DIR to a directory holding the TSPLIB file",
        dirs.iter().map(|d| d.display().to_string()).collect::<Vec<_>>().join(" or ")
    ))
}
