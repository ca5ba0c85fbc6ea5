//! Benchmark configuration file (TOML).
//!
//! ```toml
//! seed = 1
//! n_exec = 15
//! k = [2, 3, 5]
//! threads = 8
//! baselines = "baselines.csv"   # optional
//! best_found = false
//! warmup = false
//!
//! [output]
//! json = "results.json"
//! markdown = "results.md"
//!
//! [[datasets]]
//! name = "d15112"
//! path = "d15112.tsp"
//!
//! [[algorithms]]
//! algorithm = "kmeanspp"
//!
//! [[algorithms]]
//! algorithm = "big-means"
//! s = 4000
//! workers = 2
//! ```
//!
//! Relative paths are resolved against the directory holding the file.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::algorithm::AlgorithmSpec;
use crate::bench::BaselineTable;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::io::{load_dataset, minmax_normalize, LoadOptions};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetEntry {
    pub name: String,
    pub path: PathBuf,
    #[serde(default)]
    pub skip_header: bool,
    #[serde(default)]
    pub normalize: bool,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    pub json: Option<PathBuf>,
    pub markdown: Option<PathBuf>,
}

fn default_n_exec() -> usize {
    15
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_n_exec")]
    pub n_exec: usize,
    pub k: Vec<usize>,
    /// Total worker threads for the whole benchmark; 0 means all cores.
    #[serde(default)]
    pub threads: usize,
    pub baselines: Option<PathBuf>,
    /// Lower each baseline to the best objective seen in this benchmark.
    #[serde(default)]
    pub best_found: bool,
    /// Run and discard one execution before every series.
    #[serde(default)]
    pub warmup: bool,
    #[serde(default)]
    pub output: OutputPaths,
    pub datasets: Vec<DatasetEntry>,
    pub algorithms: Vec<AlgorithmSpec>,
}

/// A config with its datasets loaded and every parameter checked.
#[derive(Debug, Clone)]
pub struct PreparedBench {
    pub config: BenchConfig,
    pub datasets: Vec<(String, Dataset)>,
    pub baselines: BaselineTable,
}

impl BenchConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads the file and resolves relative paths against its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        cfg.datasets.iter_mut().for_each(|d| fix(&mut d.path));
        if let Some(b) = cfg.baselines.as_mut() {
            fix(b);
        }
        if let Some(p) = cfg.output.json.as_mut() {
            fix(p);
        }
        if let Some(p) = cfg.output.markdown.as_mut() {
            fix(p);
        }
        Ok(cfg)
    }

    /// Loads every dataset and the baselines, and validates every
    /// (algorithm, dataset, k) combination before anything runs.
    pub fn prepare(self) -> Result<PreparedBench> {
        if self.n_exec == 0 {
            return Err(Error::Config("n_exec must be at least 1".into()));
        }
        if self.k.is_empty() || self.datasets.is_empty() || self.algorithms.is_empty() {
            return Err(Error::Config("k, datasets and algorithms must all be non-empty".into()));
        }
        let mut names: Vec<&str> = self.datasets.iter().map(|d| d.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config("dataset names must be unique".into()));
        }
        let baselines = match &self.baselines {
            Some(p) => BaselineTable::load_csv(p)?,
            None => BaselineTable::default(),
        };
        let mut datasets = Vec::with_capacity(self.datasets.len());
        for entry in &self.datasets {
            if !entry.path.exists() {
                return Err(Error::Config(format!(
                    "dataset {:?}: file {} does not exist",
                    entry.name,
                    entry.path.display()
                )));
            }
            let mut data = load_dataset(&entry.path, LoadOptions { skip_header: entry.skip_header })?;
            if entry.normalize {
                data = minmax_normalize(&data);
            }
            for &k in &self.k {
                if !self.best_found && baselines.get(&entry.name, k).is_none() {
                    return Err(Error::Config(format!(
                        "no baseline for dataset {:?} with k = {k}; add one or set best_found = true",
                        entry.name
                    )));
                }
                for spec in &self.algorithms {
                    spec.validate(data.m(), k)
                        .map_err(|e| Error::Config(format!("{} on {:?} with k = {k}: {e}", spec.name(), entry.name)))?;
                }
            }
            datasets.push((entry.name.clone(), data));
        }
        Ok(PreparedBench { config: self, datasets, baselines })
    }
}
