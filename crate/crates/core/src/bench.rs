//! Repeated seeded executions, relative-error summaries and success counts.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algorithm::AlgorithmSpec;
use crate::config::PreparedBench;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::kernel::{relative_error, DistanceCounter};
use crate::lima::{self, AlgoScore};
use crate::rng::derive_seed;

/// Absolute tolerance on median relative error for counting a success.
pub const SUCCESS_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    PaperPublished,
    BestFoundHere,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Baseline {
    pub f_star: f64,
    pub provenance: Provenance,
}

/// Best known objective per (dataset, k).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BaselineTable {
    entries: BTreeMap<String, BTreeMap<usize, Baseline>>,
}

impl BaselineTable {
    pub fn get(&self, dataset: &str, k: usize) -> Option<Baseline> {
        self.entries.get(dataset)?.get(&k).copied()
    }

    pub fn insert(&mut self, dataset: &str, k: usize, b: Baseline) -> Result<()> {
        if !(b.f_star > 0.0 && b.f_star.is_finite()) {
            return Err(Error::invalid(format!("baseline for {dataset}/k={k} must be positive, got {}", b.f_star)));
        }
        self.entries.entry(dataset.to_string()).or_default().insert(k, b);
        Ok(())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, usize, Baseline)> {
        self.entries.iter().flat_map(|(d, m)| m.iter().map(move |(&k, &b)| (d.as_str(), k, b)))
    }

    /// Parses `dataset,k,f_star,provenance` lines; `#` comments and a header
    /// line starting with `dataset` are skipped.
    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut t = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with("dataset") {
                continue;
            }
            let err =
                |msg: &str| Error::Parse { path: "baselines".into(), line: i + 1, column: 0, message: msg.into() };
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            if f.len() != 4 {
                return Err(err("expected dataset,k,f_star,provenance"));
            }
            let k = f[1].parse().map_err(|_| err("k is not an integer"))?;
            let f_star = f[2].parse().map_err(|_| err("f_star is not a number"))?;
            let provenance = match f[3] {
                "paper-published" => Provenance::PaperPublished,
                "best-found-here" => Provenance::BestFoundHere,
                _ => return Err(err("provenance must be paper-published or best-found-here")),
            };
            t.insert(f[0], k, Baseline { f_star, provenance }).map_err(|e| err(&e.to_string()))?;
        }
        Ok(t)
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_csv(&text)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("dataset,k,f_star,provenance\n");
        for (d, k, b) in self.iter() {
            let p = match b.provenance {
                Provenance::PaperPublished => "paper-published",
                Provenance::BestFoundHere => "best-found-here",
            };
            let _ = writeln!(out, "{d},{k},{:?},{p}", b.f_star);
        }
        out
    }
}

/// One execution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub algorithm: String,
    pub dataset: String,
    pub k: usize,
    pub seed: u64,
    pub objective: f64,
    /// Relative error in percent against the baseline, when one is known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    pub elapsed_seconds: f64,
    pub n_d: u64,
    pub n_s: u64,
    pub iterations: usize,
}

/// Min / lower median / max of one algorithm's series on (dataset, k).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesSummary {
    pub algorithm: String,
    pub dataset: String,
    pub k: usize,
    pub n_exec: usize,
    pub eps_min: f64,
    pub eps_med: f64,
    pub eps_max: f64,
    pub t_min: f64,
    pub t_med: f64,
    pub t_max: f64,
    pub n_d_med: u64,
}

/// Sorted copy's element at `(n - 1) / 2`.
pub fn lower_median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v[(v.len() - 1) / 2]
}

fn min_med_max(values: &[f64]) -> (f64, f64, f64) {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (lo, lower_median(values), hi)
}

/// Summarises one series. Every record must share algorithm, dataset and k
/// and carry an epsilon.
pub fn summarize(records: &[RunRecord]) -> Result<SeriesSummary> {
    let first = records.first().ok_or_else(|| Error::invalid("empty series"))?;
    if records.iter().any(|r| r.algorithm != first.algorithm || r.dataset != first.dataset || r.k != first.k) {
        return Err(Error::invalid("records from different series"));
    }
    let eps: Vec<f64> = records
        .iter()
        .map(|r| r.epsilon.ok_or_else(|| Error::NotFound(format!("no baseline for {}/k={}", r.dataset, r.k))))
        .collect::<Result<_>>()?;
    let t: Vec<f64> = records.iter().map(|r| r.elapsed_seconds).collect();
    let nd: Vec<f64> = records.iter().map(|r| r.n_d as f64).collect();
    let (eps_min, eps_med, eps_max) = min_med_max(&eps);
    let (t_min, t_med, t_max) = min_med_max(&t);
    Ok(SeriesSummary {
        algorithm: first.algorithm.clone(),
        dataset: first.dataset.clone(),
        k: first.k,
        n_exec: records.len(),
        eps_min,
        eps_med,
        eps_max,
        t_min,
        t_med,
        t_max,
        n_d_med: lower_median(&nd) as u64,
    })
}

/// Executes `spec` `n_exec` times with seeds `derive_seed(base_seed, i)`.
/// Epsilon is filled in when `f_star` is given.
#[allow(clippy::too_many_arguments)]
pub fn execute_series(
    spec: &AlgorithmSpec,
    label: &str,
    data: &Dataset,
    dataset: &str,
    k: usize,
    n_exec: usize,
    base_seed: u64,
    f_star: Option<f64>,
) -> Result<Vec<RunRecord>> {
    if n_exec == 0 {
        return Err(Error::invalid("n_exec must be at least 1"));
    }
    (0..n_exec)
        .into_par_iter()
        .map(|i| {
            let seed = derive_seed(base_seed, i as u64);
            let counter = DistanceCounter::new();
            let r = spec.run(data, k, seed, &counter)?;
            Ok(RunRecord {
                algorithm: label.to_string(),
                dataset: dataset.to_string(),
                k,
                seed,
                objective: r.objective,
                epsilon: f_star.map(|f| relative_error(r.objective, f)).transpose()?,
                elapsed_seconds: r.elapsed_seconds,
                n_d: r.n_d,
                n_s: r.n_s,
                iterations: r.iterations,
            })
        })
        .collect()
}

/// [`execute_series`] against a known baseline, plus its summary.
pub fn run_series(
    spec: &AlgorithmSpec,
    data: &Dataset,
    dataset: &str,
    k: usize,
    n_exec: usize,
    base_seed: u64,
    f_star: f64,
) -> Result<(SeriesSummary, Vec<RunRecord>)> {
    let records = execute_series(spec, spec.name(), data, dataset, k, n_exec, base_seed, Some(f_star))?;
    Ok((summarize(&records)?, records))
}

/// Per algorithm, the number of k values at which its median epsilon is
/// within [`SUCCESS_TOLERANCE`] of the best median. All summaries must be
/// for one dataset and every algorithm must cover the same k values.
pub fn success_counts(summaries: &[SeriesSummary]) -> Result<BTreeMap<String, usize>> {
    let mut grid: BTreeMap<&str, BTreeMap<usize, f64>> = BTreeMap::new();
    let datasets: BTreeSet<&str> = summaries.iter().map(|s| s.dataset.as_str()).collect();
    if datasets.len() > 1 {
        return Err(Error::invalid("success counts take summaries of a single dataset"));
    }
    for s in summaries {
        if grid.entry(&s.algorithm).or_default().insert(s.k, s.eps_med).is_some() {
            return Err(Error::invalid(format!("duplicate summary for {} at k = {}", s.algorithm, s.k)));
        }
    }
    let ks: Vec<BTreeSet<usize>> = grid.values().map(|m| m.keys().copied().collect()).collect();
    if ks.windows(2).any(|w| w[0] != w[1]) {
        return Err(Error::invalid("algorithms were summarised on different k grids"));
    }
    let mut out: BTreeMap<String, usize> = grid.keys().map(|a| (a.to_string(), 0)).collect();
    for k in ks.first().into_iter().flatten() {
        let best = grid.values().map(|m| m[k]).fold(f64::INFINITY, f64::min);
        for (a, m) in &grid {
            if (m[k] - best).abs() <= SUCCESS_TOLERANCE {
                *out.get_mut(*a).expect("present") += 1;
            }
        }
    }
    Ok(out)
}

/// Lowers each baseline to the smallest objective among `records` (adding
/// entries that were missing) and recomputes every record's epsilon.
pub fn update_best_found(records: &mut [RunRecord], table: &BaselineTable) -> Result<BaselineTable> {
    let mut out = table.clone();
    for r in records.iter() {
        let better = out.get(&r.dataset, r.k).is_none_or(|b| r.objective < b.f_star);
        if better && r.objective > 0.0 {
            out.insert(&r.dataset, r.k, Baseline { f_star: r.objective, provenance: Provenance::BestFoundHere })?;
        }
    }
    for r in records.iter_mut() {
        r.epsilon = out.get(&r.dataset, r.k).map(|b| relative_error(r.objective, b.f_star)).transpose()?;
    }
    Ok(out)
}

/// Mean over k of an algorithm's median epsilon and median time on one dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetAggregate {
    pub algorithm: String,
    pub dataset: String,
    pub mean_eps: f64,
    pub mean_time: f64,
}

/// Overall score of one algorithm: dataset aggregates averaged over datasets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverallScore {
    pub algorithm: String,
    pub accuracy: f64,
    pub time: f64,
}

pub fn dataset_aggregates(summaries: &[SeriesSummary]) -> Vec<DatasetAggregate> {
    let mut acc: BTreeMap<(&str, &str), (f64, f64, usize)> = BTreeMap::new();
    for s in summaries {
        let e = acc.entry((&s.dataset, &s.algorithm)).or_default();
        e.0 += s.eps_med;
        e.1 += s.t_med;
        e.2 += 1;
    }
    acc.into_iter()
        .map(|((d, a), (e, t, n))| DatasetAggregate {
            algorithm: a.to_string(),
            dataset: d.to_string(),
            mean_eps: e / n as f64,
            mean_time: t / n as f64,
        })
        .collect()
}

pub fn overall_scores(aggregates: &[DatasetAggregate]) -> Vec<OverallScore> {
    let mut acc: BTreeMap<&str, (f64, f64, usize)> = BTreeMap::new();
    for a in aggregates {
        let e = acc.entry(&a.algorithm).or_default();
        e.0 += a.mean_eps;
        e.1 += a.mean_time;
        e.2 += 1;
    }
    acc.into_iter()
        .map(|(a, (e, t, n))| OverallScore { algorithm: a.to_string(), accuracy: e / n as f64, time: t / n as f64 })
        .collect()
}

/// Scores paired with LIMA numbers; algorithms without a profile are skipped
/// and returned separately.
pub fn lima_scores(overall: &[OverallScore]) -> (Vec<(String, AlgoScore)>, Vec<String>) {
    let mut scored = Vec::new();
    let mut skipped = Vec::new();
    for o in overall {
        match lima::lima_number(&o.algorithm) {
            Ok(n) => scored.push((o.algorithm.clone(), AlgoScore::new(o.accuracy, o.time, n))),
            Err(_) => skipped.push(o.algorithm.clone()),
        }
    }
    (scored, skipped)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub records: Vec<RunRecord>,
    pub summaries: Vec<SeriesSummary>,
    /// Dataset -> algorithm -> #Succ.
    pub successes: BTreeMap<String, BTreeMap<String, usize>>,
    pub aggregates: Vec<DatasetAggregate>,
    pub overall: Vec<OverallScore>,
    pub baselines: BaselineTable,
}

impl BenchReport {
    /// Result tables: one block per dataset with min/median/max epsilon
    /// and time per algorithm and k, followed by #Succ.
    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        let datasets: BTreeSet<&str> = self.summaries.iter().map(|s| s.dataset.as_str()).collect();
        for d in datasets {
            let _ = writeln!(out, "## {d}\n");
            out.push_str("| Algorithm | k | ε min | ε median | ε max | t min (s) | t median (s) | t max (s) |\n");
            out.push_str("|---|---|---|---|---|---|---|---|\n");
            for s in self.summaries.iter().filter(|s| s.dataset == d) {
                let _ = writeln!(
                    out,
                    "| {} | {} | {:.2} | {:.2} | {:.2} | {:.3} | {:.3} | {:.3} |",
                    s.algorithm, s.k, s.eps_min, s.eps_med, s.eps_max, s.t_min, s.t_med, s.t_max
                );
            }
            out.push('\n');
            out.push_str("| Algorithm | mean ε | mean t (s) | #Succ |\n|---|---|---|---|\n");
            for a in self.aggregates.iter().filter(|a| a.dataset == d) {
                let succ = self.successes.get(d).and_then(|m| m.get(&a.algorithm)).copied().unwrap_or(0);
                let _ = writeln!(out, "| {} | {:.2} | {:.3} | {succ} |", a.algorithm, a.mean_eps, a.mean_time);
            }
            out.push('\n');
        }
        out
    }
}

/// Runs a prepared benchmark on a pool of at most `threads` threads.
pub fn run_bench(prepared: &PreparedBench, threads: usize) -> Result<BenchReport> {
    let cfg = &prepared.config;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let labels = unique_labels(&cfg.algorithms);
    let best_found = cfg.best_found;

    let mut jobs = Vec::new();
    for (ai, spec) in cfg.algorithms.iter().enumerate() {
        for (name, data) in &prepared.datasets {
            for &k in &cfg.k {
                jobs.push((ai, spec, name.as_str(), data, k));
            }
        }
    }
    let per_series: Vec<Vec<RunRecord>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(ai, spec, name, data, k)| {
                let f_star = prepared.baselines.get(name, k).map(|b| b.f_star);
                if cfg.warmup {
                    spec.run(data, k, derive_seed(cfg.seed, u64::MAX), &DistanceCounter::new())?;
                }
                execute_series(spec, &labels[ai], data, name, k, cfg.n_exec, cfg.seed, f_star)
            })
            .collect::<Result<_>>()
    })?;

    let mut records: Vec<RunRecord> = per_series.into_iter().flatten().collect();
    let baselines =
        if best_found { update_best_found(&mut records, &prepared.baselines)? } else { prepared.baselines.clone() };
    let mut summaries = Vec::new();
    let mut series: BTreeMap<(String, usize, usize), Vec<RunRecord>> = BTreeMap::new();
    let order: BTreeMap<&str, usize> = labels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
    for r in &records {
        series.entry((r.dataset.clone(), order[r.algorithm.as_str()], r.k)).or_default().push(r.clone());
    }
    for recs in series.values() {
        summaries.push(summarize(recs)?);
    }
    let mut successes = BTreeMap::new();
    for (name, _) in &prepared.datasets {
        let subset: Vec<SeriesSummary> = summaries.iter().filter(|s| &s.dataset == name).cloned().collect();
        successes.insert(name.clone(), success_counts(&subset)?);
    }
    let aggregates = dataset_aggregates(&summaries);
    let overall = overall_scores(&aggregates);
    Ok(BenchReport { records, summaries, successes, aggregates, overall, baselines })
}

/// Algorithm names, with `#2`, `#3`, ... appended to repeats.
pub fn unique_labels(specs: &[AlgorithmSpec]) -> Vec<String> {
    let mut seen: BTreeMap<&str, usize> = BTreeMap::new();
    specs
        .iter()
        .map(|s| {
            let n = seen.entry(s.name()).or_insert(0);
            *n += 1;
            if *n == 1 {
                s.name().to_string()
            } else {
                format!("{}#{}", s.name(), n)
            }
        })
        .collect()
}
