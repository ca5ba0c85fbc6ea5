//! A serializable description of one algorithm plus its parameters, used by
//! the CLI, the benchmark config and the C ABI.

use serde::{Deserialize, Serialize};

use crate::accel::{run_ikmeans, ExclusionRule, IkMeansConfig};
use crate::bdcsm::run_bdcsm;
use crate::bigmeans::{run_big_means, BigMeansConfig, ParallelMode};
use crate::coreset::run_lw_coreset;
use crate::cure::{run_cure, CureParams};
use crate::dataset::Dataset;
use crate::density::{run_cludatase, DbscanParams};
use crate::error::{Error, Result};
use crate::init::{multi_start, seed, SeedConfig, SeedMethod, DEFAULT_CANDIDATES};
use crate::kernel::DistanceCounter;
use crate::lloyd::{run_lloyd, EmptyPolicy, StopRule};
use crate::result::{ClusteringResult, RunFlag};
use crate::rng::rng_from_seed;
use crate::stream::{run_minibatch, run_online};

fn max_iters() -> usize {
    StopRule::default().max_iters
}
fn rel_tol() -> f64 {
    StopRule::default().rel_tol
}
fn candidates() -> usize {
    DEFAULT_CANDIDATES
}
fn kmeanspp() -> SeedMethod {
    SeedMethod::Kmeanspp
}
fn restarts() -> usize {
    10
}
fn recheck() -> usize {
    5
}
fn one() -> usize {
    1
}
fn half() -> f64 {
    0.5
}
fn minibatch_iters() -> usize {
    100
}
fn rounds() -> usize {
    10
}
fn cure_f() -> usize {
    10
}
fn cure_q() -> usize {
    5
}
fn cure_c() -> usize {
    10
}
fn cure_alpha() -> f64 {
    0.3
}

/// Sample budget used when Big-means gets neither a sample count nor a time limit.
pub const DEFAULT_BIG_MEANS_SAMPLES: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algorithm", rename_all = "kebab-case", deny_unknown_fields)]
pub enum AlgorithmSpec {
    /// Lloyd from a chosen seeding.
    Lloyd {
        #[serde(default = "kmeanspp")]
        seeding: SeedMethod,
        #[serde(default = "candidates")]
        n_candidates: usize,
        #[serde(default = "max_iters")]
        max_iters: usize,
        #[serde(default = "rel_tol")]
        rel_tol: f64,
    },
    /// Greedy K-means++ seeding followed by Lloyd.
    #[serde(alias = "kmeans++")]
    Kmeanspp {
        #[serde(default = "candidates")]
        n_candidates: usize,
        #[serde(default = "max_iters")]
        max_iters: usize,
        #[serde(default = "rel_tol")]
        rel_tol: f64,
    },
    /// Best of several Forgy-seeded Lloyd runs.
    MultiStart {
        #[serde(default = "restarts")]
        restarts: usize,
        #[serde(default = "max_iters")]
        max_iters: usize,
        #[serde(default = "rel_tol")]
        rel_tol: f64,
    },
    Ikmeans {
        #[serde(default = "recheck")]
        recheck_period: usize,
        #[serde(default)]
        rule: ExclusionRule,
        #[serde(default = "max_iters")]
        max_iters: usize,
        #[serde(default = "rel_tol")]
        rel_tol: f64,
    },
    Minibatch {
        batch_size: usize,
        #[serde(default = "minibatch_iters")]
        max_iters: usize,
    },
    Online {},
    BigMeans {
        s: usize,
        #[serde(default)]
        max_samples: Option<usize>,
        #[serde(default)]
        time_limit_seconds: Option<f64>,
        #[serde(default = "one")]
        workers: usize,
        #[serde(default)]
        mode: ParallelMode,
        #[serde(default = "half")]
        hybrid_switch_fraction: f64,
    },
    Bdcsm {
        p: usize,
    },
    LwCoreset {
        s: usize,
    },
    Cure {
        s: usize,
        #[serde(default = "cure_f")]
        f: usize,
        #[serde(default = "cure_q")]
        q: usize,
        #[serde(default = "cure_c")]
        c: usize,
        #[serde(default = "cure_alpha")]
        alpha: f64,
    },
    Cludatase {
        s: usize,
        eps: f64,
        min_pts: usize,
        #[serde(default = "rounds")]
        max_rounds: usize,
    },
}

impl AlgorithmSpec {
    /// Parses a JSON object such as `{"algorithm": "big-means", "s": 1000}`.
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("algorithm spec: {e}")))
    }

    /// Builds a spec from a name and a parameter map.
    pub fn from_parts(name: &str, params: serde_json::Map<String, serde_json::Value>) -> Result<Self> {
        let mut obj = params;
        obj.insert("algorithm".into(), serde_json::Value::String(name.to_string()));
        serde_json::from_value(serde_json::Value::Object(obj))
            .map_err(|e| Error::Config(format!("algorithm {name:?}: {e}")))
    }

    /// The kebab-case tag.
    pub fn name(&self) -> &'static str {
        match self {
            AlgorithmSpec::Lloyd { .. } => "lloyd",
            AlgorithmSpec::Kmeanspp { .. } => "kmeanspp",
            AlgorithmSpec::MultiStart { .. } => "multi-start",
            AlgorithmSpec::Ikmeans { .. } => "ikmeans",
            AlgorithmSpec::Minibatch { .. } => "minibatch",
            AlgorithmSpec::Online {} => "online",
            AlgorithmSpec::BigMeans { .. } => "big-means",
            AlgorithmSpec::Bdcsm { .. } => "bdcsm",
            AlgorithmSpec::LwCoreset { .. } => "lw-coreset",
            AlgorithmSpec::Cure { .. } => "cure",
            AlgorithmSpec::Cludatase { .. } => "cludatase",
        }
    }

    /// Whether the algorithm spawns its own worker threads.
    pub fn workers(&self) -> usize {
        match self {
            AlgorithmSpec::BigMeans { workers, .. } => *workers,
            _ => 1,
        }
    }

    fn stop(max_iters: usize, rel_tol: f64) -> Result<StopRule> {
        StopRule::new(max_iters, rel_tol)
    }

    fn big_means_config(&self) -> Option<BigMeansConfig> {
        match *self {
            AlgorithmSpec::BigMeans { s, max_samples, time_limit_seconds, workers, mode, hybrid_switch_fraction } => {
                let max_samples = match (max_samples, time_limit_seconds) {
                    (None, None) => Some(DEFAULT_BIG_MEANS_SAMPLES),
                    (m, _) => m,
                };
                Some(BigMeansConfig {
                    s,
                    max_samples,
                    time_limit_seconds,
                    workers,
                    mode,
                    hybrid_switch_fraction,
                    stop: StopRule::default(),
                })
            }
            _ => None,
        }
    }

    /// Checks every precondition that does not need the data itself beyond
    /// its size `m`.
    pub fn validate(&self, m: usize, k: usize) -> Result<()> {
        if k == 0 || k > m {
            return Err(Error::invalid(format!("k = {k} must be in 1..={m}")));
        }
        let at_least = |v: usize, lo: usize, what: &str| {
            if v < lo {
                Err(Error::invalid(format!("{what} = {v} must be at least {lo}")))
            } else {
                Ok(())
            }
        };
        let sample = |s: usize| {
            if s < k || s > m {
                Err(Error::invalid(format!("s = {s} must satisfy k = {k} <= s <= m = {m}")))
            } else {
                Ok(())
            }
        };
        match *self {
            AlgorithmSpec::Lloyd { n_candidates, max_iters, rel_tol, .. }
            | AlgorithmSpec::Kmeanspp { n_candidates, max_iters, rel_tol } => {
                at_least(n_candidates, 1, "n_candidates")?;
                Self::stop(max_iters, rel_tol).map(|_| ())
            }
            AlgorithmSpec::MultiStart { restarts, max_iters, rel_tol } => {
                at_least(restarts, 1, "restarts")?;
                Self::stop(max_iters, rel_tol).map(|_| ())
            }
            AlgorithmSpec::Ikmeans { recheck_period, max_iters, rel_tol, .. } => {
                at_least(recheck_period, 1, "recheck_period")?;
                Self::stop(max_iters, rel_tol).map(|_| ())
            }
            AlgorithmSpec::Minibatch { batch_size, max_iters } => {
                at_least(max_iters, 1, "max_iters")?;
                if batch_size == 0 || batch_size > m {
                    return Err(Error::invalid(format!("batch_size = {batch_size} must be in 1..={m}")));
                }
                Ok(())
            }
            AlgorithmSpec::Online {} => Ok(()),
            AlgorithmSpec::BigMeans { .. } => self.big_means_config().expect("big-means").validate(m, k),
            AlgorithmSpec::Bdcsm { p } => {
                if p < k {
                    return Err(Error::invalid(format!("p = {p} must be at least k = {k}")));
                }
                Ok(())
            }
            AlgorithmSpec::LwCoreset { s } => sample(s),
            AlgorithmSpec::Cure { s, f, q, c, alpha } => CureParams { k, s, f, q, c, alpha }.validate(m),
            AlgorithmSpec::Cludatase { s, eps, min_pts, max_rounds } => {
                sample(s)?;
                at_least(max_rounds, 1, "max_rounds")?;
                DbscanParams { eps, min_pts }.validate()
            }
        }
    }

    /// Runs the algorithm on `data` with `k` clusters. All randomness comes
    /// from `seed`.
    pub fn run(
        &self,
        data: &Dataset,
        k: usize,
        seed_value: u64,
        counter: &DistanceCounter,
    ) -> Result<ClusteringResult> {
        self.validate(data.m(), k)?;
        let mut rng = rng_from_seed(seed_value);
        match *self {
            AlgorithmSpec::Lloyd { seeding, n_candidates, max_iters, rel_tol } => {
                let cfg = SeedConfig { method: seeding, n_candidates, rng_seed: seed_value };
                seeded_lloyd(data, k, &cfg, Self::stop(max_iters, rel_tol)?, counter)
            }
            AlgorithmSpec::Kmeanspp { n_candidates, max_iters, rel_tol } => {
                let cfg = SeedConfig { method: SeedMethod::Kmeanspp, n_candidates, rng_seed: seed_value };
                seeded_lloyd(data, k, &cfg, Self::stop(max_iters, rel_tol)?, counter)
            }
            AlgorithmSpec::MultiStart { restarts, max_iters, rel_tol } => {
                multi_start(data, k, restarts, seed_value, Self::stop(max_iters, rel_tol)?, counter)
            }
            AlgorithmSpec::Ikmeans { recheck_period, rule, max_iters, rel_tol } => {
                let cfg = IkMeansConfig { stop: Self::stop(max_iters, rel_tol)?, recheck_period, rule };
                run_ikmeans(data, k, &mut rng, &cfg, counter)
            }
            AlgorithmSpec::Minibatch { batch_size, max_iters } => {
                run_minibatch(data, k, batch_size, max_iters, &mut rng, counter)
            }
            AlgorithmSpec::Online {} => run_online(data, k, &mut rng, counter),
            AlgorithmSpec::BigMeans { .. } => {
                run_big_means(data, k, &self.big_means_config().expect("big-means"), seed_value, counter)
            }
            AlgorithmSpec::Bdcsm { p } => run_bdcsm(data, k, p, seed_value, counter),
            AlgorithmSpec::LwCoreset { s } => run_lw_coreset(data, k, s, &mut rng, counter),
            AlgorithmSpec::Cure { s, f, q, c, alpha } => {
                run_cure(data, &CureParams { k, s, f, q, c, alpha }, &mut rng, counter)
            }
            AlgorithmSpec::Cludatase { s, eps, min_pts, max_rounds } => {
                run_cludatase(data, k, s, &DbscanParams { eps, min_pts }, max_rounds, &mut rng, counter)
            }
        }
    }
}

/// Seeds with `cfg` and runs Lloyd; the seeding time and distance count are
/// part of the result.
pub fn seeded_lloyd(
    data: &Dataset,
    k: usize,
    cfg: &SeedConfig,
    stop: StopRule,
    counter: &DistanceCounter,
) -> Result<ClusteringResult> {
    let start = std::time::Instant::now();
    let local = DistanceCounter::new();
    let s = seed(data, k, cfg, &local)?;
    let mut r = run_lloyd(data, s.centroids, stop, EmptyPolicy::KeepPrevious, &local)?;
    counter.add(local.get());
    r.n_d = local.get();
    r.elapsed_seconds = start.elapsed().as_secs_f64();
    if s.degenerate {
        r.flag(RunFlag::DegenerateSeeding);
    }
    Ok(r)
}
