use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};

use mssc::bench::{lima_scores, run_bench, BaselineTable, BenchReport, OverallScore};
use mssc::config::BenchConfig;
use mssc::density::{canopy, dbscan, CanopyThresholds, DbscanParams};
use mssc::io::{load_dataset, minmax_normalize, save_dataset, stream_rows, LoadOptions};
use mssc::lima::{dominance_markdown, AlgoScore};
use mssc::rng::rng_from_seed;
use mssc::stream::online_from_stream;
use mssc::{relative_error, AlgorithmSpec, Dataset, DistanceCounter, Error, Result};

#[derive(Parser)]
#[command(name = "mssc", version, about = "Minimum sum-of-squares clustering toolkit")]
struct Cli {
    /// Cap on worker threads for the whole process.
    #[arg(long, global = true, env = "MSSC_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct DataArgs {
    /// Delimited text file (comma or whitespace) or TSPLIB .tsp file.
    #[arg(long)]
    data: PathBuf,
    /// Skip the first non-comment line.
    #[arg(long)]
    skip_header: bool,
    /// Min-max scale every column before clustering.
    #[arg(long)]
    normalize: bool,
}

impl DataArgs {
    fn load(&self) -> Result<Dataset> {
        let d = load_dataset(&self.data, LoadOptions { skip_header: self.skip_header })?;
        Ok(if self.normalize { minmax_normalize(&d) } else { d })
    }
}

#[derive(Args)]
struct RunArgs {
    /// lloyd, kmeanspp, multi-start, ikmeans, minibatch, online, big-means,
    /// bdcsm, lw-coreset, cure, cludatase
    algorithm: String,
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Algorithm parameter as key=value (repeatable), e.g. --param s=1000.
    #[arg(long = "param", value_name = "KEY=VALUE")]
    params: Vec<String>,
    #[arg(long)]
    s: Option<usize>,
    #[arg(long)]
    p: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    rel_tol: Option<f64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    max_samples: Option<usize>,
    #[arg(long)]
    time_limit: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    min_pts: Option<usize>,
    /// Reference objective; adds `epsilon` to the output.
    #[arg(long, conflicts_with = "baselines")]
    baseline: Option<f64>,
    /// Baselines CSV; looked up by --dataset-name (default: file stem) and k.
    #[arg(long)]
    baselines: Option<PathBuf>,
    #[arg(long)]
    dataset_name: Option<String>,
    /// Leave wall time out of the output so runs can be compared byte for byte.
    #[arg(long)]
    omit_timing: bool,
    /// Include the label of every point.
    #[arg(long)]
    labels: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run one algorithm and print the result as JSON.
    Run(Box<RunArgs>),
    /// Run a benchmark described by a TOML file.
    Bench {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's JSON output path.
        #[arg(long)]
        json: Option<PathBuf>,
        /// Overrides the config's markdown output path.
        #[arg(long)]
        markdown: Option<PathBuf>,
    },
    /// Print the LIMA dominance matrix for benchmark results or overall scores.
    LimaReport {
        #[arg(long)]
        results: PathBuf,
        /// Treat t_B <= t_A * (1 + tolerance) as no slower.
        #[arg(long, default_value_t = 0.0)]
        time_tolerance: f64,
    },
    /// Min-max scale a dataset and write it as CSV.
    Normalize {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Online K-means over a file read one row at a time.
    Stream {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        skip_header: bool,
        #[arg(long)]
        k: usize,
    },
    /// Canopy clustering (squared Euclidean thresholds).
    Canopy {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        t1: f64,
        #[arg(long)]
        t2: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// DBSCAN labels (null marks noise).
    Dbscan {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        min_pts: usize,
    },
}

fn parse_value(raw: &str) -> Value {
    serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()))
}

fn spec_from(args: &RunArgs) -> Result<AlgorithmSpec> {
    let mut map = Map::new();
    let mut put = |k: &str, v: Option<Value>| {
        if let Some(v) = v {
            map.insert(k.to_string(), v);
        }
    };
    put("s", args.s.map(Value::from));
    put("p", args.p.map(Value::from));
    put("batch_size", args.batch_size.map(Value::from));
    put("max_iters", args.max_iters.map(Value::from));
    put("rel_tol", args.rel_tol.map(Value::from));
    put("workers", args.workers.map(Value::from));
    put("mode", args.mode.clone().map(Value::from));
    put("max_samples", args.max_samples.map(Value::from));
    put("time_limit_seconds", args.time_limit.map(Value::from));
    put("eps", args.eps.map(Value::from));
    put("min_pts", args.min_pts.map(Value::from));
    for kv in &args.params {
        let (k, v) =
            kv.split_once('=').ok_or_else(|| Error::Config(format!("--param expects KEY=VALUE, got {kv:?}")))?;
        map.insert(k.trim().replace('-', "_"), parse_value(v.trim()));
    }
    AlgorithmSpec::from_parts(&args.algorithm, map)
}

fn cmd_run(args: &RunArgs) -> Result<Value> {
    let spec = spec_from(args)?;
    let data = args.data.load()?;
    let f_star = match (&args.baselines, args.baseline) {
        (_, Some(f)) => Some(f),
        (Some(path), None) => {
            let table = BaselineTable::load_csv(path)?;
            let name = args.dataset_name.clone().unwrap_or_else(|| {
                args.data.data.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
            });
            let b = table
                .get(&name, args.k)
                .ok_or_else(|| Error::NotFound(format!("no baseline for {name:?} with k = {}", args.k)))?;
            Some(b.f_star)
        }
        (None, None) => None,
    };
    let counter = DistanceCounter::new();
    let r = spec.run(&data, args.k, args.seed, &counter)?;
    let mut out = Map::new();
    out.insert("algorithm".into(), json!(spec.name()));
    out.insert("spec".into(), serde_json::to_value(&spec)?);
    out.insert("k".into(), json!(args.k));
    out.insert("seed".into(), json!(args.seed));
    out.insert("f".into(), json!(r.objective));
    if let Some(f) = f_star {
        out.insert("epsilon".into(), json!(relative_error(r.objective, f)?));
    }
    if !args.omit_timing {
        out.insert("t".into(), json!(r.elapsed_seconds));
    }
    out.insert("n_d".into(), json!(r.n_d));
    out.insert("n_s".into(), json!(r.n_s));
    out.insert("iterations".into(), json!(r.iterations));
    out.insert("termination".into(), serde_json::to_value(r.termination)?);
    out.insert("flags".into(), serde_json::to_value(&r.flags)?);
    out.insert("centroids".into(), serde_json::to_value(&r.centroids)?);
    if args.labels {
        out.insert("labels".into(), serde_json::to_value(&r.assignment)?);
    }
    Ok(Value::Object(out))
}

fn write_file(path: &std::path::Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io { path: path.to_path_buf(), source: e })
}

fn cmd_bench(config: &PathBuf, json_out: Option<PathBuf>, md_out: Option<PathBuf>, threads: usize) -> Result<String> {
    let prepared = BenchConfig::load(config)?.prepare()?;
    let threads = match prepared.config.threads {
        0 => threads,
        t => t.min(threads),
    };
    let report = run_bench(&prepared, threads)?;
    let md = report.to_markdown();
    if let Some(p) = json_out.or_else(|| prepared.config.output.json.clone()) {
        write_file(&p, &serde_json::to_string_pretty(&report)?)?;
    }
    if let Some(p) = md_out.or_else(|| prepared.config.output.markdown.clone()) {
        write_file(&p, &md)?;
    }
    Ok(md)
}

#[derive(serde::Deserialize)]
struct ScoreFile {
    algorithms: Vec<OverallScore>,
}

fn cmd_lima(results: &PathBuf, tol: f64) -> Result<String> {
    let text = std::fs::read_to_string(results).map_err(|e| Error::Io { path: results.clone(), source: e })?;
    let overall = match serde_json::from_str::<BenchReport>(&text) {
        Ok(r) => r.overall,
        Err(_) => {
            serde_json::from_str::<ScoreFile>(&text)
                .map_err(|e| {
                    Error::Config(format!("{}: neither benchmark results nor a score list: {e}", results.display()))
                })?
                .algorithms
        }
    };
    let (scored, skipped) = lima_scores(&overall);
    let names: Vec<String> = scored.iter().map(|(n, _)| n.clone()).collect();
    let scores: Vec<AlgoScore> = scored.iter().map(|(_, s)| *s).collect();
    let mut out =
        format!("Rows dominate columns. Entries are (mean ε, mean t, LIMA number); time tolerance {tol}.\n\n");
    out.push_str(&dominance_markdown(&names, &scores, tol));
    if !skipped.is_empty() {
        out.push_str(&format!("\nNo LIMA profile: {}\n", skipped.join(", ")));
    }
    Ok(out)
}

fn execute(cli: Cli) -> Result<()> {
    let threads = cli.threads.unwrap_or(0);
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    let pool_threads = rayon::current_num_threads();
    match cli.command {
        Command::Run(args) => println!("{}", serde_json::to_string(&cmd_run(&args)?)?),
        Command::Bench { config, json, markdown } => print!("{}", cmd_bench(&config, json, markdown, pool_threads)?),
        Command::LimaReport { results, time_tolerance } => print!("{}", cmd_lima(&results, time_tolerance)?),
        Command::Normalize { data, out } => save_dataset(out, &minmax_normalize(&data.load()?))?,
        Command::Stream { data, skip_header, k } => {
            let counter = DistanceCounter::new();
            let rows = stream_rows(&data, LoadOptions { skip_header })?;
            let (state, seen) = online_from_stream(rows, k, &counter)?;
            let out = json!({
                "points": seen,
                "n_d": counter.get(),
                "centroids": state.centroids(),
                "counts": state.counts().0,
            });
            println!("{out}");
        }
        Command::Canopy { data, t1, t2, seed } => {
            let set = canopy(
                &data.load()?,
                &CanopyThresholds::new(t1, t2)?,
                &mut rng_from_seed(seed),
                &DistanceCounter::new(),
            )?;
            println!("{}", serde_json::to_string(&set)?);
        }
        Command::Dbscan { data, eps, min_pts } => {
            let labels = dbscan(&data.load()?, &DbscanParams::new(eps, min_pts)?, &DistanceCounter::new())?;
            println!("{}", serde_json::to_string(&labels)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!("{}", json!({ "error": { "kind": "usage", "message": e.to_string() } }));
            return ExitCode::from(2);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", json!({ "error": { "kind": e.kind(), "message": e.to_string() } }));
            ExitCode::from(1)
        }
    }
}
