use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn mssc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mssc")).args(args).output().expect("spawn mssc")
}

fn repo_data(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(rel)
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn stderr_error(out: &Output) -> Value {
    assert!(!out.status.success());
    let v: Value = serde_json::from_slice(&out.stderr).expect("stderr is JSON");
    v["error"].clone()
}

fn toy() -> String {
    repo_data("toy/two_blobs.csv").display().to_string()
}

#[test]
fn run_reports_objective_time_and_counts() {
    let v = stdout_json(&mssc(&["run", "kmeanspp", "--data", &toy(), "--skip-header", "--k", "2", "--seed", "1"]));
    assert!(v["f"].as_f64().unwrap() > 0.0);
    assert!(v["t"].as_f64().unwrap() >= 0.0);
    assert!(v["n_d"].as_u64().unwrap() > 0);
    assert!(v.get("epsilon").is_none());
    assert_eq!(v["centroids"].as_array().unwrap().len(), 2);

    let f = v["f"].as_f64().unwrap();
    let with_base = stdout_json(&mssc(&[
        "run",
        "kmeanspp",
        "--data",
        &toy(),
        "--skip-header",
        "--k",
        "2",
        "--seed",
        "1",
        "--baseline",
        &format!("{}", f / 1.01),
    ]));
    assert!((with_base["epsilon"].as_f64().unwrap() - 1.0).abs() < 1e-9);
}

#[test]
fn baseline_lookup_from_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("b.csv");
    std::fs::write(&csv, "dataset,k,f_star,provenance\ntwo_blobs,2,1000,paper-published\n").unwrap();
    let v = stdout_json(&mssc(&[
        "run",
        "lloyd",
        "--data",
        &toy(),
        "--skip-header",
        "--k",
        "2",
        "--baselines",
        csv.to_str().unwrap(),
    ]));
    assert!(v["epsilon"].is_number());
    let err = stderr_error(&mssc(&[
        "run",
        "lloyd",
        "--data",
        &toy(),
        "--skip-header",
        "--k",
        "3",
        "--baselines",
        csv.to_str().unwrap(),
    ]));
    assert_eq!(err["kind"], "not_found");
}

#[test]
fn errors_are_machine_readable() {
    let unknown_algo = mssc(&["run", "spectral", "--data", &toy(), "--k", "2"]);
    assert_eq!(unknown_algo.status.code(), Some(1));
    assert_eq!(stderr_error(&unknown_algo)["kind"], "config");

    let unknown_flag = mssc(&["run", "lloyd", "--data", &toy(), "--k", "2", "--frobnicate"]);
    assert_eq!(unknown_flag.status.code(), Some(2));
    assert_eq!(stderr_error(&unknown_flag)["kind"], "usage");

    let unknown_param = mssc(&["run", "lloyd", "--data", &toy(), "--skip-header", "--k", "2", "--param", "bogus=1"]);
    assert_eq!(stderr_error(&unknown_param)["kind"], "config");

    let missing = stderr_error(&mssc(&["run", "lloyd", "--data", "/nonexistent/x.csv", "--k", "2"]));
    assert_eq!(missing["kind"], "io");

    let header = stderr_error(&mssc(&["run", "lloyd", "--data", &toy(), "--k", "2"]));
    assert_eq!(header["kind"], "parse");
    assert!(header["message"].as_str().unwrap().contains(":1"), "{header}");

    let too_many = stderr_error(&mssc(&["run", "lloyd", "--data", &toy(), "--skip-header", "--k", "500"]));
    assert_eq!(too_many["kind"], "invalid_argument");
}

#[test]
fn params_flags_and_json_agree() {
    let a = mssc(&["run", "bdcsm", "--data", &toy(), "--skip-header", "--k", "2", "--p", "4", "--omit-timing"]);
    let b = mssc(&["run", "bdcsm", "--data", &toy(), "--skip-header", "--k", "2", "--param", "p=4", "--omit-timing"]);
    assert_eq!(stdout_json(&a), stdout_json(&b));
}

#[test]
fn threads_flag_and_env_do_not_change_results() {
    let args = [
        "run",
        "big-means",
        "--data",
        &toy(),
        "--skip-header",
        "--k",
        "2",
        "--s",
        "30",
        "--workers",
        "3",
        "--omit-timing",
    ];
    let base = stdout_json(&mssc(&args));
    let mut capped = vec!["--threads", "1"];
    capped.extend_from_slice(&args);
    assert_eq!(stdout_json(&mssc(&capped)), base);
    let env = Command::new(env!("CARGO_BIN_EXE_mssc")).args(args).env("MSSC_THREADS", "2").output().unwrap();
    assert_eq!(stdout_json(&env), base);
}

#[test]
fn bench_writes_json_and_markdown() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::copy(repo_data("toy/two_blobs.csv"), dir.path().join("two_blobs.csv")).unwrap();
    let cfg = std::fs::read_to_string(repo_data("toy/bench.toml")).unwrap();
    let cfg_path = dir.path().join("bench.toml");
    std::fs::write(&cfg_path, cfg).unwrap();
    let out = mssc(&["bench", "--config", cfg_path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let md = std::fs::read_to_string(dir.path().join("results.md")).unwrap();
    assert_eq!(md, String::from_utf8(out.stdout).unwrap());
    for algo in ["kmeanspp", "big-means", "bdcsm", "lw-coreset"] {
        assert_eq!(md.lines().filter(|l| l.starts_with(&format!("| {algo} | "))).count(), 3, "{algo} in\n{md}");
    }
    let report: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("results.json")).unwrap()).unwrap();
    assert_eq!(report["records"].as_array().unwrap().len(), 4 * 2 * 5);

    let lima = mssc(&["lima-report", "--results", dir.path().join("results.json").to_str().unwrap()]);
    assert!(lima.status.success());
    assert!(String::from_utf8(lima.stdout).unwrap().contains("| big-means ("));
}

#[test]
fn bench_fails_fast_on_bad_parameters() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::copy(repo_data("toy/two_blobs.csv"), dir.path().join("two_blobs.csv")).unwrap();
    let cfg = std::fs::read_to_string(repo_data("toy/bench.toml")).unwrap().replace("p = 4", "p = 1");
    let cfg_path = dir.path().join("bench.toml");
    std::fs::write(&cfg_path, cfg).unwrap();
    let err = stderr_error(&mssc(&["bench", "--config", cfg_path.to_str().unwrap()]));
    assert_eq!(err["kind"], "config");
    assert!(!dir.path().join("results.json").exists());
}

#[test]
fn lima_report_on_published_scores() {
    let path = repo_data("published_scores.json");
    let strict = String::from_utf8(mssc(&["lima-report", "--results", path.to_str().unwrap()]).stdout).unwrap();
    let comparable = String::from_utf8(
        mssc(&["lima-report", "--results", path.to_str().unwrap(), "--time-tolerance", "0.06"]).stdout,
    )
    .unwrap();
    let big_row = |md: &str| md.lines().find(|l| l.starts_with("| Big-means (")).unwrap().to_string();
    let cells = |row: String| row.split('|').map(|c| c.trim().to_string()).collect::<Vec<_>>();
    let header = cells(strict.lines().find(|l| l.starts_with("| dominates")).unwrap().to_string());
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    let s = cells(big_row(&strict));
    let c = cells(big_row(&comparable));
    assert_eq!(s[col("K-means++")], "✔");
    assert_eq!(s[col("LW-Coreset")], "");
    assert_eq!(c[col("K-means++")], "✔");
    assert_eq!(c[col("LW-Coreset")], "✔");
}

#[test]
fn normalize_stream_canopy_dbscan() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("n.csv");
    let o = mssc(&["normalize", "--data", &toy(), "--skip-header", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let o2 = dir.path().join("n2.csv");
    assert!(mssc(&["normalize", "--data", out.to_str().unwrap(), "--out", o2.to_str().unwrap()]).status.success());
    assert_eq!(std::fs::read(&out).unwrap(), std::fs::read(&o2).unwrap());

    let v = stdout_json(&mssc(&["stream", "--data", &toy(), "--skip-header", "--k", "2"]));
    assert_eq!(v["points"], 120);
    assert_eq!(v["counts"].as_array().unwrap().iter().map(|c| c.as_u64().unwrap()).sum::<u64>(), 120);

    let v = stdout_json(&mssc(&["canopy", "--data", &toy(), "--skip-header", "--t1", "50", "--t2", "20"]));
    assert!(!v["canopies"].as_array().unwrap().is_empty());

    let v = stdout_json(&mssc(&["dbscan", "--data", &toy(), "--skip-header", "--eps", "2.5", "--min-pts", "4"]));
    assert_eq!(v["labels"].as_array().unwrap().len(), 120);
    assert!(v["n_clusters"].as_u64().unwrap() >= 2);
}
