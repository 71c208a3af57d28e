use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn lilrates(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lilrates"))
        .args(args)
        .env_remove("LILRATES_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

fn envelope(o: &Output) -> Value {
    serde_json::from_str(&stdout(o)).expect("envelope is JSON")
}

#[test]
fn constants_examples() {
    let o = lilrates(&[
        "constants",
        "--regime",
        "thm1",
        "--a",
        "0",
        "--b",
        "0",
        "--tau",
        "0",
        "--stat",
        "abs",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows[0], ["regime", "a", "b", "tau", "statistic", "value"]);
    assert_eq!(rows[1][5].parse::<f64>().unwrap(), 1.0);

    let o = lilrates(&["constants", "--regime", "thm2", "--b", "0", "--stat", "abs"]);
    assert_eq!(csv_rows(&stdout(&o))[1][5], "0.5000000000");

    let o = lilrates(&["constants", "--regime", "thm1", "--a", "-1.5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("a > -1"), "{}", stderr(&o));
}

#[test]
fn default_sweep_reaches_the_limit() {
    let o = lilrates(&["sweep", "--regime", "thm1", "--a", "0", "--b", "0", "--stat", "abs"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = csv_rows(&stdout(&o));
    assert_eq!(
        rows[0],
        ["epsilon", "series", "normalized", "limit", "ratio", "error_bound"]
    );
    let summary = rows.last().unwrap();
    assert_eq!(summary[0], "final");
    let ratio: f64 = summary[4].parse().unwrap();
    assert!((ratio - 1.0).abs() <= 0.05, "final ratio {ratio}");
}

#[test]
fn sweep_preconditions_and_partial_failures() {
    let o = lilrates(&["sweep", "--eps", "0.9,0.8"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).is_empty());
    let o = lilrates(&["sweep", "--eps", "1.2,1.5"]);
    assert_eq!(o.status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("partial.csv");
    let o = lilrates(&["sweep", "--eps", "1.5,0.9", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    let rows = csv_rows(&std::fs::read_to_string(&out).unwrap());
    assert_eq!(rows.len(), 4);
    assert_ne!(rows[1][1], "NaN");
    assert_eq!(rows[2][1], "NaN");
    let side: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("partial.csv.json")).unwrap()).unwrap();
    assert_eq!(side["failures"].as_array().unwrap().len(), 1);
}

#[test]
fn analytic_payload_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = lilrates(&["sweep", "--eps", "2,1.5,1.2", "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
        let side: Value =
            serde_json::from_str(&std::fs::read_to_string(format!("{}.json", out.display())).unwrap()).unwrap();
        (std::fs::read(&out).unwrap(), side)
    };
    let (csv_a, env_a) = run("a.csv");
    let (csv_b, env_b) = run("b.csv");
    assert_eq!(csv_a, csv_b);
    assert_eq!(env_a["rows"], env_b["rows"]);
    assert_eq!(env_a["config"], env_b["config"]);
    assert_eq!(env_a["tool"], "lilrates");
    assert!(env_a["timestamp"].as_str().is_some());
}

#[test]
fn simulate_enumeration_example() {
    let o = lilrates(&[
        "simulate",
        "--dist",
        "rademacher",
        "--n",
        "2",
        "--threshold",
        "2",
        "--stat",
        "max",
        "--paths",
        "100000",
        "--seed",
        "7",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let rows = csv_rows(&stdout(&o));
    let p: f64 = rows[1][4].parse().unwrap();
    let se: f64 = rows[1][5].parse().unwrap();
    assert!((p - 0.5).abs() <= 3.0 * se);
}

#[test]
fn seed_precedence() {
    let base = [
        "--json", "simulate", "--dist", "normal", "--n", "50", "--x", "1", "--paths", "500",
    ];
    let run = |seed_flag: Option<&str>, env: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_lilrates"));
        cmd.args(base);
        if let Some(s) = seed_flag {
            cmd.args(["--seed", s]);
        }
        match env {
            Some(v) => cmd.env("LILRATES_SEED", v),
            None => cmd.env_remove("LILRATES_SEED"),
        };
        envelope(&cmd.output().unwrap())
    };
    let default = run(None, None);
    assert_eq!(default["seed"]["source"], "default");
    assert_eq!(default["seed"]["value"], 0);
    let env = run(None, Some("42"));
    assert_eq!(env["seed"]["source"], "env");
    let flag = run(Some("42"), Some("9"));
    assert_eq!(flag["seed"]["source"], "flag");
    assert_eq!(flag["rows"], env["rows"]);

    let bad = Command::new(env!("CARGO_BIN_EXE_lilrates"))
        .args(base)
        .env("LILRATES_SEED", "x")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn cache_hits_reproduce_cold_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let args = [
        "--json",
        "simulate",
        "--dist",
        "uniform",
        "--half-width",
        "2",
        "--n",
        "300",
        "--x",
        "1.2",
        "--paths",
        "2000",
        "--seed",
        "5",
        "--cache-dir",
        cache.to_str().unwrap(),
    ];
    let cold = envelope(&lilrates(&args));
    let warm = envelope(&lilrates(&args));
    assert_eq!(cold["summary"]["cache"], "miss");
    assert_eq!(warm["summary"]["cache"], "hit");
    assert_eq!(cold["rows"], warm["rows"]);
    let uncached = envelope(&lilrates(&args[..args.len() - 2]));
    assert_eq!(uncached["summary"]["cache"], "off");
    assert_eq!(uncached["rows"], cold["rows"]);
    // The worker count is not part of the key and does not change results.
    let mut with_workers = args.to_vec();
    with_workers.extend(["--workers", "3"]);
    let w = envelope(&lilrates(&with_workers));
    assert_eq!(w["summary"]["cache"], "hit");
    assert_eq!(w["rows"], cold["rows"]);
}

#[test]
fn truncation_and_moments_examples() {
    let o = lilrates(&["truncation", "--dist", "rademacher", "--p", "1", "--n", "100"]);
    assert_eq!(o.status.code(), Some(0));
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows[0][4], "b_n");
    assert_eq!(rows[1][4], "100");
    assert_eq!(rows[1][7], "0");

    let o = lilrates(&["--json", "moments", "--dist", "pareto", "--alpha", "2.0"]);
    assert_eq!(o.status.code(), Some(0));
    let env = envelope(&o);
    assert_eq!(env["summary"]["moment_verdict"], "fail");
    assert_eq!(env["summary"]["functional"], "inf");

    let env = envelope(&lilrates(&[
        "--json", "moments", "--dist", "pareto", "--alpha", "2.5", "--a", "0", "--b", "1",
    ]));
    assert_eq!(env["summary"]["moment_verdict"], "pass");
    assert_eq!(env["summary"]["tail_decay_verdict"], "pass");
    assert!(env["summary"]["tail_decay_method"]
        .as_str()
        .unwrap()
        .starts_with("heuristic"));

    let o = lilrates(&["moments", "--dist", "rademacher", "--t", "10,5"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn empirical_series_exit_codes() {
    let o = lilrates(&[
        "simulate",
        "--dist",
        "normal",
        "--eps",
        "1.2",
        "--stat",
        "abs",
        "--grid-min",
        "16",
        "--grid-max",
        "256",
        "--paths",
        "200",
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("majorant"));

    let o = lilrates(&[
        "--json",
        "simulate",
        "--dist",
        "normal",
        "--eps",
        "2.0",
        "--stat",
        "abs",
        "--grid-max",
        "65536",
        "--paths",
        "2000",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let env = envelope(&o);
    let s = &env["summary"];
    let diff = (s["value"].as_f64().unwrap() - s["analytic_value"].as_f64().unwrap()).abs();
    assert!(diff <= s["error_bound"].as_f64().unwrap(), "{s}");

    let o = lilrates(&["simulate", "--dist", "normal", "--eps", "2.0", "--stat", "both"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn io_failures_exit_4() {
    let missing = Path::new("/nonexistent-dir/for/lilrates/out.csv");
    let o = lilrates(&["constants", "--regime", "thm2", "--out", missing.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn invalid_arguments_exit_2() {
    assert_eq!(
        lilrates(&["simulate", "--dist", "normal", "--n", "10", "--x", "1", "--paths", "10"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        lilrates(&["simulate", "--dist", "pareto", "--alpha", "1.5", "--n", "10", "--x", "1"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        lilrates(&["truncation", "--dist", "normal", "--n", "100", "--p", "0.4"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(lilrates(&["constants", "--regime", "thm3"]).status.code(), Some(2));
}
