use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn injnorm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_injnorm"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn stderr_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stderr).expect("stderr is JSON")
}

#[test]
fn state_then_estimate_recovers_w_state() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("w.bin");
    let p = path.to_str().unwrap();
    let state = stdout_json(&injnorm(&[
        "state", "--dicke", "--n", "3", "--d", "2", "--k", "1,2", "--out", p,
    ]));
    let want = (9.0f64 / 4.0).log2();
    assert!((state["gme_bits"].as_f64().unwrap() - want).abs() < 1e-12);
    let est = stdout_json(&injnorm(&["estimate", "--input", p, "--algorithm", "als"]));
    assert!((est["normalized"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-8);
    assert!((est["gme_bits"].as_f64().unwrap() - want).abs() < 1e-6);
}

#[test]
fn svd_oracle_agrees_with_ngd() {
    let common = [
        "--model", "gaussian", "--field", "complex", "--n", "2", "--d", "6", "--seed", "3",
    ];
    let oracle = stdout_json(&injnorm(
        &[&["estimate", "--algorithm", "svd-oracle"][..], &common].concat(),
    ));
    let ngd = stdout_json(&injnorm(
        &[&["estimate", "--algorithm", "ngd"][..], &common].concat(),
    ));
    let (a, b) = (
        oracle["injective_norm"].as_f64().unwrap(),
        ngd["injective_norm"].as_f64().unwrap(),
    );
    assert!((a - b).abs() < 1e-6 * a);
}

#[test]
fn sample_writes_a_loadable_tensor() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.json");
    let p = path.to_str().unwrap();
    let args = [
        "sample", "--model", "mps", "--n", "3", "--d", "2", "--q", "3", "--seed", "5", "--out", p,
    ];
    let out = stdout_json(&injnorm(&args));
    assert_eq!(out["shape"], serde_json::json!([2, 2, 2]));
    let t = injnorm::io::load(Path::new(p)).unwrap();
    assert!((injnorm::euclidean_norm(&t) - out["euclidean_norm"].as_f64().unwrap()).abs() < 1e-12);
}

#[test]
fn trace_file_is_written() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.csv");
    let args = [
        "estimate",
        "--model",
        "gaussian",
        "--n",
        "3",
        "--d",
        "3",
        "--restarts",
        "2",
        "--trace",
    ];
    stdout_json(&injnorm(&[&args[..], &[trace.to_str().unwrap()]].concat()));
    let text = std::fs::read_to_string(&trace).unwrap();
    assert!(text.starts_with("epoch,loss\n"));
    assert!(text.lines().count() > 2);
}

#[test]
fn bench_is_reproducible_and_fittable() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    std::fs::write(
        &config,
        "samples = 2\nseed = 9\nalgorithms = [\"als\", \"pim\"]\nd_grid = [3, 4, 5]\n\n\
         [model]\nkind = \"gaussian-symmetrized\"\nfield = \"real\"\nn = 3\nd = 3\n\n\
         [optimizer]\nrestarts = 2\n",
    )
    .unwrap();
    let mut tables = Vec::new();
    for name in ["a.csv", "b.csv"] {
        let csv = dir.path().join(name);
        let out = stdout_json(&injnorm(&[
            "bench",
            config.to_str().unwrap(),
            "--output",
            csv.to_str().unwrap(),
        ]));
        assert_eq!(out["rows"], 12);
        assert_eq!(out["failed"], 0);
        let mut rows: Vec<Vec<String>> = Vec::new();
        for line in std::fs::read_to_string(&csv).unwrap().lines() {
            let mut cells: Vec<String> = line.split(',').map(String::from).collect();
            cells.pop(); // wall_time_ms
            rows.push(cells);
        }
        tables.push(rows);
    }
    assert_eq!(tables[0], tables[1]);

    let csv = dir.path().join("a.csv");
    let fit = stdout_json(&injnorm(&[
        "fit",
        "--model",
        "sqrt-inverse",
        csv.to_str().unwrap(),
    ]));
    assert_eq!(fit["n_points"], 3);
    assert_eq!(fit["constants"].as_array().unwrap().len(), 2);
}

#[test]
fn fit_reads_plain_columns() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("pts.csv");
    let rows: String = [4.0f64, 16.0, 64.0]
        .iter()
        .map(|d| format!("{d},{}\n", 2.0 - 1.0 / d.sqrt()))
        .collect();
    std::fs::write(&csv, format!("d,y\n{rows}")).unwrap();
    let fit = stdout_json(&injnorm(&[
        "fit",
        "--model",
        "sqrt-inverse",
        csv.to_str().unwrap(),
    ]));
    let c: Vec<f64> = fit["constants"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    assert!((c[0] - 2.0).abs() < 1e-10 && (c[1] + 1.0).abs() < 1e-10);
}

#[test]
fn usage_errors_exit_2_with_json() {
    let out = injnorm(&["estimate", "--model", "nonsense", "--n", "2", "--d", "2"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"], "usage");

    let out = injnorm(&["estimate", "--input", "/definitely/missing.bin"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"], "io");

    let out = injnorm(&["state", "--antisym", "--n", "3", "--d", "2"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"], "spec");
}

#[test]
fn runtime_errors_exit_1() {
    let out = injnorm(&[
        "estimate",
        "--model",
        "gaussian",
        "--n",
        "3",
        "--d",
        "3",
        "--algorithm",
        "svd-oracle",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_json(&out)["message"]
        .as_str()
        .unwrap()
        .contains("order-2"));
}
