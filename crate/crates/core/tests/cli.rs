use std::path::Path;
use std::process::{Command, Output};

use reval::data::{read_paired_csv, write_paired_csv, write_unlabeled_csv};
use reval::simulate::{gen_stream, World};

fn reval(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_reval"))
        .args(args)
        .env("REVAL_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_stream(dir: &Path, n: usize, seed: u64) -> (String, String) {
    let samples: Vec<_> = gen_stream(&World::new(0.05, 0.95, 4).unwrap(), seed).take(n).collect();
    let paired = dir.join("paired.csv");
    let unlabeled = dir.join("unlabeled.csv");
    write_paired_csv(&paired, &samples).unwrap();
    write_unlabeled_csv(&unlabeled, &samples).unwrap();
    (paired.display().to_string(), unlabeled.display().to_string())
}

fn csv_rows(text: &str) -> Vec<csv::StringRecord> {
    csv::Reader::from_reader(text.as_bytes()).records().map(Result::unwrap).collect()
}

#[test]
fn zero_bets_never_certify() {
    let dir = tempfile::tempdir().unwrap();
    let (paired, unlabeled) = write_stream(dir.path(), 300, 1);
    let out = reval(&[
        "test", "--paired", &paired, "--unlabeled", &unlabeled, "--strategy", "fixed", "--fixed-bet", "0",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).starts_with("T=0"), "{}", stdout(&out));
}

#[test]
fn easy_stream_certifies_and_writes_json() {
    let dir = tempfile::tempdir().unwrap();
    let (paired, unlabeled) = write_stream(dir.path(), 2000, 2);
    let json = dir.path().join("out.json");
    let out = reval(&[
        "test", "--paired", &paired, "--unlabeled", &unlabeled, "--alpha", "0.2", "--strategy", "wsr", "-o",
        json.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).starts_with("T=1"), "{}", stdout(&out));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(json).unwrap()).unwrap();
    assert_eq!(report["decision"], true);
    assert_eq!(report["evaluator"], "r-autoeval-plus");
}

#[test]
fn interval_json_has_the_documented_keys() {
    let dir = tempfile::tempdir().unwrap();
    let (paired, unlabeled) = write_stream(dir.path(), 400, 3);
    let out = reval(&[
        "ci", "--paired", &paired, "--unlabeled", &unlabeled, "--evaluator", "r-eval", "--delta", "0.05", "--grid",
        "1001",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let (lo, hi, w) = (v["lower"].as_f64().unwrap(), v["upper"].as_f64().unwrap(), v["width"].as_f64().unwrap());
    assert!(lo <= hi && (hi - lo - w).abs() < 1e-12);
    assert_eq!(v["evaluator"], "r-eval");
}

#[test]
fn malformed_csv_reports_row_and_column() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    std::fs::write(&path, "real_loss,autoeval_loss_on_real\n0,1\n1,oops\n").unwrap();
    let out = reval(&["test", "--paired", path.to_str().unwrap(), "--evaluator", "r-eval"]);
    assert!(!out.status.success());
    let err = stderr(&out);
    assert!(err.contains("row 2") && err.contains("autoeval_loss_on_real"), "{err}");
}

#[test]
fn out_of_range_loss_names_the_invariant() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    std::fs::write(&path, "real_loss,autoeval_loss_on_real\n1.5,1\n").unwrap();
    let out = reval(&["test", "--paired", path.to_str().unwrap(), "--evaluator", "r-eval"]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("outside [0, 1]"), "{}", stderr(&out));
}

#[test]
fn reliance_without_synthetic_data_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let (paired, _) = write_stream(dir.path(), 50, 4);
    let out = reval(&["test", "--paired", &paired]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("no synthetic data"), "{}", stderr(&out));
}

#[test]
fn simulations_require_a_seed() {
    let out = reval(&["simulate-reliability", "--replications", "2"]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("seed"));
}

#[test]
fn simulations_are_reproducible() {
    let args = [
        "simulate-reliability", "--seed", "9", "--replications", "20", "--risk", "0.15", "-n", "100", "--strategy",
        "wsr",
    ];
    let a = reval(&args);
    let b = reval(&args);
    assert!(a.status.success(), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    let rows = csv_rows(&stdout(&a));
    assert_eq!(rows.len(), 20);
}

#[test]
fn weight_rows_sum_to_one_per_round() {
    let out = reval(&[
        "simulate-weights", "--seed", "3", "--replications", "2", "-n", "50", "--gamma", "0.99", "--arms", "10",
        "--up-grid", "500",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let headers = reader.headers().unwrap().clone();
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
    let (rep, round, weight) = (col("replication"), col("round"), col("weight"));
    let mut sums = std::collections::BTreeMap::new();
    for r in reader.records().map(Result::unwrap) {
        *sums.entry((r[rep].to_string(), r[round].parse::<usize>().unwrap())).or_insert(0.0) +=
            r[weight].parse::<f64>().unwrap();
    }
    assert_eq!(sums.len(), 2 * 50);
    assert!(sums.values().all(|s: &f64| (s - 1.0).abs() < 1e-9));
}

#[test]
fn gstar_sweep_peaks_at_high_reliance_for_a_good_judge() {
    let out = reval(&["gstar", "--gamma", "0.99", "--sweep-rho", "10"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let headers = reader.headers().unwrap().clone();
    let (rho, g) = (
        headers.iter().position(|h| h == "rho").unwrap(),
        headers.iter().position(|h| h == "g_star").unwrap(),
    );
    let rows: Vec<(f64, f64)> = reader
        .records()
        .map(|r| {
            let r = r.unwrap();
            (r[rho].parse().unwrap(), r[g].parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 10);
    let best = rows.iter().copied().fold((0.0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
    assert!(best.0 > 0.5, "{rows:?}");
}

#[test]
fn select_reads_a_manifest_and_flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    write_stream(dir.path(), 600, 5);
    let manifest = dir.path().join("manifest.json");
    std::fs::write(
        &manifest,
        r#"{"fallback": "baseline", "candidates": [
            {"name": "small", "size": 1, "source": {"kind": "files", "paired": "paired.csv", "unlabeled": "unlabeled.csv"}},
            {"name": "bad", "size": 0.5, "source": {"kind": "synthetic", "true_risk": 0.6, "agreement": 0.9, "ratio": 2, "seed": 1}}
        ]}"#,
    )
    .unwrap();
    let config = dir.path().join("config.json");
    std::fs::write(&config, r#"{"alpha": 0.01, "procedure": "bonferroni", "strategy": "wsr"}"#).unwrap();
    let out_csv = dir.path().join("sel.csv");
    let out = reval(&[
        "select", "--config-file", config.to_str().unwrap(), "--manifest", manifest.to_str().unwrap(), "--alpha",
        "0.2", "-n", "600", "-o", out_csv.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let summary = stdout(&out);
    assert!(summary.starts_with("bonferroni: accepted 1/2 chosen=small"), "{summary}");
    let rows = csv_rows(&std::fs::read_to_string(out_csv).unwrap());
    assert_eq!(rows.len(), 2);
}

#[test]
fn emitted_paired_csv_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let (paired, _) = write_stream(dir.path(), 100, 6);
    let pairs = read_paired_csv(&paired).unwrap();
    let samples: Vec<_> = gen_stream(&World::new(0.05, 0.95, 4).unwrap(), 6).take(100).collect();
    for (p, s) in pairs.iter().zip(&samples) {
        assert_eq!(*p, (s.real_loss(), s.autoeval_loss_on_real()));
    }
}
