//! End-to-end runs of the `rollover` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rollover")).args(args).output().unwrap()
}

fn quotes() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data/quotes_2013-01-01.csv")
}

fn calibrate(out: &Path, extra: &[&str]) -> Output {
    let q = quotes();
    let mut args = vec!["calibrate", "--quotes", q.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    bin(&args)
}

#[test]
fn stage_one_puts_every_ois_in_band() {
    let dir = tempfile::tempdir().unwrap();
    let o = calibrate(dir.path(), &["--stages", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("residuals.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 10);
    assert!(rows.iter().all(|r| r.starts_with("OIS@") && r.ends_with(",true")));
}

#[test]
fn same_seed_gives_identical_files_for_any_worker_count() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert!(calibrate(a.path(), &["--stages", "1", "--seed", "11", "--workers", "1"]).status.success());
    assert!(calibrate(b.path(), &["--stages", "1", "--seed", "11", "--workers", "3"]).status.success());
    for f in ["calibration.toml", "residuals.csv", "report.txt"] {
        let x = std::fs::read(a.path().join(f)).unwrap();
        let y = std::fs::read(b.path().join(f)).unwrap();
        assert_eq!(x, y, "{f} differs");
    }
}

#[test]
fn empty_quotes_exit_with_missing_quote() {
    let dir = tempfile::tempdir().unwrap();
    let q = dir.path().join("quotes_2013-01-01.csv");
    std::fs::write(&q, "maturity,bid,ask,kind,unit\n").unwrap();
    let o = bin(&["calibrate", "--quotes", q.to_str().unwrap(), "--out", dir.path().join("out").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("MissingQuote"));
}

#[test]
fn price_reads_saved_model_and_rejects_unknown_specs() {
    let dir = tempfile::tempdir().unwrap();
    assert!(calibrate(dir.path(), &["--stages", "1"]).status.success());
    let m = dir.path().to_str().unwrap();
    let o = bin(&["price", "--model", m, "ois@0.5", "basis:2m/5m@5"]);
    assert_eq!(o.status.code(), Some(0));
    let out = String::from_utf8_lossy(&o.stdout);
    let ois: f64 = out.lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
    // 6m OIS mid is 0.15%; the fit sits between the bid and ask discount factors
    assert!((ois - 0.0015).abs() < 1e-7, "{ois}");
    assert!(out.contains("basis:2m/5m@5"));
    let o = bin(&["price", "--model", m, "fra:1x4"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("UnknownInstrument"));
}

#[test]
fn validate_fixture_passes_and_rejects_tiny_path_counts() {
    let o = bin(&["validate", "--fixture", "ois3_2014-09-08", "--mc-paths", "20000"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let o = bin(&["validate", "--fixture", "ois3_2014-09-08", "--mc-paths", "999"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn missing_files_are_input_errors() {
    let o = bin(&["price", "--model", "/nonexistent/calibration.toml", "ois@1"]);
    assert_eq!(o.status.code(), Some(2));
    let o = bin(&["calibrate", "--quotes", "/nonexistent/quotes_2013-01-01.csv", "--out", "/tmp/x"]);
    assert_eq!(o.status.code(), Some(2));
}
