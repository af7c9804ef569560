//! End-to-end runs of the `cvqkd` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn cvqkd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cvqkd"))
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

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn simulate_is_byte_identical_on_rerun() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for p in [&a, &b] {
        let out = cvqkd(&[
            "simulate",
            "--alpha",
            "0.5",
            "--eta",
            "0.8",
            "--delta",
            "0.001",
            "--n",
            "500",
            "--seed",
            "17",
            "--out",
            path(p),
        ]);
        assert!(out.status.success(), "{}", stderr(&out));
    }
    let bytes = fs::read(&a).unwrap();
    assert_eq!(bytes, fs::read(&b).unwrap());
    let text = String::from_utf8(bytes).unwrap();
    assert!(text.starts_with("x,basis,y\n"));
    assert_eq!(text.lines().count(), 501);
}

#[test]
fn zero_rounds_is_a_usage_error() {
    let out = cvqkd(&[
        "simulate",
        "--alpha",
        "0.5",
        "--eta",
        "0.8",
        "--n",
        "0",
        "--out",
        "/dev/null",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("--n"));
}

#[test]
fn malformed_basis_token_reports_its_line() {
    let dir = tempfile::tempdir().unwrap();
    let rec = dir.path().join("bad.csv");
    fs::write(&rec, "x,basis,y\n0,q,0.1\n1,r,0.3\n").unwrap();
    let out = cvqkd(&["estimate", path(&rec)]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert!(err.contains("line 3"), "{err}");
    assert!(err.contains('r'), "{err}");
}

#[test]
fn thin_records_report_insufficient_data() {
    let dir = tempfile::tempdir().unwrap();
    let rec = dir.path().join("thin.csv");
    fs::write(&rec, "x,basis,y\n0,q,0.1\n0,q,0.2\n").unwrap();
    let out = cvqkd(&["estimate", path(&rec)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("insufficient data"));
}

#[test]
fn estimate_then_keyrate_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let rec = dir.path().join("rec.csv");
    let stats = dir.path().join("stats.json");
    let out = cvqkd(&[
        "simulate",
        "--alpha",
        "0.5",
        "--loss-db",
        "1",
        "--n",
        "200000",
        "--seed",
        "3",
        "--out",
        path(&rec),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let out = cvqkd(&["estimate", path(&rec), "--out", path(&stats)]);
    assert!(out.status.success(), "{}", stderr(&out));
    let est: Value = serde_json::from_str(&fs::read_to_string(&stats).unwrap()).unwrap();
    let n = est["n"].as_array().unwrap();
    let total: u64 = n
        .iter()
        .flat_map(|r| r.as_array().unwrap())
        .map(|c| c.as_u64().unwrap())
        .sum();
    assert_eq!(total, 200_000);

    let out = cvqkd(&[
        "keyrate",
        "--stats",
        path(&stats),
        "--alpha",
        "0.5",
        "--n-eps",
        "12",
        "--n-gamma",
        "8",
    ]);
    let b = stdout_json(&out);
    assert_eq!(b["alpha_used"], 0.5);
    let g = b["G"].as_f64().unwrap();
    assert_eq!(b["G_floored"].as_f64().unwrap(), g.max(0.0));
    assert!(b["I_xy"].as_f64().unwrap() > 0.2);
    assert!(b.get("eta").is_none());
}

#[test]
fn unphysical_statistics_are_refused() {
    let dir = tempfile::tempdir().unwrap();
    let stats = dir.path().join("stats.json");
    fs::write(
        &stats,
        r#"{"mean_q":[-0.5,0.5],"mean_p":[0.0,0.0],"var_q":[0.2,0.2],"var_p":[0.2,0.2]}"#,
    )
    .unwrap();
    let out = cvqkd(&["keyrate", "--stats", path(&stats), "--alpha", "0.5"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(
        stderr(&out).contains("observation unphysical"),
        "{}",
        stderr(&out)
    );
}

#[test]
fn noiseless_lossless_channel_certifies_key() {
    let out = cvqkd(&["keyrate", "--alpha", "0.5", "--eta", "1", "--delta", "0"]);
    let b = stdout_json(&out);
    assert!(b["G_floored"].as_f64().unwrap() > 0.0);
    assert_eq!(b["status"], "key certified");
    assert_eq!(b["eta"], 1.0);
    assert_eq!(b["loss_db"].as_f64().unwrap().abs(), 0.0);
}

#[test]
fn amplitude_is_optimised_when_omitted() {
    let out = cvqkd(&[
        "keyrate",
        "--loss-db",
        "3",
        "--delta",
        "0.0024",
        "--alpha-grid",
        "0.2,0.6,1.0",
        "--n-eps",
        "8",
        "--n-gamma",
        "6",
    ]);
    let b = stdout_json(&out);
    let alpha = b["alpha_used"].as_f64().unwrap();
    assert!([0.2, 0.6, 1.0].contains(&alpha));
    assert_eq!(
        b["G_floored"].as_f64().unwrap(),
        b["G"].as_f64().unwrap().max(0.0)
    );
    assert_eq!(b["status"], "no positive key");
}

#[test]
fn conflicting_channel_flags_are_rejected() {
    let out = cvqkd(&[
        "keyrate",
        "--alpha",
        "0.5",
        "--eta",
        "0.5",
        "--loss-db",
        "3",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn single_point_sweep_writes_header_and_one_row() {
    let out = cvqkd(&[
        "sweep",
        "--loss-db-grid",
        "2",
        "--deltas",
        "0.0004",
        "--n-eps",
        "10",
        "--n-gamma",
        "8",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = rdr.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header.first().map(String::as_str), Some("loss_db"));
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 1);
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    let row = &rows[0];
    assert_eq!(&row[col("loss_db")], "2");
    assert_eq!(&row[col("delta")], "0.0004");
    let g: f64 = row[col("G")].parse().unwrap();
    let floored: f64 = row[col("G_floored")].parse().unwrap();
    assert_eq!(floored, g.max(0.0));
    assert_eq!(&row[col("error")], "");
}
