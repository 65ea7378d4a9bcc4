use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qcbounds"))
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("qcbounds-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn small_config() -> PathBuf {
    let p = tmp("small.json");
    std::fs::write(&p, r#"{"n_qubits": 4, "t": 3}"#).unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn missing_seed_is_a_config_error() {
    let cfg = small_config();
    let o = run(&["--config", cfg.to_str().unwrap(), "bound"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("seed"));
}

#[test]
fn unknown_config_field_is_a_config_error() {
    let p = tmp("bad.json");
    std::fs::write(&p, "{\n  \"shot\": 10\n}").unwrap();
    let o = run(&["--config", p.to_str().unwrap(), "--seed", "1", "bound"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains(":2:"));
}

#[test]
fn bad_confidence_is_a_config_error() {
    let cfg = small_config();
    let o = run(&["--config", cfg.to_str().unwrap(), "--seed", "1", "--confidence", "1.5", "bound"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bound_is_deterministic_and_carries_provenance() {
    let cfg = small_config();
    let args = ["--config", cfg.to_str().unwrap(), "--seed", "7", "--shots", "300", "bound"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(stdout(&a), stdout(&b));

    let mut rdr = csv::Reader::from_reader(a.stdout.as_slice());
    let header = rdr.headers().unwrap().clone();
    for col in ["quantity", "side", "certified", "seed", "shots", "config_hash", "confidence"] {
        assert!(header.iter().any(|h| h == col), "missing column {col}");
    }
    let idx = |c: &str| header.iter().position(|h| h == c).unwrap();
    let rows: Vec<_> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 6);
    for r in &rows {
        assert_eq!(&r[idx("seed")], "7");
        assert_eq!(&r[idx("shots")], "300");
        assert_eq!(r[idx("config_hash")].len(), 64);
    }

    let c = run(&["--config", cfg.to_str().unwrap(), "--seed", "8", "--shots", "300", "bound"]);
    assert_ne!(stdout(&a), stdout(&c));
}

#[test]
fn simulated_records_round_trip_through_bound() {
    let cfg = small_config();
    let rec = tmp("records.txt");
    let c = cfg.to_str().unwrap();
    let o = run(&["--config", c, "--seed", "3", "--shots", "200", "simulate", "--out", rec.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(&rec).unwrap();
    assert!(text.starts_with("# seed=3 shots=200"));

    let from_file = run(&["--config", c, "--seed", "3", "--shots", "200", "bound", "--records", rec.to_str().unwrap()]);
    let direct = run(&["--config", c, "--seed", "3", "--shots", "200", "bound"]);
    assert_eq!(from_file.status.code(), Some(0));
    assert_eq!(stdout(&from_file), stdout(&direct));
}

#[test]
fn oracle_contains_every_quantity() {
    let cfg = small_config();
    let o = run(&[
        "--config",
        cfg.to_str().unwrap(),
        "--seed",
        "1",
        "--format",
        "json",
        "oracle",
        "--quantities",
        "gbar,purity,purity_gram,vn,frame_potential,design_distance",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let rows = v.as_array().unwrap();
    assert_eq!(rows.len(), 6);
    assert!(rows.iter().all(|r| r["contained"] == true));
}

#[test]
fn validate_reports_json_and_passes() {
    let o = run(&["--seed", "11", "validate", "opalg", "--instances", "20"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["passed"], true);
    assert_eq!(v["seed"], 11);
}

#[test]
fn figure_rows_are_deterministic() {
    let p = tmp("fig.json");
    std::fs::write(&p, r#"{"n_qubits": 4, "sweep": {"t_values": [1, 2], "shots": [200]}}"#).unwrap();
    let args = ["--config", p.to_str().unwrap(), "--seed", "5", "figure", "converge"];
    let a = run(&args);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(stdout(&a), stdout(&run(&args)));
    let mut rdr = csv::Reader::from_reader(a.stdout.as_slice());
    assert!(rdr.headers().unwrap().iter().any(|h| h == "config_hash"));
    assert!(rdr.records().count() > 0);
}

#[test]
fn unknown_figure_is_rejected() {
    let o = run(&["--seed", "1", "figure", "nope"]);
    assert_eq!(o.status.code(), Some(2));
}
