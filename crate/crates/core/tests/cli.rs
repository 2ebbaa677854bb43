use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn orbdiam(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_orbdiam"))
        .args(args)
        .env_remove("ORBDIAM_CAP")
        .output()
        .expect("binary runs")
}

fn family(dir: &Path, name: &str, args: &[&str]) -> String {
    let path = dir.join(format!("{name}.json")).display().to_string();
    let mut full = vec!["family"];
    full.extend_from_slice(args);
    full.extend_from_slice(&["--output", &path]);
    let out = orbdiam(&full);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    path
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn wreath_instance_file_shape() {
    let dir = TempDir::new().unwrap();
    let path = family(dir.path(), "w3", &["wreath", "3"]);
    let inst: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(inst["p"], 3);
    assert_eq!(inst["d"], 3);
    let gens = inst["generators"].as_array().unwrap();
    assert_eq!(gens.len(), 2);
    for g in gens {
        let rows = g.as_array().unwrap();
        assert_eq!(rows.len(), 3);
        assert!(rows.iter().all(|r| r.as_array().unwrap().len() == 3));
    }
}

#[test]
fn diameter_round_trip_and_stability() {
    let dir = TempDir::new().unwrap();
    let path = family(dir.path(), "w3", &["wreath", "3"]);
    let a = orbdiam(&["diameter", &path, "--undirected"]);
    assert!(a.status.success());
    let b = orbdiam(&["--threads", "1", "diameter", &path, "--undirected"]);
    assert_eq!(a.stdout, b.stdout, "reports must be byte-stable");
    let r = json(&a);
    assert_eq!(r["overall_directed"], 3);
    assert_eq!(r["group_order"], 24);
    let max = r["orbits"].as_array().unwrap().iter().map(|o| o["directed_diameter"].as_u64().unwrap()).max();
    assert_eq!(max, Some(3));
}

#[test]
fn gl23_has_diameter_one() {
    let dir = TempDir::new().unwrap();
    let path = family(dir.path(), "gl", &["gl", "2", "3"]);
    let out = orbdiam(&["diameter", &path]);
    assert_eq!(json(&out)["overall_directed"], 1);
}

#[test]
fn reducible_input_exit_code() {
    let dir = TempDir::new().unwrap();
    let path = family(dir.path(), "shift", &["shift", "3", "3"]);
    let out = orbdiam(&["diameter", &path]);
    assert_eq!(out.status.code(), Some(4));
    assert!(out.stdout.is_empty());
}

#[test]
fn parse_error_exit_code() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, r#"{"label":"x","p":6,"d":1,"generators":[[[1]]]}"#).unwrap();
    let out = orbdiam(&["diameter", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
}

#[test]
fn cap_exit_code_from_env() {
    let dir = TempDir::new().unwrap();
    let path = family(dir.path(), "sl", &["sl", "2", "5"]);
    let out = Command::new(env!("CARGO_BIN_EXE_orbdiam"))
        .args(["diameter", &path])
        .env("ORBDIAM_CAP", "10")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    let out = orbdiam(&["diameter", &path, "--cap", "10"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn certify_wreath3() {
    let dir = TempDir::new().unwrap();
    let path = family(dir.path(), "w3", &["wreath", "3"]);
    let wit = dir.path().join("wit.json");
    let out = orbdiam(&["certify", &path, "--targets", "all", "--witnesses", wit.to_str().unwrap()]);
    assert!(out.status.success());
    let c = &json(&out)["certification"];
    assert_eq!(c["status"], "certified");
    assert_eq!(c["branch"], "trivial");
    assert_eq!(c["bound"], 243);
    assert_eq!(c["verified"], true);
    assert!(c["max_witness_length"].as_u64().unwrap() <= 6);
    let records: Value = serde_json::from_str(&std::fs::read_to_string(wit).unwrap()).unwrap();
    for r in records.as_array().unwrap() {
        assert_eq!(r["verified"], true);
        assert_eq!(r["length"].as_u64().unwrap() as usize, r["summands"].as_array().unwrap().len());
    }
}

#[test]
fn certify_sl211_unipotent() {
    let dir = TempDir::new().unwrap();
    let path = family(dir.path(), "sl", &["sl", "2", "11"]);
    let out = orbdiam(&["certify", &path, "--branch", "unipotent"]);
    assert!(out.status.success());
    let c = &json(&out)["certification"];
    assert_eq!(c["branch"], "unipotent");
    assert_eq!(c["k"], 2);
    assert_eq!(c["m"], 1);
}

#[test]
fn certify_sampling_is_seeded() {
    let dir = TempDir::new().unwrap();
    let path = family(dir.path(), "w5", &["wreath", "5"]);
    let a = orbdiam(&["certify", &path, "--targets", "40", "--seed", "9"]);
    let b = orbdiam(&["certify", &path, "--targets", "40", "--seed", "9"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(json(&a)["certification"]["targets_exhaustive"], false);
}

#[test]
fn singer_control_not_applicable() {
    let dir = TempDir::new().unwrap();
    let path = family(dir.path(), "singer", &["singer", "2", "3"]);
    let out = orbdiam(&["certify", &path, "--diameter"]);
    assert_eq!(out.status.code(), Some(5));
    let r = json(&out);
    assert_eq!(r["certification"]["status"], "not-applicable");
    assert_eq!(r["overall_directed"], 1);
}

#[test]
fn power_sums_solution_and_frontier() {
    let out = orbdiam(&["power-sums", "37", "2", "6", "0,4"]);
    assert!(out.status.success());
    let r = json(&out);
    assert_eq!(r["verified"], true);
    let xs: Vec<u64> = r["solution"].as_array().unwrap().iter().map(|x| x.as_u64().unwrap()).collect();
    assert_eq!(xs.len(), 6);
    assert_eq!(xs.iter().sum::<u64>() % 37, 0);
    assert_eq!(xs.iter().map(|x| x * x).sum::<u64>() % 37, 4);

    let out = orbdiam(&["power-sums", "7", "3", "2", "0,0,0"]);
    assert_eq!(json(&out)["solution"], serde_json::json!([0, 0]));

    let out = orbdiam(&["power-sums", "37", "2", "--frontier", "6"]);
    assert!(out.status.success());
    let mut reader = csv::Reader::from_reader(out.stdout.as_slice());
    let headers = reader.headers().unwrap().clone();
    assert_eq!(headers.iter().collect::<Vec<_>>(), ["p", "k", "m", "all_solvable", "counterexample_rhs_or_empty"]);
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 6);
    assert_eq!(&rows[5][3], "true");
    assert_eq!(&rows[5][4], "");
}

#[test]
fn power_sums_budget_exit_code() {
    let out = orbdiam(&["power-sums", "47", "2", "--frontier", "7", "--budget", "10"]);
    assert_eq!(out.status.code(), Some(7));
}

#[test]
fn unknown_family_is_a_parse_error() {
    let out = orbdiam(&["family", "nope", "3"]);
    assert_eq!(out.status.code(), Some(2));
}
