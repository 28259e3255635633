use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hermite-quad"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("valid JSON")
}

fn space_file(dir: &TempDir, name: &str, body: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, body).unwrap();
    p
}

fn unit_space(dir: &TempDir, s: usize) -> PathBuf {
    space_file(
        dir,
        &format!("unit{s}.json"),
        &format!(
            r#"{{"s":{s},"omega":0.5,"a":{{"kind":"power","alpha":1,"gamma":0}},"b":{{"kind":"power","alpha":1,"gamma":0}}}}"#
        ),
    )
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap()
}

#[test]
fn nodes_small_orders() {
    let one = json(&run(&["nodes", "--n", "1"]));
    assert_eq!(f(&one["nodes"][0]), 0.0);
    assert_eq!(f(&one["weights"][0]), 1.0);
    let two = json(&run(&["nodes", "--n", "2"]));
    assert!((f(&two["nodes"][0]) + 1.0).abs() < 1e-15);
    assert!((f(&two["nodes"][1]) - 1.0).abs() < 1e-15);
    assert!((f(&two["weights"][0]) - 0.5).abs() < 1e-15);
    assert_eq!(run(&["nodes", "--n", "0"]).status.code(), Some(2));
    assert_eq!(run(&["nodes", "--n", "201"]).status.code(), Some(2));
}

#[test]
fn nodes_csv() {
    let out = run(&["nodes", "--n", "3", "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let weights: f64 = rdr.records().map(|r| r.unwrap()[2].parse::<f64>().unwrap()).sum();
    assert!((weights - 1.0).abs() < 1e-14);
}

#[test]
fn wce_examples() {
    let dir = TempDir::new().unwrap();
    let s1 = unit_space(&dir, 1);
    let r = json(&run(&["wce", "--space", p(&s1), "--m", "1"]));
    assert!((f(&r["e_squared"]) - (2.0 / 3f64.sqrt() - 1.0)).abs() < 1e-12);

    let s2 = unit_space(&dir, 2);
    let r = json(&run(&["wce", "--space", p(&s2), "--m", "1,1"]));
    assert!((f(&r["e_squared"]) - 1.0 / 3.0).abs() < 1e-12);

    let s3 = unit_space(&dir, 3);
    let r = json(&run(&["wce", "--space", p(&s3), "--m", "2,3,4"]));
    assert!(f(&r["e_squared"]) <= f(&r["analytic_upper_e_squared"]));

    let rule = dir.path().join("rule.json");
    fs::write(&rule, r#"{"nodes": [], "weights": []}"#).unwrap();
    let r = json(&run(&["wce", "--space", p(&s1), "--rule", p(&rule)]));
    assert_eq!(f(&r["e_squared"]), 1.0);

    fs::write(&rule, r#"{"nodes": [[-1.0], [1.0]], "weights": [0.5, 0.5]}"#).unwrap();
    let gram = json(&run(&["wce", "--space", p(&s1), "--rule", p(&rule), "--tol", "1e-12"]));
    let prod = json(&run(&["wce", "--space", p(&s1), "--m", "2", "--tol", "1e-12"]));
    assert!((f(&gram["e_squared"]) - f(&prod["e_squared"])).abs() < 4e-12);

    assert_eq!(run(&["wce", "--space", p(&s2), "--m", "1,2,3"]).status.code(), Some(2));
    assert_eq!(run(&["wce", "--space", "/nonexistent.json", "--m", "1"]).status.code(), Some(2));
}

#[test]
fn plan_examples() {
    let dir = TempDir::new().unwrap();
    let s1 = unit_space(&dir, 1);
    let plan = json(&run(&["plan", "--space", p(&s1), "--scheme", "uexp", "--eps", "0.1"]));
    assert_eq!(plan["n_total"].as_u64(), Some(10));
    assert!(f(&plan["measured_e"]) <= 0.1);

    let mixed = space_file(
        &dir,
        "mixed.json",
        r#"{"s":2,"omega":0.5,"a":{"kind":"explicit","values":[1,1]},"b":{"kind":"explicit","values":[1,2]}}"#,
    );
    let plan = json(&run(&["plan", "--space", p(&mixed), "--scheme", "ecspt", "--eps", "0.01"]));
    assert!(f(&plan["measured_e"]) <= 0.01);

    let plan = json(&run(&["plan", "--space", p(&s1), "--scheme", "ecwt", "--a-const", "0.5", "--eps", "0.01"]));
    assert!(f(&plan["measured_e"]) <= 0.01);
    assert_eq!(run(&["plan", "--space", p(&s1), "--scheme", "ecwt", "--eps", "0.01"]).status.code(), Some(2));
    assert_eq!(run(&["plan", "--space", p(&s1), "--eps", "1.5"]).status.code(), Some(2));
    assert_eq!(run(&["plan", "--space", p(&s1), "--scheme", "fast", "--eps", "0.1"]).status.code(), Some(2));

    let greedy = json(&run(&["plan", "--space", p(&s1), "--greedy", "--eps", "0.1"]));
    assert!(greedy["n_total"].as_u64().unwrap() <= 10);
}

#[test]
fn budget_exhaustion_exits_with_three() {
    let dir = TempDir::new().unwrap();
    let s2 = unit_space(&dir, 2);
    let out = run(&["plan", "--space", p(&s2), "--greedy", "--budget", "3", "--eps", "1e-6"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("budget"));
}

#[test]
fn sweep_rows_match_plans() {
    let dir = TempDir::new().unwrap();
    let s2 = unit_space(&dir, 2);
    let out = run(&["sweep", "--space", p(&s2), "--scheme", "uexp", "--eps", "0.1,0.01,0.001"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = rdr.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(
        header,
        ["s", "epsilon_or_n", "m1", "m2", "n_total", "e_measured", "e_bound", "lower_bound", "p_hat"]
    );
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 3);
    for (row, eps) in rows.iter().zip(["0.1", "0.01", "0.001"]) {
        let plan = json(&run(&["plan", "--space", p(&s2), "--scheme", "uexp", "--eps", eps]));
        assert_eq!(row[2].parse::<u64>().unwrap(), plan["m"][0].as_u64().unwrap());
        assert_eq!(row[4].parse::<u64>().unwrap(), plan["n_total"].as_u64().unwrap());
        let e: f64 = row[5].parse().unwrap();
        assert_eq!(e.to_bits(), f(&plan["measured_e"]).to_bits());
    }
}

#[test]
fn sweep_over_n_feeds_the_rate_fit() {
    let dir = TempDir::new().unwrap();
    let s1 = unit_space(&dir, 1);
    let out = run(&["sweep", "--space", p(&s1), "--n", "1..30", "--tol", "1e-60"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 30);
    let p_hat: f64 = rows[0][7].parse().unwrap();
    assert!((p_hat - 1.0).abs() < 0.15, "p_hat = {p_hat}");
    for row in &rows {
        let e: f64 = row[4].parse().unwrap();
        let lb: f64 = row[6].parse().unwrap();
        assert!(lb <= e);
    }
}

#[test]
fn sweep_rejects_bad_grids() {
    let dir = TempDir::new().unwrap();
    let s1 = unit_space(&dir, 1);
    assert_eq!(run(&["sweep", "--space", p(&s1), "--eps", ""]).status.code(), Some(2));
    assert_eq!(run(&["sweep", "--space", p(&s1), "--eps", "0.1,0.2,0.1"]).status.code(), Some(2));
    assert_eq!(run(&["sweep", "--space", p(&s1)]).status.code(), Some(2));
}

#[test]
fn csv_fields_round_trip_bit_exactly() {
    let dir = TempDir::new().unwrap();
    let s2 = unit_space(&dir, 2);
    let csv_path = dir.path().join("sweep.csv");
    let json_path = dir.path().join("sweep.json");
    let base = ["sweep", "--space", p(&s2), "--n", "1..6"];
    let out = bin().args(base).args(["--out", p(&csv_path)]).output().unwrap();
    assert!(out.status.success());
    let out = bin()
        .args(base)
        .args(["--format", "json", "--out", p(&json_path)])
        .output()
        .unwrap();
    assert!(out.status.success());
    let rows: Vec<Value> = serde_json::from_str(&fs::read_to_string(&json_path).unwrap()).unwrap();
    let mut rdr = csv::Reader::from_path(&csv_path).unwrap();
    for (rec, row) in rdr.records().map(Result::unwrap).zip(&rows) {
        for (col, key) in [(5, "e_measured"), (6, "e_bound"), (7, "lower_bound"), (8, "p_hat")] {
            let text = &rec[col];
            let parsed: f64 = text.parse().unwrap();
            assert_eq!(parsed.to_bits(), f(&row[key]).to_bits(), "{key}");
            assert_eq!(seventeen_digits(parsed), text);
        }
    }
}

fn seventeen_digits(x: f64) -> String {
    format!("{x:.16e}")
}

#[test]
fn integrate_examples() {
    let dir = TempDir::new().unwrap();
    let s2 = unit_space(&dir, 2);
    let plan_path = dir.path().join("plan.json");
    let out = run(&["plan", "--space", p(&s2), "--eps", "0.01", "--out", p(&plan_path)]);
    assert!(out.status.success());
    let r = json(&run(&["integrate", "--space", p(&s2), "--function", "appendixB", "--plan", p(&plan_path)]));
    assert!((f(&r["exact"]) - 0.5f64.exp()).abs() < 1e-15);
    assert!(f(&r["error"]) <= f(&r["e_measured"]) * f(&r["norm"]));
    assert_eq!(r["within_bound"], Value::Bool(true));

    let r = json(&run(&["integrate", "--space", p(&s2), "--function", "appendixB", "--m", "3,3"]));
    assert!(f(&r["error"]) <= f(&r["certified_bound"]));

    let s1 = unit_space(&dir, 1);
    let r = json(&run(&["integrate", "--space", p(&s1), "--function", "hermite:4", "--m", "2"]));
    // |sum_i alpha_i H_4(x_i)| with nodes +-1 and H_4(1) = -2 / sqrt(24)
    assert!((f(&r["error"]) - 2.0 / 24f64.sqrt()).abs() < 1e-14);
    assert_eq!(
        run(&["integrate", "--space", p(&s1), "--function", "gauss", "--m", "2"]).status.code(),
        Some(2)
    );
}

#[test]
fn lower_bound_and_regime() {
    let dir = TempDir::new().unwrap();
    let s1 = unit_space(&dir, 1);
    let r = json(&run(&["lower-bound", "--space", p(&s1), "--t", "1"]));
    assert!((f(&r["lower_bound"]["bound"]) - 1.0 / 128.0).abs() < 1e-17);
    let r = json(&run(&["lower-bound", "--space", p(&s1), "--n", "1", "--t-cap", "10"]));
    assert_eq!(r["lower_bound"]["t"][0].as_u64(), Some(1));
    assert_eq!(run(&["lower-bound", "--space", p(&s1), "--t", "0"]).status.code(), Some(2));

    let s3 = unit_space(&dir, 3);
    let r = json(&run(&["regime", "--space", p(&s3)]));
    assert_eq!(r["necessity"]["bounded"], "yes");
    assert!((f(&r["necessity"]["eta"]) - 0.25 / 64.0).abs() < 1e-18);
    assert_eq!(r["necessity"]["obstruction"]["min_n"].as_u64(), Some(8));
    assert_eq!(f(&r["summary"]["b_s"]), 3.0);
}

#[test]
fn thread_count_from_environment() {
    let dir = TempDir::new().unwrap();
    let s2 = unit_space(&dir, 2);
    let a = bin()
        .env("HERMITE_QUAD_THREADS", "1")
        .args(["wce", "--space", p(&s2), "--m", "3,4"])
        .output()
        .unwrap();
    let b = bin()
        .env("HERMITE_QUAD_THREADS", "4")
        .args(["wce", "--space", p(&s2), "--m", "3,4"])
        .output()
        .unwrap();
    assert!(a.status.success() && b.status.success());
    assert_eq!(a.stdout, b.stdout);
    let bad = bin()
        .env("HERMITE_QUAD_THREADS", "zero")
        .args(["nodes", "--n", "2"])
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}
