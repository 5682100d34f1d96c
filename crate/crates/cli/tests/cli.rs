use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cqoverlap::linalg::DensityMatrix;
use cqoverlap::CQChannel;
use serde_json::{json, Value};
use tempfile::TempDir;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_cqoverlap"));
    cmd.env_remove("CQOVERLAP_THREADS");
    cmd
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn report(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("report is JSON")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn write_instance(dir: &TempDir, name: &str, ch: &CQChannel) -> PathBuf {
    let path = dir.path().join(name);
    let body = json!({ "schema_version": 1, "channel": ch });
    std::fs::write(&path, serde_json::to_string(&body).unwrap()).unwrap();
    path
}

fn write_json(dir: &TempDir, name: &str, body: &Value) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, body.to_string()).unwrap();
    path
}

fn strip_wall_time(mut v: Value) -> Value {
    v.as_object_mut().unwrap().remove("wall_time");
    v
}

#[test]
fn gen_is_valid_and_deterministic() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for path in [&a, &b] {
        let out = run(&["gen", "--n", "2", "--d", "2", "--seed", "1", "--out", p(path)]);
        report(&out);
    }
    let text_a = std::fs::read(&a).unwrap();
    assert_eq!(text_a, std::fs::read(&b).unwrap());

    let file: Value = serde_json::from_slice(&text_a).unwrap();
    assert_eq!(file["schema_version"], 1);
    assert_eq!(file["provenance"]["seed"], 1);
    let ch: CQChannel = serde_json::from_value(file["channel"].clone()).unwrap();
    assert_eq!((ch.n(), ch.d()), (2, 2));
    assert_eq!(ch, CQChannel::random(2, 2, 1).unwrap());

    let out = run(&["validate", "--instance", p(&a)]);
    assert_eq!(report(&out)["results"]["valid"], true);
}

#[test]
fn gen_rejects_single_input() {
    let dir = TempDir::new().unwrap();
    let out = run(&["gen", "--n", "1", "--d", "2", "--out", p(&dir.path().join("x.json"))]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("n >= 2"));
}

#[test]
fn solve_closed_on_basis_channel() {
    let dir = TempDir::new().unwrap();
    let path = write_instance(&dir, "basis.json", &CQChannel::basis(3).unwrap());
    let r = report(&run(&["solve", "--instance", p(&path), "--method", "closed", "--direction", "min"]));
    assert_eq!(r["results"]["value"], 0.0);
    assert_eq!(r["results"]["pair"], json!([1, 2]));
    assert_eq!(r["results"]["witness_attains"], true);
    assert!(r["results"]["tolerance"].is_number());

    let r = report(&run(&["solve", "--instance", p(&path), "--direction", "max"]));
    assert_eq!(r["results"]["value"], 0.5);
}

#[test]
fn solve_oracle_matches_closed_form() {
    let dir = TempDir::new().unwrap();
    let inst = dir.path().join("seed13.json");
    report(&run(&["gen", "--n", "5", "--d", "3", "--seed", "13", "--out", p(&inst)]));
    let r = report(&run(&["solve", "--instance", p(&inst), "--method", "oracle", "--restarts", "200"]));
    assert!(r["results"]["gap"].as_f64().unwrap().abs() <= 1e-6);
    assert_eq!(r["results"]["agrees"], true);
    assert_eq!(r["results"]["tolerance"], 1e-6);

    let cfg = dir.path().join("opt.toml");
    std::fs::write(&cfg, "restarts = 32\nmax_iters = 500\n").unwrap();
    let r = report(&run(&["solve", "--instance", p(&inst), "--method", "oracle", "--direction", "max", "--config", p(&cfg)]));
    assert_eq!(r["results"]["config"]["restarts"], 32);
    assert!(r["results"]["gap"].as_f64().unwrap().abs() <= 1e-6);

    std::fs::write(&cfg, "restart = 32\n").unwrap();
    let out = run(&["solve", "--instance", p(&inst), "--method", "oracle", "--config", p(&cfg)]);
    assert_eq!(code(&out), 2);
}

#[test]
fn solve_grid_limits() {
    let dir = TempDir::new().unwrap();
    let big = write_instance(&dir, "n4.json", &CQChannel::random(4, 2, 3).unwrap());
    let out = run(&["solve", "--instance", p(&big), "--method", "grid"]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("capacity"));

    let small = write_instance(&dir, "n3.json", &CQChannel::random(3, 2, 19).unwrap());
    let r = report(&run(&["solve", "--instance", p(&small), "--method", "grid", "--resolution", "100"]));
    assert!(r["results"]["gap"].as_f64().unwrap().abs() <= 5e-3);
}

#[test]
fn invalid_instances_exit_3() {
    let dir = TempDir::new().unwrap();
    let bad_trace = json!({
        "schema_version": 1,
        "channel": { "n": 2, "d": 2, "sigmas": [
            [[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [1.0, 0.0]]],
            [[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.0, 0.0]]]
        ]}
    });
    let path = write_json(&dir, "bad.json", &bad_trace);
    for args in [vec!["validate", "--instance", p(&path)], vec!["solve", "--instance", p(&path)]] {
        let out = run(&args);
        assert_eq!(code(&out), 3);
        assert!(String::from_utf8_lossy(&out.stderr).contains("trace is 2"));
    }

    let mut wrong_schema = bad_trace.clone();
    wrong_schema["schema_version"] = json!(2);
    wrong_schema["channel"] = json!(CQChannel::basis(2).unwrap());
    let path = write_json(&dir, "schema.json", &wrong_schema);
    assert_eq!(code(&run(&["validate", "--instance", p(&path)])), 3);

    let missing = dir.path().join("missing.json");
    assert_eq!(code(&run(&["solve", "--instance", p(&missing)])), 3);
}

#[test]
fn reduce_examples() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("so.json");
    let table = write_json(&dir, "t1.json", &json!({ "0": 1.0, "1": 0.0 }));
    let r = report(&run(&["reduce", "--kind", "so", "--table", p(&table), "--out", p(&out)]));
    let gap = &r["results"]["gap_report"];
    assert_eq!(gap["verdict"], "yes-like");
    assert_eq!(gap["yes_value"], 0.0);
    let file: Value = serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
    assert_eq!(file["channel"]["d"], 4);

    let zeros = write_json(&dir, "t2.json", &json!({ "bits": 2, "probs": { "00": 0.0, "01": 0.0, "10": 0.0, "11": 0.0 } }));
    let r = report(&run(&["reduce", "--kind", "lo", "--table", p(&zeros), "--out", p(&dir.path().join("lo.json"))]));
    assert_eq!(r["results"]["gap_report"]["yes_value"], 0.5);

    let one = write_json(&dir, "t3.json", &json!({ "0": 1.0 }));
    let r = report(&run(&["reduce", "--kind", "lo", "--table", p(&one), "--out", p(&dir.path().join("lo1.json"))]));
    let gap = &r["results"]["gap_report"];
    assert_eq!(gap["yes_value"], 0.625);
    assert_eq!(gap["implicit_zeros"], 1);
    assert_eq!(gap["verdict"], "yes-like");

    let bad = write_json(&dir, "t4.json", &json!({ "0": 1.5 }));
    let out = run(&["reduce", "--kind", "so", "--table", p(&bad), "--out", p(&dir.path().join("x.json"))]);
    assert_eq!(code(&out), 3);
    assert_eq!(code(&run(&["validate", "--table", p(&bad)])), 3);

    let out = run(&["reduce", "--kind", "so", "--table", p(&table), "--out", p(&dir.path().join("x.json")), "--c", "0.4", "--s", "0.5"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn conjecture_scans() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("k2.csv");
    let out = run(&["conjecture", "--n", "4", "--d", "2", "--k", "2", "--instances", "20", "--tuples", "20", "--seed", "5", "--out-csv", p(&csv)]);
    assert_eq!(code(&out), 0);
    let r = report(&out);
    assert_eq!(r["results"]["candidates"], json!([]));
    assert!(r["results"]["min_margin"].as_f64().unwrap() >= -1e-9);

    let csv = dir.path().join("k3.csv");
    let out = run(&["conjecture", "--n", "5", "--d", "3", "--k", "3", "--instances", "10", "--tuples", "10", "--seed", "101", "--out-csv", p(&csv)]);
    assert_eq!(code(&out), 0);
    let mut reader = csv::Reader::from_path(&csv).unwrap();
    assert_eq!(
        reader.headers().unwrap().iter().collect::<Vec<_>>(),
        ["instance_seed", "n", "d", "k", "lhs", "rhs", "margin"]
    );
    assert_eq!(reader.records().count(), 10);

    let bad = dir.path().join("no/such/dir/out.csv");
    let out = run(&["conjecture", "--n", "5", "--d", "3", "--k", "3", "--instances", "10", "--tuples", "10", "--out-csv", p(&bad)]);
    assert_eq!(code(&out), 2);

    let out = run(&["conjecture", "--n", "3", "--d", "3", "--k", "4", "--instances", "1", "--tuples", "1", "--out-csv", p(&csv)]);
    assert_eq!(code(&out), 2);
}

#[test]
fn swaptest_examples() {
    let dir = TempDir::new().unwrap();
    let path = write_instance(&dir, "basis.json", &CQChannel::basis(3).unwrap());
    let r = report(&run(&["swaptest", "--instance", p(&path), "--i", "1", "--j", "2", "--shots", "100000", "--seed", "3"]));
    let so = &r["results"]["so"];
    let lo = &r["results"]["lo"];
    assert_eq!(so["exact_accept"], 0.5);
    assert!((lo["exact_accept"].as_f64().unwrap() - 0.75).abs() < 1e-15);
    for entry in [so, lo] {
        let exact = entry["exact_accept"].as_f64().unwrap();
        let empirical = entry["empirical_accept"].as_f64().unwrap();
        let sigma = (exact * (1.0 - exact) / 100_000.0).sqrt();
        assert!((empirical - exact).abs() <= 5.0 * sigma);
        assert_eq!(entry["within_tolerance"], true);
    }

    assert_eq!(code(&run(&["swaptest", "--instance", p(&path), "--i", "2", "--j", "2"])), 2);
    assert_eq!(code(&run(&["swaptest", "--instance", p(&path), "--i", "1", "--j", "4"])), 2);

    let mixed = CQChannel::new(vec![DensityMatrix::maximally_mixed(2).unwrap(); 2]).unwrap();
    let path = write_instance(&dir, "mixed.json", &mixed);
    let r = report(&run(&["swaptest", "--instance", p(&path), "--i", "1", "--j", "2", "--verifier", "so"]));
    assert_eq!(r["results"]["so"]["exact_accept"], 0.25);
    assert!(r["results"].get("lo").is_none());
}

#[test]
fn reports_are_deterministic() {
    let dir = TempDir::new().unwrap();
    let inst = dir.path().join("i.json");
    report(&run(&["gen", "--n", "4", "--d", "3", "--seed", "9", "--out", p(&inst)]));
    for args in [
        vec!["solve", "--instance", p(&inst), "--method", "oracle", "--restarts", "16", "--seed", "2"],
        vec!["swaptest", "--instance", p(&inst), "--i", "1", "--j", "3", "--shots", "5000", "--seed", "4"],
    ] {
        let a = strip_wall_time(report(&run(&args)));
        let b = strip_wall_time(report(&run(&args)));
        assert_eq!(a, b);
    }
    let threaded = bin()
        .args(["solve", "--instance", p(&inst), "--method", "oracle", "--restarts", "16", "--seed", "2"])
        .env("CQOVERLAP_THREADS", "1")
        .output()
        .unwrap();
    let single = strip_wall_time(report(&threaded));
    let multi = strip_wall_time(report(&run(&["solve", "--instance", p(&inst), "--method", "oracle", "--restarts", "16", "--seed", "2"])));
    assert_eq!(single, multi);

    let bad = bin().args(["validate", "--instance", p(&inst)]).env("CQOVERLAP_THREADS", "zero").output().unwrap();
    assert_eq!(code(&bad), 2);
}

#[test]
fn closed_solve_round_trip() {
    let dir = TempDir::new().unwrap();
    let first = dir.path().join("first.json");
    report(&run(&["gen", "--n", "6", "--d", "4", "--seed", "77", "--out", p(&first)]));
    let a = report(&run(&["solve", "--instance", p(&first), "--direction", "max"]));

    let file: Value = serde_json::from_slice(&std::fs::read(&first).unwrap()).unwrap();
    let ch: CQChannel = serde_json::from_value(file["channel"].clone()).unwrap();
    let second = write_instance(&dir, "second.json", &ch);
    let b = report(&run(&["solve", "--instance", p(&second), "--direction", "max"]));
    assert_eq!(a["results"], b["results"]);
}

#[test]
fn json_out_and_tolerance_flags() {
    let dir = TempDir::new().unwrap();
    let path = write_instance(&dir, "basis.json", &CQChannel::basis(3).unwrap());
    let saved = dir.path().join("report.json");
    let out = run(&["solve", "--instance", p(&path), "--tol", "1e-9", "--json-out", p(&saved)]);
    let printed = report(&out);
    let written: Value = serde_json::from_slice(&std::fs::read(&saved).unwrap()).unwrap();
    assert_eq!(printed, written);
    assert_eq!(written["results"]["tolerance"], 1e-9);
    assert_eq!(written["tool_version"], env!("CARGO_PKG_VERSION"));

    assert_eq!(code(&run(&["solve", "--instance", p(&path), "--tol", "-1"])), 2);
    assert_eq!(code(&run(&["validate", "--instance", p(&path), "--tol", "1e-3"])), 2);
    let nowhere = dir.path().join("missing/report.json");
    assert_eq!(code(&run(&["solve", "--instance", p(&path), "--json-out", p(&nowhere)])), 2);
    assert_eq!(code(&run(&["solve"])), 2);
}
