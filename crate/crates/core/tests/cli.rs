use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_batchsched"));
    c.env_remove("BATCHSCHED_ORACLE_CAP");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_string_lossy().into_owned()
}

fn gen(dir: &Path, name: &str, args: &[&str]) -> String {
    let out_path = path(dir, name);
    let mut full = vec!["gen"];
    full.extend_from_slice(args);
    full.extend_from_slice(&["--out", &out_path]);
    let out = run(&full);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    out_path
}

fn small(dir: &Path) -> String {
    gen(dir, "s.json", &["--n", "2", "--m", "3", "--k", "3", "--r", "1", "--kind", "dti", "--seed", "4"])
}

fn read_json(p: &str) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

const SCALAR: &str = r#"{
  "kind": "discrete_time_invariant",
  "state_dim": 1,
  "dynamics": [[1.0]],
  "noise_input": [[1.0]],
  "process_noise_cov": [[1.0]],
  "initial_state_cov": [[1.0]],
  "measurement_times": [0],
  "sensors": [{"C": [[1.0]], "V": [[1.0]]}],
  "budgets": [1]
}"#;

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = path(dir, name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn gen_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["--n", "3", "--m", "2", "--k", "4", "--r", "1", "--seed", "12"];
    let a = gen(dir.path(), "a.json", &args);
    let b = gen(dir.path(), "b.json", &args);
    assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
}

#[test]
fn gen_rejects_bad_arguments() {
    assert_eq!(code(&run(&["gen", "--n", "0", "--m", "2", "--k", "2", "--r", "1", "--seed", "1"])), 2);
    assert_eq!(code(&run(&["gen", "--n", "2", "--m", "2", "--k", "2", "--r", "3", "--seed", "1"])), 2);
    assert_eq!(code(&run(&["gen", "--n", "2", "--m", "2", "--k", "2", "--r", "1"])), 2);
    assert_eq!(
        code(&run(&["gen", "--n", "2", "--m", "2", "--k", "2", "--r", "1", "--seed", "1", "--kind", "x"])),
        2
    );
}

#[test]
fn every_algorithm_runs() {
    let dir = tempfile::tempdir().unwrap();
    let s = small(dir.path());
    let mut objectives = Vec::new();
    for alg in ["greedy", "lazy-greedy", "brute", "random", "empty"] {
        let r = path(dir.path(), &format!("{alg}.json"));
        let out = run(&["schedule", "--config", &s, "--algorithm", alg, "--seed", "3", "--out", &r]);
        assert_eq!(code(&out), 0, "{alg}: {}", String::from_utf8_lossy(&out.stderr));
        let v = read_json(&r);
        assert_eq!(v["algorithm"], alg);
        let sched = v["schedule"].as_array().unwrap();
        assert_eq!(sched.len(), 3);
        assert!(sched.iter().all(|t| t.as_array().unwrap().len() <= 1));
        objectives.push(v["objective"].as_f64().unwrap());
    }
    assert_eq!(objectives[0], objectives[1]);
    assert!(objectives[2] <= objectives[0]);
    let empty = read_json(&path(dir.path(), "empty.json"));
    assert_eq!(empty["objective"], empty["bounds"]["prior_objective"]);
}

#[test]
fn random_needs_seed() {
    let dir = tempfile::tempdir().unwrap();
    let s = small(dir.path());
    assert_eq!(code(&run(&["schedule", "--config", &s, "--algorithm", "random"])), 2);
}

#[test]
fn report_to_stdout_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let s = small(dir.path());
    let csv = path(dir.path(), "trace.csv");
    let out = run(&["schedule", "--config", &s, "--csv", &csv]);
    assert_eq!(code(&out), 0);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let rows = std::fs::read_to_string(csv).unwrap();
    assert_eq!(rows.lines().count(), 1 + v["trace"].as_array().unwrap().len());
    assert!(v.get("timing").is_none());
    let timed = run(&["schedule", "--config", &s, "--timing"]);
    let v: Value = serde_json::from_slice(&timed.stdout).unwrap();
    assert!(v["timing"]["algorithm"].as_f64().unwrap() >= 0.0);
}

#[test]
fn invalid_config_names_path() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.json", &SCALAR.replace(r#""C": [[1.0]]"#, r#""C": [[1.0, 2.0]]"#));
    let out = run(&["schedule", "--config", &bad]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("sensors[0].C"));

    let typo = write(dir.path(), "typo.json", &SCALAR.replace("\"budgets\": [1]", "\"budgets\": [\"x\"]"));
    let out = run(&["schedule", "--config", &typo]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("budgets[0]"));

    let npd = write(dir.path(), "npd.json", &SCALAR.replace(r#""V": [[1.0]]"#, r#""V": [[0.0]]"#));
    let out = run(&["schedule", "--config", &npd]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("V_1"));

    assert_eq!(code(&run(&["schedule", "--config", &path(dir.path(), "missing.json")])), 2);
}

#[test]
fn caps_give_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let s = small(dir.path());
    for cmd in [vec!["schedule", "--algorithm", "brute"], vec!["certify"]] {
        let mut args = cmd.clone();
        args.extend_from_slice(&["--config", &s]);
        let out = bin().args(&args).env("BATCHSCHED_ORACLE_CAP", "enum=5").output().unwrap();
        assert_eq!(code(&out), 3, "{cmd:?}");
    }
    let out = bin()
        .args(["bounds", "--config", &s])
        .env("BATCHSCHED_ORACLE_CAP", "dense=2")
        .output()
        .unwrap();
    assert_eq!(code(&out), 3);
    let out = bin()
        .args(["schedule", "--config", &s])
        .env("BATCHSCHED_ORACLE_CAP", "nonsense")
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);
}

#[test]
fn certify_small_and_zero_budget() {
    let dir = tempfile::tempdir().unwrap();
    let s = small(dir.path());
    let c = path(dir.path(), "c.json");
    assert_eq!(code(&run(&["certify", "--config", &s, "--out", &c])), 0);
    let v = read_json(&c);
    assert!(v["ratio"].as_f64().unwrap() <= 0.5);
    assert!(v["opt_value"].as_f64().unwrap() <= v["greedy_value"].as_f64().unwrap());

    let z = gen(dir.path(), "z.json", &["--n", "2", "--m", "3", "--k", "2", "--r", "0", "--seed", "1"]);
    let out = run(&["certify", "--config", &z]);
    assert_eq!(code(&out), 0);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["ratio"].as_f64().unwrap(), 0.0);
}

#[test]
fn scalar_bounds() {
    let dir = tempfile::tempdir().unwrap();
    let s = write(dir.path(), "scalar.json", SCALAR);
    let out = run(&["bounds", "--config", &s, "--alpha", "0.5"]);
    assert_eq!(code(&out), 0);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["lower_bound"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    assert!((v["greedy_trace"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    assert!((v["min_sensors"].as_f64().unwrap() - 1.0).abs() < 1e-12);

    let out = run(&["bounds", "--config", &s, "--alpha", "1.0"]);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["min_sensors"].as_f64().unwrap() <= 0.0);

    let out = run(&["bounds", "--config", &s]);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v.get("min_sensors").is_none());

    assert_eq!(code(&run(&["bounds", "--config", &s, "--alpha", "-1"])), 2);
}

#[test]
fn fuzz_reports() {
    let dir = tempfile::tempdir().unwrap();
    let s = small(dir.path());
    for prop in ["mono", "super"] {
        let f = path(dir.path(), &format!("{prop}.json"));
        let args = ["fuzz", "--config", &s, "--property", prop, "--trials", "200", "--seed", "5", "--out", &f];
        assert_eq!(code(&run(&args)), 0);
        let v = read_json(&f);
        assert_eq!(v["trials"], 200);
        assert_eq!(v["violation_count"], 0);
        let again = run(&args[..args.len() - 2]);
        assert_eq!(again.stdout, std::fs::read(&f).unwrap());
    }
    assert_eq!(code(&run(&["fuzz", "--config", &s, "--property", "other", "--seed", "1"])), 2);
}

#[test]
fn unknown_subcommand_is_usage_error() {
    assert_eq!(code(&run(&["frobnicate"])), 2);
    assert_eq!(code(&run(&["--help"])), 0);
}

#[test]
fn atomic_write_leaves_no_temp_files() {
    let dir = tempfile::tempdir().unwrap();
    let s = small(dir.path());
    let r = path(dir.path(), "r.json");
    assert_eq!(code(&run(&["schedule", "--config", &s, "--out", &r])), 0);
    let names: Vec<PathBuf> = std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(names.len(), 2, "{names:?}");
}

#[test]
fn bundled_scenarios_load() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    for entry in std::fs::read_dir(dir).unwrap() {
        let p = entry.unwrap().path();
        let model = batchsched::load_scenario(&p).unwrap();
        assert!(batchsched::build_evaluator(&model).is_ok(), "{}", p.display());
    }
}
