use std::path::Path;
use std::process::{Command, Output};

use gerbe_sym::cech::Sampling;
use gerbe_sym::gerbe::GerbeDataset;
use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gerbe-sym")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn report(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn strip_timing(mut v: Value) -> Value {
    for r in v["records"].as_array_mut().unwrap() {
        r["wall_time_ms"] = Value::Null;
    }
    v
}

/// Every trigonometric coefficient in the dataset.
fn coefficients(v: &Value, out: &mut Vec<f64>) {
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                if (k == "a" || k == "b") && x.is_number() {
                    out.push(x.as_f64().unwrap());
                } else {
                    coefficients(x, out);
                }
            }
        }
        Value::Array(xs) => xs.iter().for_each(|x| coefficients(x, out)),
        _ => {}
    }
}

#[test]
fn generate_is_deterministic_and_loads_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    assert_eq!(code(&run(&["generate", "--seed", "1", "--out", path(&a)])), 0);
    assert_eq!(code(&run(&["generate", "--seed", "1", "--out", path(&b)])), 0);
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    let d = GerbeDataset::from_json(&text).unwrap();
    assert_eq!(d.to_json(), text);
    d.load_checked(Sampling::new(20, 3), 1e-8).unwrap();
}

#[test]
fn trivial_preset_has_zero_tables() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("t.json");
    assert_eq!(code(&run(&["generate", "--trivial", "--preset", "t1", "--out", path(&p)])), 0);
    let mut cs = Vec::new();
    coefficients(&report(&p), &mut cs);
    assert!(cs.iter().all(|c| *c == 0.0));
}

#[test]
fn verify_passes_and_reports_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    let args = ["verify", "--suite", "gerbe,courant", "--samples", "20", "--format", "json", "--out"];
    let first = run(&[&args[..], &[path(&a)]].concat());
    assert_eq!(code(&first), 0, "{}", String::from_utf8_lossy(&first.stderr));
    assert_eq!(code(&run(&[&args[..], &[path(&b)]].concat())), 0);
    let (ra, rb) = (report(&a), report(&b));
    assert_eq!(ra["schema"], 1);
    assert_eq!(ra["pass"], true);
    assert_eq!(strip_timing(ra), strip_timing(rb));
}

#[test]
fn impossible_tolerance_fails_with_exit_one() {
    let o = run(&["verify", "--suite", "cech", "--samples", "10", "--tol", "cech.solve_coboundary=1e-30"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL cech.solve_coboundary"));
}

#[test]
fn zeroed_connection_entry_breaks_the_connective_invariant() {
    let dir = tempfile::tempdir().unwrap();
    let (good, bad, out) = (dir.path().join("g.json"), dir.path().join("b.json"), dir.path().join("r.json"));
    assert_eq!(code(&run(&["generate", "--out", path(&good)])), 0);
    let mut d = GerbeDataset::from_json(&std::fs::read_to_string(&good).unwrap()).unwrap();
    let dim = d.cover.dim;
    d.a[0].value = gerbe_sym::geometry::TrigForm::zero(dim, 1);
    std::fs::write(&bad, d.to_json()).unwrap();
    let o = run(&["verify", "--dataset", path(&bad), "--suite", "gerbe", "--samples", "20", "--format", "json", "--out", path(&out)]);
    assert_eq!(code(&o), 1);
    let r = report(&out);
    let rec = r["records"].as_array().unwrap().iter().find(|x| x["name"] == "gerbe.connective").unwrap().clone();
    assert_eq!(rec["pass"], false);
    let ok = run(&["verify", "--dataset", path(&good), "--suite", "gerbe", "--samples", "20"]);
    assert_eq!(code(&ok), 0);
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"preset":"t1","colour":"blue"}"#).unwrap();
    assert_eq!(code(&run(&["verify", "--config", path(&cfg)])), 2);
    assert_eq!(code(&run(&["verify", "--splits", "1"])), 2);
    assert_eq!(code(&run(&["verify", "--suite", "nonsense"])), 2);
    assert_eq!(code(&run(&["verify", "--tol", "cech.delta_squared"])), 2);
    assert_eq!(code(&run(&["verify", "--dataset", path(&dir.path().join("missing.json"))])), 2);
    assert_eq!(code(&run(&["frobnicate"])), 2);
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let (cfg, out) = (dir.path().join("c.json"), dir.path().join("r.json"));
    std::fs::write(&cfg, r#"{"preset":"t1","seed":5,"samples":7,"suites":["cech"]}"#).unwrap();
    let o = run(&["verify", "--config", path(&cfg), "--seed", "9", "--format", "json", "--out", path(&out)]);
    assert_eq!(code(&o), 0);
    let r = report(&out);
    assert_eq!(r["config"]["seed"], 9);
    assert_eq!(r["config"]["samples"], 7);
    assert_eq!(r["config"]["preset"], "t1");
}

#[test]
fn flow_runs_only_the_flow_identities() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let o = run(&["flow", "--preset", "t1", "--flow-points", "4", "--format", "json", "--out", path(&out)]);
    assert_eq!(code(&o), 0);
    let r = report(&out);
    let names: Vec<&str> = r["records"].as_array().unwrap().iter().map(|x| x["name"].as_str().unwrap()).collect();
    assert_eq!(names.len(), 9);
    assert!(names.iter().all(|n| n.starts_with("flows.")));
}
