use std::path::Path;
use std::process::{Command, Output};

use fdx::numerics::{quad_adaptive, Tolerances};
use fdx::weight::BumpSpec;
use serde_json::Value;

fn fdx(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fdx"))
        .args(args)
        .current_dir(cwd)
        .env_remove("FDX_OUT")
        .output()
        .expect("run fdx")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

const PARAMS: [&str; 6] = ["--n", "3", "--m", "0.2", "--gamma", "4"];

fn with_params<'a>(cmd: &'a str, rest: &[&'a str]) -> Vec<&'a str> {
    let mut v = vec![cmd];
    v.extend_from_slice(&PARAMS);
    v.extend_from_slice(rest);
    v
}

#[test]
fn profile_hits_requested_origin_coefficient() {
    let dir = tempfile::tempdir().unwrap();
    let out = fdx(&with_params("profile", &["--eta", "1", "--out", "p"]), dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = read_json(&dir.path().join("p/summary.json"));
    let eta = summary["eta_origin"].as_f64().unwrap();
    assert!((eta - 1.0).abs() < 1e-8, "eta_origin = {eta}");
    let manifest = read_json(&dir.path().join("p/manifest.json"));
    assert_eq!(manifest["command"], "profile");
    assert!((manifest["constants"]["alpha"].as_f64().unwrap() + 10.0 / 3.0).abs() < 1e-12);
    let csv = std::fs::read_to_string(dir.path().join("p/profile.csv")).unwrap();
    assert!(csv.starts_with("s,r,h,wt,f,rfr_over_f\n"));
}

/// `1/a4 = ∫₁^∞ s^{1−n} I(s) ds`, `I(s) = ∫₁^s ρ^{n−1}η₁`, with the exact power tail beyond 2.
fn a4_oracle(mu: f64, n: usize) -> f64 {
    let spec = BumpSpec::new(mu, n).unwrap();
    let tol = |v: f64| Tolerances::uniform(v, 100_000).unwrap();
    let ni = n as i32;
    let nf = n as f64;
    let inner = |s: f64| quad_adaptive(|x: f64| x.powi(ni - 1) * spec.eta1(x), 1.0, s, &tol(1e-14)).unwrap().value;
    let head = quad_adaptive(|s: f64| s.powi(1 - ni) * inner(s), 1.0, 2.0, &tol(1e-13)).unwrap().value;
    let c = inner(2.0) - mu * 2f64.powf(nf - 2.0 - mu);
    let tail = c * 2f64.powf(2.0 - nf) / (nf - 2.0) + 2f64.powf(-mu);
    1.0 / (head + tail)
}

#[test]
fn weight_header_matches_quadrature() {
    let dir = tempfile::tempdir().unwrap();
    let out = fdx(&["weight", "--mu", "0.5", "--n", "3", "--points", "50", "--out", "w"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("w/weight.csv")).unwrap();
    let header = text.lines().next().unwrap();
    let a4: f64 = header
        .trim_start_matches("# ")
        .split_whitespace()
        .find_map(|kv| kv.strip_prefix("a4="))
        .unwrap()
        .parse()
        .unwrap();
    let want = a4_oracle(0.5, 3);
    assert!((a4 - want).abs() < 1e-8, "a4 = {a4}, oracle {want}");
    assert_eq!(text.lines().nth(1), Some("r,phi,dphi"));
    assert_eq!(text.lines().count(), 52);
}

#[test]
fn weight_exponent_out_of_range_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = fdx(&["weight", "--mu", "1", "--n", "3", "--out", "w"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("w").exists());
}

#[test]
fn missing_parameter_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = fdx(&["profile", "--m", "0.2", "--gamma", "4", "--out", "p"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "ConfigError");
    assert_eq!(err["exit_code"], 2);
    assert!(err["message"].as_str().unwrap().contains("--n"));
    assert!(!dir.path().join("p").exists());
}

#[test]
fn degenerate_exponent_reported() {
    let dir = tempfile::tempdir().unwrap();
    let out = fdx(&["profile", "--n", "3", "--m", "0.2", "--gamma", "2.5", "--out", "p"], dir.path());
    assert_ne!(out.status.code(), Some(0));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "DegenerateError");
}

#[test]
fn malformed_config_file() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("cfg.json"), "{ \"params\": { \"n\": 3, \"bogus\": 1 } }").unwrap();
    let out = fdx(&["profile", "--config", "cfg.json", "--m", "0.2", "--gamma", "4"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_file_supplies_parameters() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("cfg.json"), r#"{ "params": { "n": 3, "m": 0.2, "gamma": 4 }, "out": "from-file" }"#).unwrap();
    let out = fdx(&["expansion", "--config", "cfg.json"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = read_json(&dir.path().join("from-file/expansion.json"));
    let d1 = report["expansion"]["d1"].as_f64().unwrap();
    let d1_ref = report["expansion"]["d1_ref"].as_f64().unwrap();
    assert!((d1 - d1_ref).abs() < 1e-6);
}

#[test]
fn json_outputs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    for out in ["a", "b"] {
        let o = fdx(&with_params("contract", &["--pairs", "2", "--samples", "4", "--t-end", "1.5", "--seed", "7", "--out", out]), dir.path());
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for name in ["manifest.json", "summary.json", "contract.csv"] {
        let a = std::fs::read(dir.path().join("a").join(name)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between runs");
    }
}

#[test]
fn environment_overrides_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_fdx"))
        .args(["weight", "--mu", "0.5", "--n", "3", "--points", "10", "--out", "flag"])
        .current_dir(dir.path())
        .env("FDX_OUT", "env")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(dir.path().join("env/weight.csv").exists());
    assert!(!dir.path().join("flag").exists());
}

#[test]
fn converge_distance_decreases() {
    let dir = tempfile::tempdir().unwrap();
    let out = fdx(&with_params("converge", &["--tau-max", "1", "--cells", "200", "--out", "v"]), dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = read_json(&dir.path().join("v/summary.json"));
    assert!(summary["final_over_initial"].as_f64().unwrap() < 0.5);
    assert!(summary["min_sandwich_margin"].as_f64().unwrap() > 0.0);
}

#[test]
fn evolve_tracks_exact_solution() {
    let dir = tempfile::tempdir().unwrap();
    let out = fdx(&with_params("evolve", &["--t-end", "1.5", "--samples", "3", "--out", "e"]), dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("e/evolve.csv")).unwrap();
    for line in text.lines().skip(1) {
        let l1: f64 = line.split(',').nth(2).unwrap().parse().unwrap();
        assert!(l1 < 1e-3, "{line}");
    }
}
