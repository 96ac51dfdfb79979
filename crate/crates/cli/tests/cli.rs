use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

use oscillab::fixtures;
use oscillab::io::read_grid;

fn oscillab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_oscillab"))
        .args(args)
        .env_remove("OSCILLAB_THREADS")
        .output()
        .expect("binary runs")
}

fn with_threads(threads: &str, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_oscillab"))
        .args(args)
        .env("OSCILLAB_THREADS", threads)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn fixture_files_round_trip_bit_exactly() {
    let dir = TempDir::new().unwrap();
    let expected = fixtures::generate("step:n=256,a=1").unwrap().function;
    for name in ["step.csv", "step.json"] {
        let path = dir.path().join(name);
        let out = oscillab(&["fixture", "--descriptor", "step:n=256,a=1", "--out", path_str(&path)]);
        assert_eq!(out.status.code(), Some(0));
        assert_eq!(read_grid(&path).unwrap(), expected);
    }
}

#[test]
fn log_singular_peak_and_half_cell_note() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("log.csv");
    let out = oscillab(&["fixture", "--descriptor", "log_singular:n=255", "--out", path_str(&path), "--json", "-"]);
    assert_eq!(out.status.code(), Some(0));
    let record = stdout_json(&out);
    assert!(!record["fixtures"][0]["notes"].as_array().unwrap().is_empty());
    let u = read_grid(&path).unwrap();
    let h = u.domain.spacing;
    let peak = u.values.iter().cloned().fold(f64::MIN, f64::max);
    assert!((peak - (h / 2.0).ln().abs()).abs() < 1e-12);
}

#[test]
fn random_fixture_follows_its_seed() {
    let dir = TempDir::new().unwrap();
    let write = |name: &str, seed: &str| {
        let path = dir.path().join(name);
        let d = format!("random_piecewise:dim=2,n=32,seed={seed}");
        assert!(oscillab(&["fixture", "--descriptor", &d, "--out", path_str(&path)]).status.success());
        std::fs::read(path).unwrap()
    };
    assert_eq!(write("a.csv", "7"), write("b.csv", "7"));
    assert_ne!(write("a.csv", "7"), write("c.csv", "8"));
}

#[test]
fn exact_suite_passes_on_shipped_fixtures() {
    let dir = TempDir::new().unwrap();
    let report = dir.path().join("report.json");
    let out = oscillab(&["interp-check", "--suite", "exact", "--out", path_str(&report)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let record: Value = serde_json::from_str(&std::fs::read_to_string(report).unwrap()).unwrap();
    assert_eq!(record["fixtures"].as_array().unwrap().len(), fixtures::FixtureFamily::ALL.len());
    assert!(record["reports"].as_array().unwrap().iter().all(|r| r["pass"] == Value::Bool(true)));
    assert_eq!(record["tolerances"]["exact"], serde_json::json!(1e-9));
}

#[test]
fn malformed_header_exits_two_naming_the_line() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("bad.csv");
    std::fs::write(&path, "dim,1\ncels,3\norigin,0\nspacing,1\n1,2,3\n").unwrap();
    let out = oscillab(&["norm", "--input", path_str(&path), "--p", "2"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
    let out = oscillab(&["norm", "--input", path_str(&dir.path().join("missing.csv")), "--p", "2"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn diagonal_lorentz_norm_matches_lebesgue() {
    let value = |extra: &[&str]| {
        let mut args = vec!["norm", "--fixture", "gaussian_bump:n=1000", "--p", "2", "--json", "-"];
        args.extend_from_slice(extra);
        let out = oscillab(&args);
        assert!(out.status.success());
        stdout_json(&out)["reports"][0]["lhs"].as_f64().unwrap()
    };
    let plain = value(&[]);
    let lorentz = value(&["--gamma", "2"]);
    assert!((plain - lorentz).abs() <= 1e-12 * plain, "{plain} vs {lorentz}");
}

#[test]
fn output_is_identical_across_thread_counts() {
    let runs = [
        vec!["interp-check", "--suite", "ratio", "--family", "step,log_singular,constant", "--json", "-"],
        vec!["jump-detect", "--shape", "disk2d:a=1,r=0.3,n=128", "--mode", "kernel", "--eps", "0.2:0.05:geometric", "--json", "-"],
        vec!["bmo", "--fixture", "random_piecewise:dim=2,n=48,seed=3", "--json", "-"],
    ];
    for args in runs {
        let one = with_threads("1", &args);
        let many = with_threads("4", &args);
        let auto = with_threads("auto", &args);
        assert!(one.status.success());
        assert_eq!(one.stdout, many.stdout, "{args:?}");
        assert_eq!(one.stdout, auto.stdout, "{args:?}");
    }
}

#[test]
fn run_record_carries_provenance() {
    let out = oscillab(&["sobolev", "--fixture", "gaussian_bump:n=1024", "--s", "1", "--p", "2", "--seed", "11", "--json", "-"]);
    assert_eq!(out.status.code(), Some(0));
    let r = stdout_json(&out);
    assert_eq!(r["toolkit_version"], oscillab::VERSION);
    assert_eq!(r["seed"], 11);
    assert_eq!(r["tolerances"]["slack"], 0.05);
    assert_eq!(r["fixtures"][0]["descriptor"], "gaussian_bump:n=1024");
    assert_eq!(r["config_hash"].as_str().unwrap().len(), 64);
    let other = stdout_json(&oscillab(&["sobolev", "--fixture", "gaussian_bump:n=1024", "--s", "1", "--p", "2", "--slack", "0.1", "--json", "-"]));
    assert_ne!(r["config_hash"], other["config_hash"]);
    let threaded = stdout_json(&oscillab(&[
        "sobolev", "--fixture", "gaussian_bump:n=1024", "--s", "1", "--p", "2", "--seed", "11", "--threads", "2", "--json", "-",
    ]));
    assert_eq!(r["config_hash"], threaded["config_hash"]);
}

#[test]
fn failed_assertion_exits_one_and_still_writes_the_record() {
    let dir = TempDir::new().unwrap();
    let json = dir.path().join("run.json");
    let curve = dir.path().join("curve.csv");
    let out = oscillab(&[
        "jump-detect", "--shape", "disk2d:a=1,r=0.3,n=256", "--mode", "kernel", "--eps", "0.15:0.03:geometric",
        "--tolerance", "1e-6", "--json", path_str(&json), "--out", path_str(&curve),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let record: Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    let r = &record["reports"][0];
    assert_eq!(r["pass"], false);
    assert!((r["lhs"].as_f64().unwrap() - 1.2).abs() < 0.01);
    let text = std::fs::read_to_string(curve).unwrap();
    assert!(text.starts_with("eps,energy\n0.15,"));
    assert_eq!(text.lines().count(), 1 + 7);
}

#[test]
fn mask_region_matches_box_region() {
    let dir = TempDir::new().unwrap();
    let n = 2048usize;
    let mask_path = dir.path().join("mask.csv");
    let h = 2.0 / n as f64;
    let mask: Vec<&str> = (0..n).map(|i| if (-1.0 + (i as f64 + 0.5) * h).abs() < 0.75 { "1" } else { "0" }).collect();
    std::fs::write(&mask_path, format!("dim,1\ncells,{n}\norigin,-1\nspacing,{h}\n{}\n", mask.join(","))).unwrap();
    let shape = format!("step1d:a=1.5,n={n}");
    let common = ["jump-detect", "--shape", shape.as_str(), "--n", "1", "--json", "-"];
    let by_box = oscillab(&[&common[..], &["--box=-0.75:0.75"]].concat());
    let by_mask = oscillab(&[&common[..], &["--region", path_str(&mask_path)]].concat());
    assert_eq!(by_box.status.code(), Some(0));
    assert_eq!(by_mask.status.code(), Some(0));
    let a = &stdout_json(&by_box)["reports"][0];
    let b = &stdout_json(&by_mask)["reports"][0];
    assert_eq!(a["lhs"], b["lhs"]);
    assert!((a["lhs"].as_f64().unwrap() - 2.25).abs() < 0.045);

    let holes: Vec<&str> = (0..n).map(|i| if i % 3 == 0 { "0" } else { "1" }).collect();
    std::fs::write(&mask_path, format!("dim,1\ncells,{n}\norigin,-1\nspacing,{h}\n{}\n", holes.join(","))).unwrap();
    let out = oscillab(&[&common[..], &["--region", path_str(&mask_path)]].concat());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("box-shaped"));
}

#[test]
fn kernel_check_writes_mass_curve() {
    let dir = TempDir::new().unwrap();
    let curve = dir.path().join("kernel.csv");
    let out = oscillab(&["kernel-check", "--kernel", "exponential", "--dim", "1", "--out", path_str(&curve)]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(curve).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("eps,mass,tail"));
    for line in lines {
        let mass: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!((mass - 1.0).abs() < 1e-6);
    }
}

#[test]
fn bad_thread_setting_is_rejected() {
    let out = with_threads("0", &["norm", "--fixture", "step", "--p", "1"]);
    assert_eq!(out.status.code(), Some(2));
    let out = oscillab(&["norm", "--fixture", "step", "--p", "1", "--threads", "-3"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn params_file_overrides_suite_settings() {
    let dir = TempDir::new().unwrap();
    let params = dir.path().join("params.json");
    std::fs::write(&params, r#"{"qs": [1.5], "gammas": ["inf"], "chain": [], "power_triples": [[2, 1, "inf"]], "young_count": 3}"#).unwrap();
    let out = oscillab(&["interp-check", "--suite", "exact", "--family", "step", "--params", path_str(&params), "--json", "-"]);
    assert_eq!(out.status.code(), Some(0));
    let record = stdout_json(&out);
    let ops: Vec<&str> = record["reports"].as_array().unwrap().iter().map(|r| r["op"].as_str().unwrap()).collect();
    assert_eq!(ops.iter().filter(|o| **o == "chebyshev").count(), 1);
    assert_eq!(ops.iter().filter(|o| o.starts_with("young")).count(), 3);

    std::fs::write(&params, "{\n  \"qs\": [1,\n}").unwrap();
    let out = oscillab(&["interp-check", "--suite", "exact", "--params", path_str(&params)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
}
