//! End-to-end runs of the `lora-planner` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use lora_planner::cli::{FileFormat, ScenarioFile};
use tempfile::TempDir;

const BENCHMARK: &str = "[cell]\nradius_km = 1.0\n[power]\nbeta = 0.0\n[plan]\nmode = \"equal_area\"\nduty = 0.01\n\
                         [mc]\nreplications = 2000\nseed = 7\n";

fn write_scenario(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn planner(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lora-planner")).args(args).output().expect("binary runs")
}

fn run_ok(args: &[&str]) {
    let out = planner(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
}

fn data_rows(path: &Path) -> Vec<Vec<String>> {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# fingerprint: "));
    lines.skip(2).map(|l| l.split(',').map(str::to_owned).collect()).collect()
}

#[test]
fn simulate_is_byte_identical_under_a_fixed_seed() {
    let tmp = TempDir::new().unwrap();
    let sc = write_scenario(tmp.path(), "bench.toml", BENCHMARK);
    let sc = sc.to_str().unwrap();
    let outputs: Vec<_> = ["a", "b"]
        .iter()
        .map(|d| {
            let dir = tmp.path().join(d);
            run_ok(&["simulate", sc, "--out-dir", dir.to_str().unwrap()]);
            dir
        })
        .collect();
    for file in ["report.csv", "throughput_curve.csv", "scenario.json"] {
        let a = std::fs::read(outputs[0].join(file)).unwrap();
        let b = std::fs::read(outputs[1].join(file)).unwrap();
        assert_eq!(a, b, "{file} differs between runs");
    }
}

#[test]
fn seed_override_changes_the_fingerprint() {
    let tmp = TempDir::new().unwrap();
    let sc = write_scenario(tmp.path(), "bench.toml", BENCHMARK);
    let sc = sc.to_str().unwrap();
    let first_line = |seed: &str, dir: &str| {
        let dir = tmp.path().join(dir);
        run_ok(&["analyze", sc, "--seed", seed, "--out-dir", dir.to_str().unwrap()]);
        std::fs::read_to_string(dir.join("report.csv")).unwrap().lines().next().unwrap().to_owned()
    };
    assert_ne!(first_line("1", "s1"), first_line("2", "s2"));
}

#[test]
fn echoed_scenario_reloads_to_the_same_configuration() {
    let tmp = TempDir::new().unwrap();
    let sc = write_scenario(tmp.path(), "bench.toml", BENCHMARK);
    let out = tmp.path().join("out");
    run_ok(&["analyze", sc.to_str().unwrap(), "--out-dir", out.to_str().unwrap()]);
    let echo = out.join("scenario.json");
    let reloaded = ScenarioFile::load(&echo).unwrap();
    let original = ScenarioFile::parse(BENCHMARK, FileFormat::Toml).unwrap();
    assert_eq!(reloaded, original);

    // running from the echo reproduces the report exactly
    let again = tmp.path().join("again");
    run_ok(&["analyze", echo.to_str().unwrap(), "--out-dir", again.to_str().unwrap()]);
    assert_eq!(
        std::fs::read(out.join("report.csv")).unwrap(),
        std::fs::read(again.join("report.csv")).unwrap()
    );
}

#[test]
fn analyze_and_simulate_curves_share_positions() {
    let tmp = TempDir::new().unwrap();
    let sc = write_scenario(tmp.path(), "bench.toml", BENCHMARK);
    let sc = sc.to_str().unwrap();
    let (a, s) = (tmp.path().join("a"), tmp.path().join("s"));
    run_ok(&["analyze", sc, "--out-dir", a.to_str().unwrap()]);
    run_ok(&["simulate", sc, "--out-dir", s.to_str().unwrap()]);
    let analytic = data_rows(&a.join("throughput_curve.csv"));
    let simulated = data_rows(&s.join("throughput_curve.csv"));
    assert_eq!(analytic.len(), simulated.len());
    assert!(!analytic.is_empty());
    for (x, y) in analytic.iter().zip(&simulated) {
        assert_eq!(x[..3], y[..3], "radius, SF and analytic value agree");
        assert!(x[3].is_empty() && !y[3].is_empty());
        let (model, mc, se): (f64, f64, f64) = (y[2].parse().unwrap(), y[3].parse().unwrap(), y[4].parse().unwrap());
        assert!((model - mc).abs() <= 5.0 * se + 0.05 * model, "{x:?} vs {y:?}");
    }
}

#[test]
fn optimize_writes_plan_trace_and_json_report() {
    let tmp = TempDir::new().unwrap();
    let sc = write_scenario(
        tmp.path(),
        "opt.toml",
        "[cell]\nradius_km = 1.0\n[power]\nbeta = 1.0\n[mc]\nreplications = 1000\n",
    );
    let out = tmp.path().join("out");
    run_ok(&["optimize", sc.to_str().unwrap(), "--format", "json", "--out-dir", out.to_str().unwrap()]);
    for f in ["plan.json", "balance.json", "report.json", "ib_trace.csv", "scenario.json"] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert!(report["min_throughput"].as_f64().unwrap() > 2.0);
}

#[test]
fn invalid_scenarios_exit_with_status_1_and_name_the_field() {
    let tmp = TempDir::new().unwrap();
    let bad = write_scenario(tmp.path(), "bad.toml", "[cell]\nradius_km = 1.0\n[plan]\nduty_cap = 1.5\n");
    let out = planner(&["analyze", bad.to_str().unwrap(), "--out-dir", tmp.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("duty_cap"));

    let missing = tmp.path().join("nope.toml");
    let out = planner(&["analyze", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope.toml"));
}

#[test]
fn shipped_scenarios_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let mut n = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        lora_planner::cli::Scenario::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        n += 1;
    }
    assert!(n >= 8);
}
