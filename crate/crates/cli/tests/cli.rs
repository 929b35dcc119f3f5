use std::path::Path;
use std::process::{Command, Output};

use ccn_agg_cli::ResultTable;

const SMALL: &str = "n_objects = 100\nalpha = 1.0\nconsumer_rate = 100.0\nlink_rtt = 0.02\n\
                     cache_allocation = \"edge\"\ncaching_budget = 1.11e4\n";

fn run(dir: &Path, config: &str, args: &[&str]) -> Output {
    let path = dir.join("scenario.toml");
    std::fs::write(&path, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_ccn-agg"))
        .args(args)
        .arg("--config")
        .arg(&path)
        .output()
        .unwrap()
}

#[test]
fn analyze_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), SMALL, &["analyze"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table = ResultTable::read_csv(out.stdout.as_slice()).unwrap();
    let a = |l| table.get(None, l, "aggregation_probability").unwrap().model.unwrap();
    assert!(a(1) < a(2) && a(2) < a(3));
    // Edge caching leaves upper levels without a cache.
    assert_eq!(table.get(None, 2, "hit_probability").unwrap().model, Some(0.0));
}

#[test]
fn json_output_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("out.json");
    let out = run(dir.path(), SMALL, &["analyze", "--format", "json", "--output", target.to_str().unwrap()]);
    assert!(out.status.success());
    let value: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(target).unwrap()).unwrap();
    assert!(value.as_array().unwrap().iter().any(|r| r["metric"] == "cumulative_aggregation_percentage"));
}

#[test]
fn validation_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), "consumer_rate = -5.0\n", &["analyze"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("consumer_rate"));
    let out = run(dir.path(), "levels = [\n", &["analyze"]);
    assert_eq!(out.status.code(), Some(2));
    // The default catalog is too large to simulate.
    let out = run(dir.path(), "", &["simulate"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn non_convergence_exits_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), SMALL, &["analyze", "--max-iter", "1"]);
    assert_eq!(out.status.code(), Some(3));
    let out = run(dir.path(), SMALL, &["analyze", "--threshold", "1e-14", "--max-iter", "3"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn compare_and_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let config = format!("{SMALL}[sim]\ntotal_requests = 100000\nreplications = 2\n");
    let out = run(dir.path(), &config, &["compare", "--seed", "3"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table = ResultTable::read_csv(out.stdout.as_slice()).unwrap();
    let row = table.get(None, 1, "aggregation_probability").unwrap();
    assert!(row.model.is_some() && row.sim.is_some() && row.sim_halfwidth.is_some());
    assert!(String::from_utf8_lossy(&out.stderr).contains("max |model - sim|"));

    let config = format!("{SMALL}[sweep]\nparameter = \"delta\"\nvalues = [0.1, 0.02]\n");
    let out = run(dir.path(), &config, &["sweep"]);
    assert!(out.status.success());
    let table = ResultTable::read_csv(out.stdout.as_slice()).unwrap();
    assert_eq!(table.rows()[0].sweep_value, Some(0.02));
    assert!(table.get(Some(0.1), 3, "aggregation_probability").is_some());
}

#[test]
fn trace_driven_simulation() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("trace.txt"), "0.0 1 0\n0.005 1 0\n0.1 1 0\n").unwrap();
    let config = "n_objects = 2\nlevels = 1\narity = 2\nlink_rtt = 0.01\ncapacities = [1]\n\
                  [sim]\ntrace = \"trace.txt\"\nwarmup_fraction = 0.0\nreplications = 1\n";
    let out = run(dir.path(), config, &["simulate"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table = ResultTable::read_csv(out.stdout.as_slice()).unwrap();
    assert_eq!(table.get(None, 1, "aggregation_probability").unwrap().sim, Some(1.0 / 3.0));
    assert_eq!(table.get(None, 1, "hit_probability").unwrap().sim, Some(1.0 / 3.0));
}

#[test]
fn bundled_scenarios_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let mut seen = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            ccn_agg_cli::load_scenario(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            seen += 1;
        }
    }
    assert!(seen >= 5);
    let default = ccn_agg_cli::load_scenario(&Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/default.toml"));
    assert_eq!(default.unwrap().capacity_plan().capacities, ccn_agg_cli::ScenarioFile::default().capacity_plan().capacities);
}
