use std::path::Path;

use physim::cli::{emit_results, parse_and_dispatch, EXIT_CONFIG, EXIT_INVARIANT, EXIT_NUMERICAL, EXIT_OK};
use physim::scenarios::{builtin, run_fresh_spin, ScenarioConfig};
use serde_json::Value;

fn run(args: &[&str]) -> i32 {
    let mut argv = vec!["physim"];
    argv.extend_from_slice(args);
    parse_and_dispatch(argv)
}

fn records(path: &Path) -> Vec<Value> {
    std::fs::read_to_string(path).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

#[test]
fn chsh_run_writes_results() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("results.jsonl");
    let code = run(&["run", "--scenario", "epr_chsh", "--seed", "42", "--trials", "100000", "--mode", "free", "--out", out.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    let recs = records(&out);
    assert_eq!(recs.len(), 2);
    assert_eq!(recs[0]["record"], "header");
    assert_eq!(recs[0]["trials"], 100000);
    let summary = &recs[1];
    assert_eq!(summary["record"], "summary");
    let s = summary["correlation_estimates"]["S"].as_f64().unwrap();
    assert!((s.abs() - 2.8284271247461903).abs() < 1e-9);
    assert!(summary["wall_time"].is_null());
}

#[test]
fn missing_config_is_a_config_error() {
    assert_eq!(run(&["run", "--scenario", "fresh_spin", "--config", "missing.json"]), EXIT_CONFIG);
    assert_eq!(run(&["run", "--scenario", "no_such_scenario"]), EXIT_CONFIG);
    assert_eq!(run(&["run"]), EXIT_CONFIG);
}

#[test]
fn malformed_config_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"name\": \"x\", \"factor_dims\": [2], \"initial_state\": [[1, 0]]").unwrap();
    assert_eq!(run(&["verify", "--config", bad.to_str().unwrap()]), EXIT_CONFIG);
    std::fs::write(&bad, "{\"name\": \"x\", \"factor_dims\": [2], \"initial_state\": [[1, 0]], \"bogus\": 1}").unwrap();
    assert_eq!(run(&["verify", "--config", bad.to_str().unwrap()]), EXIT_CONFIG);
}

#[test]
fn unknown_flag_is_rejected() {
    assert_eq!(run(&["run", "--scenario", "fresh_spin", "--frobnicate"]), EXIT_CONFIG);
    assert_eq!(run(&["teleport"]), EXIT_CONFIG);
    assert_eq!(run(&["run", "--scenario", "fresh_spin", "--mode", "lenient"]), EXIT_CONFIG);
}

#[test]
fn help_and_version_succeed() {
    assert_eq!(run(&["--help"]), EXIT_OK);
    assert_eq!(run(&["--version"]), EXIT_OK);
    assert_eq!(run(&["list"]), EXIT_OK);
    assert_eq!(run(&["explain", "--scenario", "sequential_chain"]), EXIT_OK);
}

#[test]
fn verify_exit_codes() {
    assert_eq!(run(&["verify", "--scenario", "sequential_chain", "--seed", "7"]), EXIT_OK);
    assert_eq!(run(&["verify", "--scenario", "sequential_chain_no_env"]), EXIT_INVARIANT);
    assert_eq!(run(&["verify", "--scenario", "conservation_textbook", "--mode", "strict"]), EXIT_INVARIANT);
    assert_eq!(run(&["verify", "--scenario", "conservation", "--mode", "strict"]), EXIT_OK);
}

#[test]
fn unwritable_sink_is_a_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["run", "--scenario", "fresh_spin", "--trials", "3", "--out", dir.path().to_str().unwrap()]), EXIT_NUMERICAL);
}

#[test]
fn header_round_trips_to_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.jsonl");
    let code = run(&["run", "--scenario", "prepare_measure_60", "--seed", "9", "--trials", "10", "--out", out.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    let header = &records(&out)[0];
    let echoed: ScenarioConfig = serde_json::from_value(header["config"].clone()).unwrap();
    let mut expected = builtin("prepare_measure_60").unwrap();
    expected.seed = 9;
    expected.trials = 10;
    assert_eq!(echoed, expected);
    assert_eq!(header["seed"], 9);
    assert_eq!(header["mode"], "free");
    assert_eq!(header["version"], env!("CARGO_PKG_VERSION"));
}

#[test]
fn scenario_flag_accepts_a_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("spin.json");
    let mut cfg = builtin("fresh_spin").unwrap();
    cfg.name = "from_file".into();
    std::fs::write(&cfg_path, serde_json::to_string_pretty(&cfg).unwrap()).unwrap();
    let out = dir.path().join("r.jsonl");
    assert_eq!(run(&["run", "--scenario", cfg_path.to_str().unwrap(), "--trials", "4", "--out", out.to_str().unwrap()]), EXIT_OK);
    assert_eq!(records(&out)[1]["scenario"], "from_file");
}

#[test]
fn ledger_records_are_well_formed() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ledger.jsonl");
    let code = run(&["run", "--scenario", "sequential_chain", "--trials", "25", "--emit-ledger", "--track-history", "--out", out.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    let recs = records(&out);
    let ledger: Vec<&Value> = recs.iter().filter(|r| r["record"] == "ledger").collect();
    assert_eq!(ledger.len(), 25 * 3);
    for (i, r) in ledger.iter().enumerate() {
        assert_eq!(r["trial"], i / 3);
        assert_eq!(r["event_index"], i % 3);
        let w: Vec<f64> = r["weights"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
        assert!(w.iter().all(|&p| (0.0..=1.0).contains(&p)));
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(r["fidelity"].as_f64().unwrap() > 1.0 - 1e-10);
        assert!(r["chosen"].as_u64().unwrap() < w.len() as u64);
    }
    let summary = recs.last().unwrap();
    for p in summary["exact_chain"].as_object().unwrap().values() {
        assert!((0.0..=1.0).contains(&p.as_f64().unwrap()));
    }
    let counts: u64 = summary["empirical_counts"].as_object().unwrap().values().map(|v| v.as_u64().unwrap()).sum();
    assert_eq!(counts, 25);
}

#[test]
fn repeated_runs_are_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.jsonl");
    let b = dir.path().join("b.jsonl");
    for p in [&a, &b] {
        let code = run(&["run", "--scenario", "epr", "--seed", "3", "--trials", "400", "--emit-ledger", "--out", p.to_str().unwrap()]);
        assert_eq!(code, EXIT_OK);
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn emit_results_to_memory() {
    let mut cfg = builtin("fresh_spin").unwrap();
    cfg.trials = 10;
    let stats = run_fresh_spin(&cfg).unwrap();
    let bytes = emit_results(&cfg, &stats, &[], Vec::new()).unwrap();
    let text = String::from_utf8(bytes).unwrap();
    let lines: Vec<Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[1]["exact_chain"]["up"].as_f64().unwrap(), stats.exact_chain["up"]);
    assert!((lines[1]["exact_chain"]["up"].as_f64().unwrap() - 0.36).abs() < 1e-12);
    assert!((lines[1]["exact_chain"]["down"].as_f64().unwrap() - 0.64).abs() < 1e-12);
}
