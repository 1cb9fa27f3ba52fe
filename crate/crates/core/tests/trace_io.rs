use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use bara::allocator::PolicyKind;
use bara::auction::{rank_clients, settle};
use bara::harness::{batch, run_policy, EnvironmentSpec, RunConfig};
use bara::{Error, Execution};

const CLIENTS: usize = 5;
const ROUNDS: u32 = 30;

fn delta(t: u32, n: u32) -> f64 {
    // Column sums peak at arm 3.
    let base = [0.004, 0.007, 0.009, 0.006][n as usize - 1];
    base + 0.0001 * f64::from(t % 3)
}

fn write_trace(dir: &Path, skip: Option<(u32, u32)>) {
    let mut deltas = String::from("round,arm,delta_accuracy\n");
    for t in 1..=ROUNDS {
        for n in 1..CLIENTS as u32 {
            if skip != Some((t, n)) {
                writeln!(deltas, "{t},{n},{}", delta(t, n)).unwrap();
            }
        }
    }
    fs::write(dir.join("deltas.csv"), deltas).unwrap();
    let mut bids = String::from("round,client_id,bid\n");
    for t in 1..=ROUNDS {
        for c in 0..CLIENTS {
            writeln!(bids, "{t},{c},1.0").unwrap();
        }
    }
    fs::write(dir.join("bids.csv"), bids).unwrap();
}

fn write_config(dir: &Path, extra: &str) -> std::path::PathBuf {
    let path = dir.join("config.json");
    let json = format!(
        r#"{{
  "environment": {{"kind": "trace", "deltas": "deltas.csv", "bids": "bids.csv", "initial_accuracy": 0.2}},
  "clients": {CLIENTS},
  "t_max": {ROUNDS},
  "total_budget": 1000.0,
  "t0": 5{extra}
}}"#
    );
    fs::write(&path, json).unwrap();
    path
}

#[test]
fn trace_config_loads_with_relative_paths_and_replays() {
    let tmp = tempfile::tempdir().unwrap();
    write_trace(tmp.path(), None);
    let config = RunConfig::from_json_file(&write_config(tmp.path(), "")).unwrap();
    assert!(matches!(config.environment, EnvironmentSpec::Trace(_)));

    let env = config.build_environment(0).unwrap();
    assert_eq!(env.num_clients(), CLIENTS);
    assert_eq!(env.step(7, 2, 0.5).unwrap(), delta(7, 2));

    // Budget covers every round for every arm, so the oracle is the best column sum.
    let oracle = config.oracle(env.as_ref(), Execution::Sequential).unwrap();
    assert_eq!(oracle.arm, 3);
    let sum: f64 = (1..=ROUNDS).map(|t| delta(t, 3)).sum();
    assert!((oracle.accuracy - (0.2 + sum)).abs() < 1e-12);

    for kind in PolicyKind::ALL {
        let r = run_policy(&config, kind, 1).unwrap();
        assert!(r.rounds_executed > 0, "{kind}");
        for l in &r.rounds {
            let quotes = env.sample_quotes(l.round);
            assert!(quotes.iter().all(|q| q.bid == 1.0));
            let expected = settle(&rank_clients(&quotes).unwrap(), l.arm as usize).unwrap();
            assert_eq!(expected.total_spend, l.spend);
            assert!((l.delta - delta(l.round, l.arm)).abs() < 1e-12);
        }
    }
}

#[test]
fn incomplete_trace_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    write_trace(tmp.path(), Some((12, 2)));
    let config = RunConfig::from_json_file(&write_config(tmp.path(), "")).unwrap();
    match config.build_environment(0) {
        Err(Error::TraceIncomplete { round: 12, arm: 2 }) => {}
        other => panic!("expected incomplete trace, got {:?}", other.err()),
    }
    assert!(batch(&config, &[PolicyKind::Even], &[0], Execution::Sequential).unwrap().runs[0].result.is_err());
}

#[test]
fn trace_shorter_than_horizon_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    write_trace(tmp.path(), None);
    let mut config = RunConfig::from_json_file(&write_config(tmp.path(), "")).unwrap();
    config.t_max = ROUNDS + 1;
    assert!(matches!(config.build_environment(0), Err(Error::InvalidConfig(_))));
}

#[test]
fn bid_log_must_list_every_client() {
    let tmp = tempfile::tempdir().unwrap();
    write_trace(tmp.path(), None);
    let bids = fs::read_to_string(tmp.path().join("bids.csv")).unwrap();
    let trimmed: String = bids.lines().filter(|l| *l != "4,2,1.0").map(|l| format!("{l}\n")).collect();
    fs::write(tmp.path().join("bids.csv"), trimmed).unwrap();
    let config = RunConfig::from_json_file(&write_config(tmp.path(), "")).unwrap();
    assert!(config.build_environment(0).is_err());
}

#[test]
fn unknown_config_keys_are_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    write_trace(tmp.path(), None);
    let path = write_config(tmp.path(), r#", "budget": 5"#);
    assert!(matches!(RunConfig::from_json_file(&path), Err(Error::Json(_))));
}

#[test]
fn config_validation_errors_surface_on_load() {
    let tmp = tempfile::tempdir().unwrap();
    write_trace(tmp.path(), None);
    let path = write_config(tmp.path(), r#", "max_nodes": 0"#);
    assert!(matches!(RunConfig::from_json_file(&path), Err(Error::InvalidConfig(_))));
}

#[test]
fn synthetic_config_round_trips_through_json() {
    let config = RunConfig { seeds: vec![3, 1, 4], policies: vec![PolicyKind::Bara, PolicyKind::Even], ..RunConfig::default() };
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("c.json");
    fs::write(&path, serde_json::to_string_pretty(&config).unwrap()).unwrap();
    assert_eq!(RunConfig::from_json_file(&path).unwrap(), config);
}

#[test]
fn empty_seed_list_is_an_error() {
    let config = RunConfig::default();
    assert!(matches!(batch(&config, &PolicyKind::ALL, &[], Execution::Sequential), Err(Error::NoSeeds)));
}
