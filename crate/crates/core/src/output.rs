//! CSV emission. Column names are fixed; floats use the shortest
//! round-tripping representation, so identical batches give identical bytes.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::allocator::PolicyKind;
use crate::environment::Oracle;
use crate::error::Result;
use crate::harness::{BatchResult, RunResult};

#[derive(Serialize)]
struct RoundRow<'a> {
    run_id: &'a str,
    round: u32,
    policy: PolicyKind,
    arm: u32,
    spend: f64,
    accuracy: f64,
    delta: f64,
    regret_avg: Option<f64>,
}

#[derive(Serialize)]
struct SummaryRow {
    policy: PolicyKind,
    seed: u64,
    final_accuracy: f64,
    rounds_executed: u32,
    total_spend: f64,
}

#[derive(Serialize)]
struct FailureRow<'a> {
    run_id: &'a str,
    error: &'a str,
}

#[derive(Serialize)]
struct OracleRow {
    seed: u64,
    arm: u32,
    mean_spend: f64,
    horizon: u32,
    final_accuracy: f64,
    best: bool,
}

#[derive(Serialize)]
struct SeriesRow {
    seed: u64,
    round: u32,
    value: f64,
}

fn write_rows<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_rounds(path: &Path, results: &[&RunResult]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in results {
        let id = r.run_id();
        for (i, l) in r.rounds.iter().enumerate() {
            w.serialize(RoundRow {
                run_id: &id,
                round: l.round,
                policy: r.policy,
                arm: l.arm,
                spend: l.spend,
                accuracy: l.accuracy,
                delta: l.delta,
                regret_avg: r.regret_avg.get(i).copied(),
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary(path: &Path, results: &[&RunResult]) -> Result<()> {
    write_rows(
        path,
        results.iter().map(|r| SummaryRow {
            policy: r.policy,
            seed: r.seed,
            final_accuracy: r.final_accuracy,
            rounds_executed: r.rounds_executed,
            total_spend: r.total_spend,
        }),
    )
}

pub fn write_oracles(path: &Path, oracles: &[(u64, &Oracle)]) -> Result<()> {
    write_rows(
        path,
        oracles.iter().flat_map(|&(seed, o)| {
            o.arms.iter().map(move |a| OracleRow {
                seed,
                arm: a.arm,
                mean_spend: a.mean_spend,
                horizon: a.horizon,
                final_accuracy: a.final_accuracy,
                best: a.arm == o.arm,
            })
        }),
    )
}

/// Writes `rounds.csv`, `summary.csv`, `policy_summary.csv`, `oracle.csv`
/// and, when any run failed, `failures.csv`. Returns the written paths.
pub fn write_batch(dir: &Path, batch: &BatchResult) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let ok: Vec<&RunResult> = batch.runs.iter().filter_map(|r| r.result.as_ref().ok()).collect();
    let mut written = Vec::new();

    let p = dir.join("rounds.csv");
    write_rounds(&p, &ok)?;
    written.push(p);

    let p = dir.join("summary.csv");
    write_summary(&p, &ok)?;
    written.push(p);

    let p = dir.join("policy_summary.csv");
    write_rows(&p, &batch.summaries)?;
    written.push(p);

    let oracles: Vec<(u64, &Oracle)> = batch
        .oracles
        .iter()
        .filter_map(|(s, o)| o.as_ref().ok().map(|o| (*s, o)))
        .collect();
    let p = dir.join("oracle.csv");
    write_oracles(&p, &oracles)?;
    written.push(p);

    let failures: Vec<(String, &str)> = batch
        .runs
        .iter()
        .filter_map(|r| r.result.as_ref().err().map(|e| (r.run_id(), e.as_str())))
        .collect();
    if !failures.is_empty() {
        let p = dir.join("failures.csv");
        write_rows(&p, failures.iter().map(|(id, e)| FailureRow { run_id: id, error: e }))?;
        written.push(p);
    }
    Ok(written)
}

/// Per-figure data: final accuracy per policy, BARA's cohort sizes per
/// round, and BARA's average regret per round.
pub fn write_plotdata(dir: &Path, batch: &BatchResult) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();

    let p = dir.join("fig1_final_accuracy.csv");
    write_rows(&p, &batch.summaries)?;
    written.push(p);

    let bara: Vec<&RunResult> = batch.successes(PolicyKind::Bara).collect();
    let p = dir.join("fig2_participants.csv");
    write_rows(
        &p,
        bara.iter().flat_map(|r| {
            r.rounds.iter().map(move |l| SeriesRow { seed: r.seed, round: l.round, value: f64::from(l.arm) })
        }),
    )?;
    written.push(p);

    let p = dir.join("fig3_regret.csv");
    write_rows(
        &p,
        bara.iter().flat_map(|r| {
            r.rounds
                .iter()
                .zip(&r.regret_avg)
                .map(move |(l, &g)| SeriesRow { seed: r.seed, round: l.round, value: g })
        }),
    )?;
    written.push(p);
    Ok(written)
}
