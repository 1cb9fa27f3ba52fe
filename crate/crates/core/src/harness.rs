//! Experiment orchestration: configuration, the per-round training loop,
//! regret metrics and multi-seed batches.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::allocator::{Allocator, BudgetLedger, Decision, PolicyConfig, PolicyKind, Predictor};
use crate::auction::{rank_clients, settle};
use crate::environment::{oracle_best_arm, Environment, Oracle, SyntheticParams, SyntheticWorld, TraceWorld};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::gp::{BetaSchedule, KernelParams};
use crate::interpolation::DEFAULT_MAX_NODES;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum EnvironmentSpec {
    Synthetic(SyntheticParams),
    Trace(TraceSpec),
}

impl Default for EnvironmentSpec {
    fn default() -> Self {
        EnvironmentSpec::Synthetic(SyntheticParams::default())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceSpec {
    /// CSV with header `round,arm,delta_accuracy`.
    pub deltas: PathBuf,
    /// Optional CSV with header `round,client_id,bid`.
    #[serde(default)]
    pub bids: Option<PathBuf>,
    #[serde(default = "default_trace_accuracy")]
    pub initial_accuracy: f64,
    #[serde(default = "default_bid_low")]
    pub bid_low: f64,
    #[serde(default = "default_bid_high")]
    pub bid_high: f64,
}

fn default_trace_accuracy() -> f64 {
    0.1
}

fn default_bid_low() -> f64 {
    0.5
}

fn default_bid_high() -> f64 {
    1.5
}

/// Full experiment description, loaded from JSON. Missing keys take the
/// defaults below (N = 20, T_max = 200, B_total = 1500, T_0 = 40,
/// l = 0.2, λ = 0.001, σ² = 0.01, sqrt(β_t) = 0.8 ln(0.4 t)).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub environment: EnvironmentSpec,
    pub clients: usize,
    pub t_max: u32,
    pub total_budget: f64,
    pub t0: u32,
    pub kernel: KernelParams,
    pub beta: BetaSchedule,
    pub stage1_cap_factor: f64,
    pub max_nodes: usize,
    pub prior_mean: f64,
    /// Policy used by single runs.
    pub policy: PolicyKind,
    /// Policies compared by batches.
    pub policies: Vec<PolicyKind>,
    pub seeds: Vec<u64>,
    pub output: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            environment: EnvironmentSpec::default(),
            clients: 20,
            t_max: 200,
            total_budget: 1500.0,
            t0: 40,
            kernel: KernelParams::default(),
            beta: BetaSchedule::default(),
            stage1_cap_factor: 2.0,
            max_nodes: DEFAULT_MAX_NODES,
            prior_mean: 0.0,
            policy: PolicyKind::Bara,
            policies: PolicyKind::ALL.to_vec(),
            seeds: (0..10).collect(),
            output: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut config: RunConfig = serde_json::from_str(&text)?;
        // Trace paths are relative to the config file.
        if let (EnvironmentSpec::Trace(trace), Some(dir)) = (&mut config.environment, path.parent()) {
            trace.deltas = dir.join(&trace.deltas);
            trace.bids = trace.bids.as_ref().map(|b| dir.join(b));
        }
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.clients < 2 {
            return Err(Error::InvalidConfig(format!("clients must be at least 2, got {}", self.clients)));
        }
        if !(self.total_budget > 0.0 && self.total_budget.is_finite()) {
            return Err(Error::InvalidConfig(format!("total_budget must be positive, got {}", self.total_budget)));
        }
        for kind in std::iter::once(self.policy).chain(self.policies.iter().copied()) {
            self.policy_config(kind, 0).validate()?;
        }
        if let EnvironmentSpec::Synthetic(params) = &self.environment {
            SyntheticWorld::new(*params, self.clients, 0)?;
        }
        Ok(())
    }

    pub fn policy_config(&self, kind: PolicyKind, seed: u64) -> PolicyConfig {
        PolicyConfig {
            kind,
            t_max: self.t_max,
            t0: self.t0,
            kernel: self.kernel,
            beta: self.beta,
            stage1_cap_factor: self.stage1_cap_factor,
            max_nodes: self.max_nodes,
            prior_mean: self.prior_mean,
            seed,
        }
    }

    pub fn build_environment(&self, seed: u64) -> Result<Box<dyn Environment>> {
        match &self.environment {
            EnvironmentSpec::Synthetic(params) => Ok(Box::new(SyntheticWorld::new(*params, self.clients, seed)?)),
            EnvironmentSpec::Trace(spec) => {
                let world = TraceWorld::from_csv(
                    self.clients,
                    &spec.deltas,
                    spec.bids.as_deref(),
                    spec.initial_accuracy,
                    (spec.bid_low, spec.bid_high),
                    seed,
                )?;
                if world.rounds() < self.t_max {
                    return Err(Error::InvalidConfig(format!(
                        "trace covers {} rounds but t_max is {}",
                        world.rounds(),
                        self.t_max
                    )));
                }
                Ok(Box::new(world))
            }
        }
    }

    pub fn oracle(&self, env: &dyn Environment, exec: Execution) -> Result<Oracle> {
        oracle_best_arm(env, self.total_budget, self.t_max, exec)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RoundLog {
    pub round: u32,
    pub arm: u32,
    pub spend: f64,
    pub accuracy: f64,
    pub delta: f64,
    pub remaining_budget: f64,
    /// Estimated final accuracy of the played arm after this round.
    pub estimate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunResult {
    pub policy: PolicyKind,
    pub seed: u64,
    pub rounds: Vec<RoundLog>,
    pub final_accuracy: f64,
    pub rounds_executed: u32,
    pub total_spend: f64,
    pub arm_series: Vec<u32>,
    /// `Reg_t / t` per executed round; empty until an oracle is attached.
    pub regret_avg: Vec<f64>,
}

impl RunResult {
    pub fn run_id(&self) -> String {
        format!("{}-{}", self.policy, self.seed)
    }
}

/// One run of `config.policy`.
pub fn run(config: &RunConfig, seed: u64) -> Result<RunResult> {
    run_policy(config, config.policy, seed)
}

pub fn run_policy(config: &RunConfig, kind: PolicyKind, seed: u64) -> Result<RunResult> {
    config.validate()?;
    let env = config.build_environment(seed)?;
    run_in(env.as_ref(), config, kind, seed)
}

/// The round loop: collect quotes, decide the cohort size, price it, guard
/// the total budget, train, record the observation.
pub fn run_in(env: &dyn Environment, config: &RunConfig, kind: PolicyKind, seed: u64) -> Result<RunResult> {
    let policy = config.policy_config(kind, seed);
    let mut allocator = Allocator::new(policy)?;
    let mut ledger = BudgetLedger::new(config.total_budget);
    let num_arms = env.num_clients() as u32 - 1;
    let mut predictor = Predictor::new(num_arms, &policy, env.initial_accuracy());
    let mut accuracy = env.initial_accuracy();
    let mut rounds = Vec::new();

    for t in 1..=config.t_max {
        let quotes = env.sample_quotes(t);
        let n = match allocator.decide(t, &quotes, &ledger, &predictor)? {
            Decision::Select(n) => n,
            Decision::Skip => continue,
            Decision::Stop => break,
        };
        let ranked = rank_clients(&quotes)?;
        let outcome = settle(&ranked, n as usize)?;
        let horizon = allocator.horizon(&ledger, &ranked, n)?;
        ledger.charge(t, n, outcome.total_spend)?;

        let next = (accuracy + env.step(t, n, accuracy)?).clamp(0.0, 1.0);
        let delta = next - accuracy;
        accuracy = next;
        predictor.observe(t, n, delta)?;

        rounds.push(RoundLog {
            round: t,
            arm: n,
            spend: outcome.total_spend,
            accuracy,
            delta,
            remaining_budget: ledger.remaining(),
            estimate: predictor.estimate(n, horizon)?,
        });
    }

    Ok(RunResult {
        policy: kind,
        seed,
        final_accuracy: accuracy,
        rounds_executed: rounds.len() as u32,
        total_spend: ledger.spent(),
        arm_series: rounds.iter().map(|r| r.arm).collect(),
        rounds,
        regret_avg: Vec::new(),
    })
}

/// `Reg_t / t` with `Reg_t = Σ_{τ ≤ t} (a* - â_τ(n_τ))`, over executed rounds.
pub fn regret_series(result: &RunResult, oracle_accuracy: f64) -> Vec<f64> {
    let mut cumulative = 0.0;
    result
        .rounds
        .iter()
        .enumerate()
        .map(|(i, r)| {
            cumulative += oracle_accuracy - r.estimate;
            cumulative / (i + 1) as f64
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolicySummary {
    pub policy: PolicyKind,
    pub runs: usize,
    pub failures: usize,
    pub mean_final_accuracy: f64,
    pub std_final_accuracy: f64,
    pub mean_rounds: f64,
    pub mean_spend: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub policy: PolicyKind,
    pub seed: u64,
    pub result: std::result::Result<RunResult, String>,
}

impl RunOutcome {
    pub fn run_id(&self) -> String {
        format!("{}-{}", self.policy, self.seed)
    }
}

#[derive(Debug, Clone)]
pub struct BatchResult {
    pub runs: Vec<RunOutcome>,
    pub summaries: Vec<PolicySummary>,
    pub oracles: Vec<(u64, std::result::Result<Oracle, String>)>,
}

impl BatchResult {
    pub fn successes(&self, policy: PolicyKind) -> impl Iterator<Item = &RunResult> {
        self.runs
            .iter()
            .filter(move |r| r.policy == policy)
            .filter_map(|r| r.result.as_ref().ok())
    }

    pub fn summary(&self, policy: PolicyKind) -> Option<&PolicySummary> {
        self.summaries.iter().find(|s| s.policy == policy)
    }
}

/// Runs every `(policy, seed)` pair. A failing run is reported in its
/// [`RunOutcome`] without aborting the others.
pub fn batch(config: &RunConfig, policies: &[PolicyKind], seeds: &[u64], exec: Execution) -> Result<BatchResult> {
    if seeds.is_empty() {
        return Err(Error::NoSeeds);
    }
    if policies.is_empty() {
        return Err(Error::InvalidConfig("no policies to run".into()));
    }
    config.validate()?;

    let oracles: Vec<(u64, std::result::Result<Oracle, String>)> = exec.map(seeds, |&seed| {
        let oracle = config
            .build_environment(seed)
            .and_then(|env| config.oracle(env.as_ref(), Execution::Sequential))
            .map_err(|e| e.to_string());
        (seed, oracle)
    });

    let jobs: Vec<(PolicyKind, usize)> = policies
        .iter()
        .flat_map(|&p| (0..seeds.len()).map(move |i| (p, i)))
        .collect();
    let runs = exec.map(&jobs, |&(policy, i)| {
        let (seed, oracle) = &oracles[i];
        let result = oracle.clone().and_then(|oracle| {
            let mut result = run_policy(config, policy, *seed).map_err(|e| e.to_string())?;
            result.regret_avg = regret_series(&result, oracle.accuracy);
            Ok(result)
        });
        RunOutcome { policy, seed: *seed, result }
    });

    let summaries = policies
        .iter()
        .map(|&policy| summarize(policy, &runs))
        .collect();
    Ok(BatchResult { runs, summaries, oracles })
}

fn summarize(policy: PolicyKind, runs: &[RunOutcome]) -> PolicySummary {
    let ok: Vec<&RunResult> = runs
        .iter()
        .filter(|r| r.policy == policy)
        .filter_map(|r| r.result.as_ref().ok())
        .collect();
    let failures = runs.iter().filter(|r| r.policy == policy && r.result.is_err()).count();
    let k = ok.len() as f64;
    let mean = |f: &dyn Fn(&RunResult) -> f64| if ok.is_empty() { f64::NAN } else { ok.iter().map(|r| f(r)).sum::<f64>() / k };
    let mean_acc = mean(&|r| r.final_accuracy);
    let std = if ok.len() > 1 {
        (ok.iter().map(|r| (r.final_accuracy - mean_acc).powi(2)).sum::<f64>() / (k - 1.0)).sqrt()
    } else {
        0.0
    };
    PolicySummary {
        policy,
        runs: ok.len(),
        failures,
        mean_final_accuracy: mean_acc,
        std_final_accuracy: std,
        mean_rounds: mean(&|r| f64::from(r.rounds_executed)),
        mean_spend: mean(&|r| r.total_spend),
    }
}
