//! Per-round budget allocation policies.
//!
//! Three baselines fix a per-round budget up front (even, linearly
//! increasing, linearly decreasing) and recruit as many clients as it buys.
//! The random baseline draws the cohort size uniformly. BARA explores
//! uniformly for `t0` rounds, then picks the cohort size with the highest
//! GP-UCB score over estimated final accuracies.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::auction::{budget_for_count, rank_clients, winners_for_budget, ClientQuote, RankedQuotes};
use crate::error::{Error, Result};
use crate::gp::{ucb_select, BetaSchedule, GpState, KernelParams, Posterior};
use crate::interpolation::{NewtonExtrapolator, RecordMatrix, DEFAULT_MAX_NODES};
use crate::rng::{stream, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PolicyKind {
    #[serde(rename = "EA")]
    Even,
    #[serde(rename = "MIA")]
    Increasing,
    #[serde(rename = "MDA")]
    Decreasing,
    #[serde(rename = "RA")]
    Random,
    #[serde(rename = "BARA")]
    Bara,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 5] = [
        PolicyKind::Even,
        PolicyKind::Increasing,
        PolicyKind::Decreasing,
        PolicyKind::Random,
        PolicyKind::Bara,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Even => "EA",
            PolicyKind::Increasing => "MIA",
            PolicyKind::Decreasing => "MDA",
            PolicyKind::Random => "RA",
            PolicyKind::Bara => "BARA",
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PolicyKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::UnknownKind(s.to_string()))
    }
}

/// Per-round budget of the fixed-schedule baselines.
pub fn round_budget_baseline(kind: PolicyKind, t: u32, t_max: u32, total_budget: f64) -> Result<f64> {
    let (t, t_max) = (f64::from(t), f64::from(t_max));
    match kind {
        PolicyKind::Even => Ok(total_budget / t_max),
        PolicyKind::Increasing => Ok(2.0 * total_budget * t / (t_max * t_max)),
        PolicyKind::Decreasing => Ok(-2.0 * total_budget * t / (t_max * t_max) + 2.0 * total_budget / t_max),
        other => Err(Error::NoSchedule(other.to_string())),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RoundSpend {
    pub round: u32,
    pub arm: u32,
    pub spend: f64,
}

/// Running account of the total budget.
#[derive(Debug, Clone, PartialEq)]
pub struct BudgetLedger {
    total_budget: f64,
    spent: f64,
    per_round: Vec<RoundSpend>,
    per_arm: BTreeMap<u32, (f64, u32)>,
}

impl BudgetLedger {
    pub fn new(total_budget: f64) -> Self {
        Self { total_budget, spent: 0.0, per_round: Vec::new(), per_arm: BTreeMap::new() }
    }

    pub fn total_budget(&self) -> f64 {
        self.total_budget
    }

    pub fn spent(&self) -> f64 {
        self.spent
    }

    pub fn remaining(&self) -> f64 {
        self.total_budget - self.spent
    }

    pub fn rounds(&self) -> &[RoundSpend] {
        &self.per_round
    }

    /// `(sum of spends, rounds played)` for an arm.
    pub fn arm_history(&self, arm: u32) -> (f64, u32) {
        self.per_arm.get(&arm).copied().unwrap_or((0.0, 0))
    }

    pub fn can_afford(&self, spend: f64) -> bool {
        self.spent + spend <= self.total_budget
    }

    pub fn charge(&mut self, round: u32, arm: u32, spend: f64) -> Result<()> {
        if !self.can_afford(spend) {
            return Err(Error::BudgetExceeded { spent: self.spent, spend, total: self.total_budget });
        }
        self.spent += spend;
        self.per_round.push(RoundSpend { round, arm, spend });
        let entry = self.per_arm.entry(arm).or_insert((0.0, 0));
        entry.0 += spend;
        entry.1 += 1;
        Ok(())
    }
}

/// Rounds the total budget lasts if `arm` is played every round, from the
/// mean of its past spends and this round's cost. At least 1.
pub fn estimate_horizon(ledger: &BudgetLedger, arm: u32, current_round_cost: f64) -> u32 {
    let (sum, count) = ledger.arm_history(arm);
    let mean = (sum + current_round_cost) / f64::from(count + 1);
    let rounds = (ledger.total_budget() / mean).floor();
    if rounds >= f64::from(u32::MAX) {
        u32::MAX
    } else {
        (rounds as u32).max(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PolicyConfig {
    pub kind: PolicyKind,
    pub t_max: u32,
    /// Length of BARA's pure-exploration stage.
    pub t0: u32,
    pub kernel: KernelParams,
    pub beta: BetaSchedule,
    /// Stage-1 rounds may spend at most `stage1_cap_factor * B_total / T_max`.
    pub stage1_cap_factor: f64,
    pub max_nodes: usize,
    pub prior_mean: f64,
    pub seed: u64,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        Self {
            kind: PolicyKind::Bara,
            t_max: 200,
            t0: 40,
            kernel: KernelParams::default(),
            beta: BetaSchedule::default(),
            stage1_cap_factor: 2.0,
            max_nodes: DEFAULT_MAX_NODES,
            prior_mean: 0.0,
            seed: 0,
        }
    }
}

impl PolicyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.t_max == 0 {
            return Err(Error::InvalidConfig("t_max must be at least 1".into()));
        }
        if self.kind == PolicyKind::Bara && self.t0 >= self.t_max {
            return Err(Error::InvalidConfig(format!("t0 ({}) must be below t_max ({})", self.t0, self.t_max)));
        }
        if self.max_nodes == 0 {
            return Err(Error::InvalidConfig("max_nodes must be at least 1".into()));
        }
        if !(self.stage1_cap_factor > 0.0) {
            return Err(Error::InvalidConfig("stage1_cap_factor must be positive".into()));
        }
        self.kernel.validate()
    }
}

/// Everything learned from executed rounds: the record matrix and the GP
/// observation locations.
#[derive(Debug, Clone)]
pub struct Predictor {
    matrix: RecordMatrix,
    gp: GpState,
    extrapolator: NewtonExtrapolator,
    initial_accuracy: f64,
}

impl Predictor {
    pub fn new(num_arms: u32, config: &PolicyConfig, initial_accuracy: f64) -> Self {
        Self {
            matrix: RecordMatrix::new(num_arms),
            gp: GpState::with_prior_mean(config.kernel, config.prior_mean),
            extrapolator: NewtonExtrapolator::new(config.max_nodes),
            initial_accuracy,
        }
    }

    pub fn matrix(&self) -> &RecordMatrix {
        &self.matrix
    }

    pub fn gp(&self) -> &GpState {
        &self.gp
    }

    pub fn observe(&mut self, round: u32, arm: u32, delta: f64) -> Result<()> {
        self.matrix.record(round, arm, delta)?;
        self.gp.push(round, arm)
    }

    /// Estimated final accuracy of playing `arm` for `horizon` rounds.
    pub fn estimate(&self, arm: u32, horizon: u32) -> Result<f64> {
        self.extrapolator
            .final_accuracy_estimate(&self.matrix, arm, horizon, self.initial_accuracy)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    /// Recruit this many clients.
    Select(u32),
    /// Nothing is affordable under this round's budget; no training.
    Skip,
    /// The total budget cannot cover the round; stop training.
    Stop,
}

impl Decision {
    /// Winner count, with 0 standing for both skip and stop.
    pub fn count(self) -> u32 {
        match self {
            Decision::Select(n) => n,
            Decision::Skip | Decision::Stop => 0,
        }
    }
}

pub struct Allocator {
    config: PolicyConfig,
    rng: ChaCha8Rng,
    last_posterior: Option<Posterior>,
}

impl Allocator {
    pub fn new(config: PolicyConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self { config, rng: stream(config.seed, Stream::Policy), last_posterior: None })
    }

    pub fn config(&self) -> &PolicyConfig {
        &self.config
    }

    /// Posterior behind the most recent UCB decision.
    pub fn last_posterior(&self) -> Option<&Posterior> {
        self.last_posterior.as_ref()
    }

    /// Horizon of `arm` as of this round, never beyond `t_max`.
    pub fn horizon(&self, ledger: &BudgetLedger, ranked: &RankedQuotes, arm: u32) -> Result<u32> {
        let cost = budget_for_count(ranked, arm as usize)?;
        Ok(estimate_horizon(ledger, arm, cost).min(self.config.t_max))
    }

    pub fn decide(
        &mut self,
        t: u32,
        quotes: &[ClientQuote],
        ledger: &BudgetLedger,
        predictor: &Predictor,
    ) -> Result<Decision> {
        let ranked = rank_clients(quotes)?;
        if ranked.len() < 2 {
            return Err(Error::CountOutOfRange { n: 1, quotes: ranked.len() });
        }
        let arms = ranked.len() as u32 - 1;
        let total = ledger.total_budget();

        let n = match self.config.kind {
            kind @ (PolicyKind::Even | PolicyKind::Increasing | PolicyKind::Decreasing) => {
                let limit = round_budget_baseline(kind, t, self.config.t_max, total)?;
                match winners_for_budget(&ranked, limit) {
                    0 => return Ok(Decision::Skip),
                    n => n as u32,
                }
            }
            PolicyKind::Random => self.rng.random_range(1..=arms),
            PolicyKind::Bara if t <= self.config.t0 => {
                let drawn = self.rng.random_range(1..=arms);
                let cap = self.config.stage1_cap_factor * total / f64::from(self.config.t_max);
                if budget_for_count(&ranked, drawn as usize)? <= cap {
                    drawn
                } else {
                    match winners_for_budget(&ranked, cap) {
                        0 => return Ok(Decision::Skip),
                        n => n as u32,
                    }
                }
            }
            PolicyKind::Bara => self.ucb_choice(t, &ranked, ledger, predictor)?,
        };

        if ledger.can_afford(budget_for_count(&ranked, n as usize)?) {
            Ok(Decision::Select(n))
        } else {
            Ok(Decision::Stop)
        }
    }

    fn ucb_choice(&mut self, t: u32, ranked: &RankedQuotes, ledger: &BudgetLedger, predictor: &Predictor) -> Result<u32> {
        let gp = predictor.gp();
        // Observation values are re-estimated every round from the latest
        // completed record matrix.
        let mut estimates: BTreeMap<u32, f64> = BTreeMap::new();
        let mut values = Vec::with_capacity(gp.len());
        for &(_, arm) in gp.observations() {
            let value = match estimates.get(&arm) {
                Some(&v) => v,
                None => {
                    let v = predictor.estimate(arm, self.horizon(ledger, ranked, arm)?)?;
                    estimates.insert(arm, v);
                    v
                }
            };
            values.push(value);
        }
        let targets: Vec<u32> = (1..ranked.len() as u32).collect();
        let posterior = gp.posterior(&targets, t, &values)?;
        let n = ucb_select(&posterior, self.config.beta.sqrt_beta(t));
        self.last_posterior = Some(posterior);
        Ok(n)
    }
}
