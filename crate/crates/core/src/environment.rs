//! Federated-learning world models.
//!
//! A world hands out one quote per client every round and reports how much
//! the global model's accuracy moves when a cohort of a given size trains.
//! [`SyntheticWorld`] uses a parametric learning curve; [`TraceWorld`]
//! replays a recorded `(round, arm) -> delta` table.

use std::collections::BTreeMap;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::auction::{budget_for_count, rank_clients, ClientQuote, RankedQuotes};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::rng::{round_stream, Stream};

pub trait Environment: Send + Sync {
    fn num_clients(&self) -> usize;

    fn initial_accuracy(&self) -> f64;

    /// Quotes for round `t`; a pure function of the world and `t`.
    fn sample_quotes(&self, t: u32) -> Vec<ClientQuote>;

    /// Accuracy change when `n` clients train in round `t`.
    fn step(&self, t: u32, n: u32, current_accuracy: f64) -> Result<f64>;

    /// Last round the world can simulate, if bounded.
    fn max_rounds(&self) -> Option<u32> {
        None
    }
}

/// Uniform i.i.d. bids with unit quality, drawn from the per-round bid stream.
fn uniform_quotes(seed: u64, t: u32, clients: usize, low: f64, high: f64) -> Vec<ClientQuote> {
    let mut rng = round_stream(seed, Stream::Bids, t);
    (0..clients as u32)
        .map(|id| {
            let bid = if low == high { low } else { rng.random_range(low..=high) };
            ClientQuote::new(id, bid, 1.0)
        })
        .collect()
}

/// Per-arm plateau `A(n)` and convergence rate `ρ(n)`.
///
/// `A(n) = scale * (1 - depth * exp(-n / width))` and
/// `ρ(n) = rate_base + rate_slope * n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LearningCurve {
    pub asymptote_scale: f64,
    pub asymptote_depth: f64,
    pub asymptote_width: f64,
    pub rate_base: f64,
    pub rate_slope: f64,
}

impl Default for LearningCurve {
    fn default() -> Self {
        Self {
            asymptote_scale: 0.95,
            asymptote_depth: 0.5,
            asymptote_width: 10.0,
            rate_base: 0.02,
            rate_slope: 0.001,
        }
    }
}

impl LearningCurve {
    pub fn asymptote(&self, n: u32) -> f64 {
        self.asymptote_scale * (1.0 - self.asymptote_depth * (-f64::from(n) / self.asymptote_width).exp())
    }

    pub fn rate(&self, n: u32) -> f64 {
        self.rate_base + self.rate_slope * f64::from(n)
    }

    pub fn validate(&self, num_arms: u32) -> Result<()> {
        if !(self.asymptote_width > 0.0 && (0.0..=1.0).contains(&self.asymptote_depth) && self.rate_slope >= 0.0) {
            return Err(Error::InvalidConfig(format!("malformed learning curve {self:?}")));
        }
        for n in 1..=num_arms {
            let (a, r) = (self.asymptote(n), self.rate(n));
            if !(a > 0.0 && a <= 1.0) {
                return Err(Error::InvalidConfig(format!("asymptote A({n}) = {a} outside (0, 1]")));
            }
            if !(r > 0.0 && r < 1.0) {
                return Err(Error::InvalidConfig(format!("rate ρ({n}) = {r} outside (0, 1)")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticParams {
    pub bid_low: f64,
    pub bid_high: f64,
    pub curve: LearningCurve,
    pub noise_std: f64,
    pub initial_accuracy: f64,
}

impl Default for SyntheticParams {
    fn default() -> Self {
        Self {
            bid_low: 0.5,
            bid_high: 1.5,
            curve: LearningCurve::default(),
            noise_std: 0.0,
            initial_accuracy: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticWorld {
    params: SyntheticParams,
    num_clients: usize,
    seed: u64,
}

impl SyntheticWorld {
    pub fn new(params: SyntheticParams, num_clients: usize, seed: u64) -> Result<Self> {
        if num_clients < 2 {
            return Err(Error::InvalidConfig(format!("need at least 2 clients, got {num_clients}")));
        }
        let p = &params;
        if !(p.bid_low > 0.0 && p.bid_low <= p.bid_high && p.bid_high.is_finite()) {
            return Err(Error::InvalidConfig(format!("bid range [{}, {}] invalid", p.bid_low, p.bid_high)));
        }
        if !(p.noise_std >= 0.0 && p.noise_std.is_finite()) {
            return Err(Error::InvalidConfig(format!("noise_std {} invalid", p.noise_std)));
        }
        if !(0.0..=1.0).contains(&p.initial_accuracy) {
            return Err(Error::InvalidConfig(format!("initial accuracy {} outside [0, 1]", p.initial_accuracy)));
        }
        p.curve.validate(num_clients as u32 - 1)?;
        Ok(Self { params, num_clients, seed })
    }

    pub fn params(&self) -> &SyntheticParams {
        &self.params
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    fn noise(&self, t: u32) -> f64 {
        if self.params.noise_std == 0.0 {
            return 0.0;
        }
        let normal = Normal::new(0.0, self.params.noise_std).expect("validated noise_std");
        normal.sample(&mut round_stream(self.seed, Stream::Noise, t))
    }
}

impl Environment for SyntheticWorld {
    fn num_clients(&self) -> usize {
        self.num_clients
    }

    fn initial_accuracy(&self) -> f64 {
        self.params.initial_accuracy
    }

    fn sample_quotes(&self, t: u32) -> Vec<ClientQuote> {
        uniform_quotes(self.seed, t, self.num_clients, self.params.bid_low, self.params.bid_high)
    }

    fn step(&self, t: u32, n: u32, current_accuracy: f64) -> Result<f64> {
        let max_arm = self.num_clients as u32 - 1;
        if n == 0 || n > max_arm {
            return Err(Error::ArmOutOfRange { arm: n, max: max_arm });
        }
        let curve = &self.params.curve;
        let delta = (curve.asymptote(n) - current_accuracy) * curve.rate(n) + self.noise(t);
        Ok((current_accuracy + delta).clamp(0.0, 1.0) - current_accuracy)
    }
}

#[derive(Debug, Deserialize)]
struct DeltaRow {
    round: u32,
    arm: u32,
    delta_accuracy: f64,
}

#[derive(Debug, Deserialize)]
struct BidRow {
    round: u32,
    client_id: u32,
    bid: f64,
}

/// Replays a complete `(round, arm)` grid of recorded accuracy deltas.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceWorld {
    num_clients: usize,
    rounds: u32,
    deltas: Vec<f64>,
    bids: BTreeMap<u32, Vec<ClientQuote>>,
    fallback_bids: (f64, f64),
    initial_accuracy: f64,
    seed: u64,
}

impl TraceWorld {
    /// Builds a trace from `(round, arm, delta)` rows covering every round in
    /// `1..=R` and every arm in `1..N`. Recorded bids are optional; rounds
    /// without them draw uniform bids from `fallback_bids`.
    pub fn from_rows(
        num_clients: usize,
        rows: impl IntoIterator<Item = (u32, u32, f64)>,
        bid_rows: impl IntoIterator<Item = (u32, u32, f64)>,
        initial_accuracy: f64,
        fallback_bids: (f64, f64),
        seed: u64,
    ) -> Result<Self> {
        if num_clients < 2 {
            return Err(Error::InvalidConfig(format!("need at least 2 clients, got {num_clients}")));
        }
        let arms = num_clients as u32 - 1;
        let mut table = BTreeMap::new();
        for (round, arm, delta) in rows {
            if arm == 0 || arm > arms {
                return Err(Error::ArmOutOfRange { arm, max: arms });
            }
            if !(-1.0..=1.0).contains(&delta) {
                return Err(Error::DeltaOutOfRange(delta));
            }
            if round == 0 || table.insert((round, arm), delta).is_some() {
                return Err(Error::InvalidConfig(format!("duplicate or zero trace entry ({round}, {arm})")));
            }
        }
        let rounds = table.keys().map(|&(t, _)| t).max().unwrap_or(0);
        if rounds == 0 {
            return Err(Error::InvalidConfig("empty trace".into()));
        }
        let mut deltas = Vec::with_capacity((rounds * arms) as usize);
        for t in 1..=rounds {
            for n in 1..=arms {
                let d = table.get(&(t, n)).ok_or(Error::TraceIncomplete { round: t, arm: n })?;
                deltas.push(*d);
            }
        }

        let mut bids: BTreeMap<u32, Vec<ClientQuote>> = BTreeMap::new();
        for (round, client_id, bid) in bid_rows {
            bids.entry(round).or_default().push(ClientQuote::new(client_id, bid, 1.0));
        }
        for (round, quotes) in &mut bids {
            quotes.sort_by_key(|q| q.client_id);
            let ids_ok = quotes.iter().enumerate().all(|(i, q)| q.client_id == i as u32);
            if quotes.len() != num_clients || !ids_ok {
                return Err(Error::InvalidConfig(format!(
                    "bid log round {round} must list clients 0..{num_clients} exactly once"
                )));
            }
            if let Some(q) = quotes.iter().find(|q| !(q.bid > 0.0 && q.bid.is_finite())) {
                return Err(Error::InvalidQuote { client_id: q.client_id, bid: q.bid, quality: q.quality });
            }
        }
        let (lo, hi) = fallback_bids;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return Err(Error::InvalidConfig(format!("bid range [{lo}, {hi}] invalid")));
        }
        if !(0.0..=1.0).contains(&initial_accuracy) {
            return Err(Error::InvalidConfig(format!("initial accuracy {initial_accuracy} outside [0, 1]")));
        }
        Ok(Self { num_clients, rounds, deltas, bids, fallback_bids, initial_accuracy, seed })
    }

    /// Reads `round,arm,delta_accuracy` and optionally `round,client_id,bid` CSVs.
    pub fn from_csv(
        num_clients: usize,
        deltas_path: &Path,
        bids_path: Option<&Path>,
        initial_accuracy: f64,
        fallback_bids: (f64, f64),
        seed: u64,
    ) -> Result<Self> {
        let rows = csv::Reader::from_path(deltas_path)?
            .deserialize::<DeltaRow>()
            .map(|r| r.map(|r| (r.round, r.arm, r.delta_accuracy)))
            .collect::<Result<Vec<_>, _>>()?;
        let bid_rows = match bids_path {
            Some(p) => csv::Reader::from_path(p)?
                .deserialize::<BidRow>()
                .map(|r| r.map(|r| (r.round, r.client_id, r.bid)))
                .collect::<Result<Vec<_>, _>>()?,
            None => Vec::new(),
        };
        Self::from_rows(num_clients, rows, bid_rows, initial_accuracy, fallback_bids, seed)
    }

    pub fn rounds(&self) -> u32 {
        self.rounds
    }

    pub fn delta(&self, t: u32, n: u32) -> Option<f64> {
        let arms = self.num_clients as u32 - 1;
        if t == 0 || t > self.rounds || n == 0 || n > arms {
            return None;
        }
        Some(self.deltas[((t - 1) * arms + (n - 1)) as usize])
    }
}

impl Environment for TraceWorld {
    fn num_clients(&self) -> usize {
        self.num_clients
    }

    fn initial_accuracy(&self) -> f64 {
        self.initial_accuracy
    }

    fn sample_quotes(&self, t: u32) -> Vec<ClientQuote> {
        match self.bids.get(&t) {
            Some(q) => q.clone(),
            None => uniform_quotes(self.seed, t, self.num_clients, self.fallback_bids.0, self.fallback_bids.1),
        }
    }

    fn step(&self, t: u32, n: u32, _current_accuracy: f64) -> Result<f64> {
        self.delta(t, n).ok_or(Error::TraceIncomplete { round: t, arm: n })
    }

    fn max_rounds(&self) -> Option<u32> {
        Some(self.rounds)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArmOutcome {
    pub arm: u32,
    pub mean_spend: f64,
    pub horizon: u32,
    pub final_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Oracle {
    /// Best fixed arm `n*`.
    pub arm: u32,
    /// Final accuracy reached by playing `n*` every round.
    pub accuracy: f64,
    pub arms: Vec<ArmOutcome>,
}

/// Enumerates every fixed arm, playing it for as many rounds as its mean
/// spend allows (capped at `t_max`) without enforcing the budget round by
/// round, and keeps the one with the highest final accuracy. Ties go to the
/// smallest arm.
pub fn oracle_best_arm(env: &dyn Environment, total_budget: f64, t_max: u32, exec: Execution) -> Result<Oracle> {
    let quote_rounds = env.max_rounds().map_or(t_max, |r| r.min(t_max)).max(1);
    let ranked: Vec<RankedQuotes> = (1..=quote_rounds)
        .map(|t| rank_clients(&env.sample_quotes(t)))
        .collect::<Result<_>>()?;
    let arms: Vec<u32> = (1..env.num_clients() as u32).collect();

    let outcomes = exec.map(&arms, |&arm| -> Result<ArmOutcome> {
        let mut spend = 0.0;
        for r in &ranked {
            spend += budget_for_count(r, arm as usize)?;
        }
        let mean_spend = spend / ranked.len() as f64;
        let horizon = horizon_for(total_budget, mean_spend, quote_rounds);
        let mut accuracy = env.initial_accuracy();
        for t in 1..=horizon {
            accuracy = (accuracy + env.step(t, arm, accuracy)?).clamp(0.0, 1.0);
        }
        Ok(ArmOutcome { arm, mean_spend, horizon, final_accuracy: accuracy })
    });
    let arms = outcomes.into_iter().collect::<Result<Vec<_>>>()?;

    let best = arms
        .iter()
        .fold(None::<&ArmOutcome>, |best, a| match best {
            Some(b) if b.final_accuracy >= a.final_accuracy => Some(b),
            _ => Some(a),
        })
        .expect("at least one arm");
    Ok(Oracle { arm: best.arm, accuracy: best.final_accuracy, arms })
}

fn horizon_for(total_budget: f64, mean_spend: f64, cap: u32) -> u32 {
    let rounds = (total_budget / mean_spend).floor();
    if rounds >= f64::from(cap) {
        cap
    } else {
        rounds as u32
    }
}
