//! Reward-budget allocation for federated learning with reverse-auction
//! incentives.
//!
//! Each round every client bids; the parameter server recruits the `n`
//! best quality-per-bid clients and pays them at the (n+1)-th price. The
//! crate decides `n` round by round under a total budget:
//!
//! * [`auction`]: ranking, (n+1)-th price payments, budget-for-count.
//! * [`interpolation`]: the sparse record of observed accuracy gains and its
//!   Newton divided-difference completion.
//! * [`gp`]: time-varying GP over cohort sizes and the UCB rule.
//! * [`allocator`]: the EA/MIA/MDA/RA baselines and the two-stage BARA policy.
//! * [`environment`]: synthetic and trace-replay worlds, oracle best arm.
//! * [`harness`]: the round loop, regret, batches; [`output`] writes CSVs.

pub mod allocator;
pub mod auction;
pub mod environment;
pub mod error;
pub mod exec;
pub mod gp;
pub mod harness;
pub mod interpolation;
pub mod output;
pub mod rng;

pub use allocator::{Allocator, BudgetLedger, Decision, PolicyConfig, PolicyKind, Predictor};
pub use auction::{budget_for_count, rank_clients, run_auction, winners_for_budget, AuctionOutcome, ClientQuote, RankedQuotes};
pub use environment::{oracle_best_arm, Environment, LearningCurve, Oracle, SyntheticParams, SyntheticWorld, TraceWorld};
pub use error::{Error, Result};
pub use exec::Execution;
pub use gp::{beta, kernel, ucb_select, BetaSchedule, GpState, KernelParams, Posterior};
pub use harness::{batch, regret_series, run, run_policy, BatchResult, EnvironmentSpec, RunConfig, RunResult};
pub use interpolation::{divided_differences, NewtonExtrapolator, NewtonPolynomial, RecordMatrix};
