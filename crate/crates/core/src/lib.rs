//! Streaming (one-way) multi-armed bandits.
//!
//! Bandits arrive one at a time. At each step the player either pulls the
//! current bandit or moves on, and a bandit that has been passed can never be
//! revisited. Every pull yields a loss (a Bernoulli head, or the bandit's mean
//! for fixed-payout bandits) and the goal is to minimise total loss over a
//! budget of `K` pulls.
//!
//! Crate layout:
//! - [`distributions`]: the laws `F(x) = C·x^m` that bandit means are drawn from.
//! - [`stream`]: the episode engine and the [`Strategy`](stream::Strategy) decision contract.
//! - [`strategies`]: threshold strategies for known distributions plus baselines.
//! - [`bounds`]: β/η recursions, asymptotes, loss bounds and Beta-posterior closed forms.
//! - [`estimation`]: first-head proxies, the pooled-minimum density estimator and
//!   the two-phase adaptive strategy for unknown distributions.
//! - [`harness`]: seeded Monte Carlo experiments and bound verdicts.
//! - [`report`]: CSV/JSON output.
//! - [`verify`]: the acceptance suite shared by the test target and the CLI.

pub mod bounds;
pub mod distributions;
pub mod error;
pub mod estimation;
pub mod harness;
pub mod report;
pub mod rng;
pub mod strategies;
pub mod stream;
pub mod verify;

mod special;

pub use distributions::{DistributionKind, DistributionSpec};
pub use error::{Error, Result};
pub use estimation::{EstimateResult, EstimatorConfig};
pub use harness::{ExperimentConfig, MonteCarloSummary};
pub use strategies::StrategySpec;
pub use stream::{Action, BanditStream, EpisodeResult, Observation, PayoutModel, Strategy};
