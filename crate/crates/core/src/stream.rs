//! The one-way bandit stream and the episode engine.
//!
//! The engine hands the strategy an [`Observation`] of the current bandit and
//! applies its [`Action`]. `Pull` spends one unit of budget; `Advance` moves
//! to the next bandit for free and forgets the counts. The last bandit
//! absorbs the stream: an `Advance` there is coerced to `Pull`, so every
//! episode spends exactly `K` pulls.

use std::fmt;
use std::str::FromStr;

use rand::RngCore;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::distributions::DistributionSpec;
use crate::error::{Error, Result};
use crate::estimation::EstimateResult;
use crate::rng::SplitMix64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PayoutModel {
    /// Each pull is a coin flip with heads (loss 1) probability `p_i`.
    Bernoulli,
    /// Each pull returns exactly `p_i`.
    FixedPayout,
}

impl fmt::Display for PayoutModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PayoutModel::Bernoulli => "bernoulli",
            PayoutModel::FixedPayout => "fixed",
        })
    }
}

impl FromStr for PayoutModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bernoulli" | "ber" => Ok(PayoutModel::Bernoulli),
            "fixed" | "fixed-payout" | "fixedpayout" => Ok(PayoutModel::FixedPayout),
            _ => Err(Error::parse(
                "payout model",
                s,
                "expected `bernoulli` or `fixed`",
            )),
        }
    }
}

/// Source of the latent means `p_1, …, p_N`, read strictly in stream order.
pub trait MeanSource {
    fn len(&self) -> usize;

    /// Mean of bandit `index` (1-based). Indices are requested in nondecreasing order.
    fn mean_at(&mut self, index: usize) -> f64;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl MeanSource for Vec<f64> {
    fn len(&self) -> usize {
        <[f64]>::len(self)
    }

    fn mean_at(&mut self, index: usize) -> f64 {
        self[index - 1]
    }
}

/// Means drawn on demand from `dist` with a dedicated generator.
///
/// The `i`-th mean is always the `i`-th draw of the generator, so the
/// sequence is the same however far a strategy gets into the stream.
#[derive(Debug, Clone)]
pub struct LazyMeans {
    dist: DistributionSpec,
    len: usize,
    rng: SplitMix64,
    drawn: usize,
    current: f64,
}

impl LazyMeans {
    pub fn new(dist: DistributionSpec, len: usize, rng: SplitMix64) -> Self {
        Self {
            dist,
            len,
            rng,
            drawn: 0,
            current: f64::NAN,
        }
    }

    #[inline]
    fn draw(&mut self) -> f64 {
        self.drawn += 1;
        self.dist.quantile_unchecked(self.rng.next_open01())
    }

    /// Draws the whole remaining sequence and returns `(argmin index, min)`.
    pub fn scan_min(mut self) -> (usize, f64) {
        let mut best = (0, f64::INFINITY);
        for index in 1..=self.len {
            let p = self.draw();
            if p < best.1 {
                best = (index, p);
            }
        }
        best
    }

    /// Materializes all means.
    pub fn collect_all(mut self) -> Vec<f64> {
        (0..self.len).map(|_| self.draw()).collect()
    }
}

impl MeanSource for LazyMeans {
    fn len(&self) -> usize {
        self.len
    }

    fn mean_at(&mut self, index: usize) -> f64 {
        assert!(
            index >= self.drawn && index <= self.len,
            "means are read in stream order"
        );
        while self.drawn < index {
            self.current = self.draw();
        }
        self.current
    }
}

/// The streamed bandits with a one-way cursor.
#[derive(Debug, Clone)]
pub struct BanditStream<M = LazyMeans> {
    means: M,
    payout: PayoutModel,
    cursor: usize,
    current: f64,
}

impl<M: MeanSource> BanditStream<M> {
    pub fn new(mut means: M, payout: PayoutModel) -> Result<Self> {
        if means.is_empty() {
            return Err(Error::InvalidParameter(
                "a stream needs at least one bandit".into(),
            ));
        }
        let current = means.mean_at(1);
        Ok(Self {
            means,
            payout,
            cursor: 1,
            current,
        })
    }

    pub fn len(&self) -> usize {
        self.means.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Current bandit index, 1-based.
    pub fn cursor(&self) -> usize {
        self.cursor
    }

    pub fn payout_model(&self) -> PayoutModel {
        self.payout
    }

    pub fn at_last(&self) -> bool {
        self.cursor == self.len()
    }

    /// Latent mean of the current bandit. Benchmarks and tests only; strategies never see it.
    pub fn current_mean(&self) -> f64 {
        self.current
    }

    /// Moves to the next bandit. Returns `false` (and stays) at the last one.
    pub fn advance(&mut self) -> bool {
        if self.at_last() {
            return false;
        }
        self.cursor += 1;
        self.current = self.means.mean_at(self.cursor);
        true
    }

    /// One pull of the current bandit.
    #[inline]
    pub fn pull<R: RngCore + ?Sized>(&mut self, rng: &mut R) -> f64 {
        let p = self.current;
        match self.payout {
            PayoutModel::FixedPayout => p,
            PayoutModel::Bernoulli => {
                let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
                if u < p {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Total loss of `count` pulls of the current bandit, drawn in one step.
    pub fn pull_many<R: RngCore + ?Sized>(&mut self, count: u64, rng: &mut R) -> f64 {
        let p = self.current;
        match self.payout {
            PayoutModel::FixedPayout => p * count as f64,
            PayoutModel::Bernoulli => {
                if count == 0 || p <= 0.0 {
                    0.0
                } else if p >= 1.0 {
                    count as f64
                } else {
                    let binomial = Binomial::new(count, p).expect("p lies in (0, 1)");
                    binomial.sample(rng) as f64
                }
            }
        }
    }
}

/// What a strategy sees before each decision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    /// Pulls of the current bandit so far.
    pub flips: u64,
    /// Unit losses seen from the current bandit. In fixed-payout mode this is
    /// `floor(cumulative loss)`.
    pub heads: u64,
    /// 1-based index of the current bandit.
    pub bandit_index: usize,
    pub remaining_budget: u64,
    pub payout_model: PayoutModel,
    /// The bandit's payout, known after its first pull in fixed-payout mode.
    pub revealed_mean: Option<f64>,
}

impl Observation {
    pub fn fresh(bandit_index: usize, remaining_budget: u64, payout_model: PayoutModel) -> Self {
        Self {
            flips: 0,
            heads: 0,
            bandit_index,
            remaining_budget,
            payout_model,
            revealed_mean: None,
        }
    }

    pub fn tails(&self) -> u64 {
        self.flips - self.heads
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Action {
    Pull,
    Advance,
}

/// The decision contract: observation in, `Pull` or `Advance` out.
pub trait Strategy {
    fn decide(&mut self, obs: &Observation) -> Result<Action>;

    /// `true` once every future decision at the current bandit is `Pull`.
    /// Lets the engine settle the rest of the budget in one draw.
    fn is_settled(&self, _obs: &Observation) -> bool {
        false
    }

    /// Phase-one estimate, for strategies that learn the distribution.
    fn estimate(&self) -> Option<EstimateResult> {
        None
    }
}

impl<S: Strategy + ?Sized> Strategy for Box<S> {
    fn decide(&mut self, obs: &Observation) -> Result<Action> {
        (**self).decide(obs)
    }

    fn is_settled(&self, obs: &Observation) -> bool {
        (**self).is_settled(obs)
    }

    fn estimate(&self) -> Option<EstimateResult> {
        (**self).estimate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub total_loss: f64,
    pub flips_used: u64,
    pub loss_per_flip: f64,
    /// Bandit on which the final pull happened.
    pub settled_index: usize,
    pub bandits_visited: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimate: Option<EstimateResult>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TraceAction {
    Pull,
    Advance,
    /// The remaining budget spent on the current bandit in one block.
    Settle,
}

impl fmt::Display for TraceAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TraceAction::Pull => "pull",
            TraceAction::Advance => "advance",
            TraceAction::Settle => "settle",
        })
    }
}

/// One decision of an episode; `flips`/`heads` are the counts the strategy saw.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub bandit_index: usize,
    pub flips: u64,
    pub heads: u64,
    pub action: TraceAction,
    pub loss: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EpisodeOptions {
    /// Spend the remaining budget in one draw once the strategy is settled.
    pub settle_fast_path: bool,
}

impl Default for EpisodeOptions {
    fn default() -> Self {
        Self {
            settle_fast_path: true,
        }
    }
}

/// Runs one episode with the payout generator seeded directly from `seed`.
pub fn run_episode<M: MeanSource, S: Strategy + ?Sized>(
    stream: &mut BanditStream<M>,
    strategy: &mut S,
    k: u64,
    seed: u64,
) -> Result<EpisodeResult> {
    let mut rng = SplitMix64::new(seed);
    run_episode_with(
        stream,
        strategy,
        k,
        &mut rng,
        EpisodeOptions::default(),
        None,
    )
}

pub fn run_episode_with<M, S, R>(
    stream: &mut BanditStream<M>,
    strategy: &mut S,
    k: u64,
    rng: &mut R,
    options: EpisodeOptions,
    mut trace: Option<&mut Vec<TraceRow>>,
) -> Result<EpisodeResult>
where
    M: MeanSource,
    S: Strategy + ?Sized,
    R: RngCore + ?Sized,
{
    if k == 0 {
        return Err(Error::InvalidParameter("pull budget k must be >= 1".into()));
    }
    let model = stream.payout_model();
    let mut obs = Observation::fresh(stream.cursor(), k, model);
    let mut total_loss = 0.0;
    let mut visited = 1;

    while obs.remaining_budget > 0 {
        if options.settle_fast_path && strategy.is_settled(&obs) {
            let block = obs.remaining_budget;
            let loss = stream.pull_many(block, rng);
            total_loss += loss;
            if let Some(rows) = trace.as_deref_mut() {
                rows.push(TraceRow {
                    bandit_index: obs.bandit_index,
                    flips: obs.flips,
                    heads: obs.heads,
                    action: TraceAction::Settle,
                    loss,
                });
            }
            break;
        }

        let mut action = strategy.decide(&obs)?;
        if action == Action::Advance && stream.at_last() {
            action = Action::Pull;
        }
        match action {
            Action::Pull => {
                let loss = stream.pull(rng);
                total_loss += loss;
                if let Some(rows) = trace.as_deref_mut() {
                    rows.push(TraceRow {
                        bandit_index: obs.bandit_index,
                        flips: obs.flips,
                        heads: obs.heads,
                        action: TraceAction::Pull,
                        loss,
                    });
                }
                obs.flips += 1;
                obs.remaining_budget -= 1;
                match model {
                    PayoutModel::Bernoulli => obs.heads += loss as u64,
                    PayoutModel::FixedPayout => {
                        obs.heads = (loss * obs.flips as f64 + 1e-9).floor() as u64;
                        obs.revealed_mean = Some(loss);
                    }
                }
            }
            Action::Advance => {
                if let Some(rows) = trace.as_deref_mut() {
                    rows.push(TraceRow {
                        bandit_index: obs.bandit_index,
                        flips: obs.flips,
                        heads: obs.heads,
                        action: TraceAction::Advance,
                        loss: 0.0,
                    });
                }
                stream.advance();
                visited += 1;
                obs = Observation::fresh(stream.cursor(), obs.remaining_budget, model);
            }
        }
    }

    Ok(EpisodeResult {
        total_loss,
        flips_used: k,
        loss_per_flip: total_loss / k as f64,
        settled_index: stream.cursor(),
        bandits_visited: visited,
        estimate: strategy.estimate(),
    })
}
