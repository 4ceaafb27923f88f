//! Seeded Monte Carlo runs of a strategy against a stream law.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{lower_bound_total, upper_bound_per_flip, BoundedStrategy};
use crate::distributions::DistributionSpec;
use crate::error::{Error, Result};
use crate::rng::{substream, StreamTag};
use crate::strategies::{run_oracle, StrategySpec};
use crate::stream::{
    run_episode_with, BanditStream, EpisodeOptions, EpisodeResult, LazyMeans, PayoutModel, TraceRow,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dist: DistributionSpec,
    pub strategy: StrategySpec,
    pub n: u64,
    pub k: u64,
    pub episodes: u64,
    pub master_seed: u64,
    pub payout: PayoutModel,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.k == 0 || self.episodes == 0 {
            return Err(Error::InvalidParameter(format!(
                "n, k and episodes must all be >= 1 (n={}, k={}, episodes={})",
                self.n, self.k, self.episodes
            )));
        }
        if usize::try_from(self.n).is_err() {
            return Err(Error::InvalidParameter(format!(
                "n={} is too large",
                self.n
            )));
        }
        Ok(())
    }

    fn means(&self, episode: u64) -> LazyMeans {
        LazyMeans::new(
            self.dist,
            self.n as usize,
            substream(self.master_seed, episode, StreamTag::Means),
        )
    }

    fn play(&self, episode: u64, trace: Option<&mut Vec<TraceRow>>) -> Result<EpisodeResult> {
        let mut payouts = substream(self.master_seed, episode, StreamTag::Payouts);
        if self.strategy == StrategySpec::Oracle {
            return run_oracle(self.means(episode), self.payout, self.k, &mut payouts);
        }
        let mut strategy = self.strategy.build(self.n, self.k, &self.dist)?;
        let mut stream = BanditStream::new(self.means(episode), self.payout)?;
        let options = EpisodeOptions {
            settle_fast_path: trace.is_none(),
        };
        run_episode_with(
            &mut stream,
            &mut strategy,
            self.k,
            &mut payouts,
            options,
            trace,
        )
    }

    /// Plays episode `episode` (0-based); a pure function of the config.
    pub fn run_episode(&self, episode: u64) -> Result<EpisodeResult> {
        self.validate()?;
        self.play(episode, None)
    }

    /// Plays one episode pull by pull and records every decision. The oracle
    /// records a single settle row.
    pub fn trace_episode(&self, episode: u64) -> Result<(EpisodeResult, Vec<TraceRow>)> {
        self.validate()?;
        let mut rows = Vec::new();
        let result = self.play(episode, Some(&mut rows))?;
        if self.strategy == StrategySpec::Oracle {
            rows.push(TraceRow {
                bandit_index: result.settled_index,
                flips: 0,
                heads: 0,
                action: crate::stream::TraceAction::Settle,
                loss: result.total_loss,
            });
        }
        Ok((result, rows))
    }
}

/// All episodes of an experiment, in episode order.
pub fn run_episodes(config: &ExperimentConfig) -> Result<Vec<EpisodeResult>> {
    config.validate()?;
    (0..config.episodes)
        .into_par_iter()
        .map(|e| config.play(e, None))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    #[serde(rename = "NA")]
    NotApplicable,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::NotApplicable => "NA",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundVerdict {
    pub name: String,
    pub reference: Option<f64>,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloSummary {
    pub episodes: u64,
    pub mean_total_loss: f64,
    pub std_error_total: f64,
    pub mean_loss_per_flip: f64,
    /// Standard error of the mean loss per flip.
    pub std_error: f64,
    /// Mean loss per flip minus the expected best mean of the stream.
    pub suboptimality: f64,
    pub bound_verdicts: Vec<BoundVerdict>,
}

impl MonteCarloSummary {
    pub fn verdict(&self, name: &str) -> Option<&BoundVerdict> {
        self.bound_verdicts.iter().find(|v| v.name == name)
    }
}

/// Mean and standard error, summed in slice order.
pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

pub const UPPER_BOUND: &str = "upper_per_flip";
pub const LOWER_BOUND: &str = "lower_total";

pub fn summarize(config: &ExperimentConfig, results: &[EpisodeResult]) -> MonteCarloSummary {
    let per_flip: Vec<f64> = results.iter().map(|r| r.loss_per_flip).collect();
    let totals: Vec<f64> = results.iter().map(|r| r.total_loss).collect();
    let (mean_loss_per_flip, std_error) = mean_and_se(&per_flip);
    let (mean_total_loss, std_error_total) = mean_and_se(&totals);
    let mut summary = MonteCarloSummary {
        episodes: results.len() as u64,
        mean_total_loss,
        std_error_total,
        mean_loss_per_flip,
        std_error,
        suboptimality: mean_loss_per_flip - config.dist.expected_min(config.n),
        bound_verdicts: Vec::new(),
    };
    summary.bound_verdicts = vec![
        upper_verdict(config, &summary),
        lower_verdict(config, &summary),
    ];
    summary
}

/// Upper bound on loss per flip for the known-law strategies, checked only
/// once the budget covers the asymptotic regime.
fn upper_verdict(config: &ExperimentConfig, s: &MonteCarloSummary) -> BoundVerdict {
    let dist = &config.dist;
    let n_eff = config.strategy.n_effective(config.n, config.k, dist);
    let bound = match config.strategy {
        StrategySpec::KnownUniform if dist.m() == 1 && dist.c() == 1.0 => Some((
            BoundedStrategy::KnownUniform,
            1,
            1.0,
            config.k >= n_eff.saturating_mul(n_eff),
        )),
        StrategySpec::KnownPower { m, c } => {
            let (m, c) = (m.unwrap_or(dist.m()), c.unwrap_or(dist.c()));
            let matches = m == dist.m() && c == dist.c();
            let floor = (n_eff as f64).powf((m as f64 + 1.0) / m as f64);
            Some((
                BoundedStrategy::KnownPower,
                m,
                c,
                matches && config.k as f64 >= floor,
            ))
        }
        _ => None,
    };
    match bound {
        None => BoundVerdict {
            name: UPPER_BOUND.into(),
            reference: None,
            verdict: Verdict::NotApplicable,
        },
        Some((kind, m, c, valid)) => {
            let reference = upper_bound_per_flip(kind, n_eff, m, c);
            let verdict = if !valid {
                Verdict::NotApplicable
            } else if s.mean_loss_per_flip - 3.0 * s.std_error <= reference {
                Verdict::Pass
            } else {
                Verdict::Fail
            };
            BoundVerdict {
                name: UPPER_BOUND.into(),
                reference: Some(reference),
                verdict,
            }
        }
    }
}

/// Lower bound on total loss, valid while the stream offers at least
/// `k^(m/(m+1))/2` bandits.
fn lower_verdict(config: &ExperimentConfig, s: &MonteCarloSummary) -> BoundVerdict {
    let m = config.dist.m();
    let reference = lower_bound_total(config.k, m);
    let floor = (config.k as f64).powf(m as f64 / (m as f64 + 1.0)) / 2.0;
    let valid = config.strategy != StrategySpec::Oracle
        && config.dist.c() == 1.0
        && config.n as f64 >= floor;
    let verdict = if !valid {
        Verdict::NotApplicable
    } else if s.mean_total_loss + 3.0 * s.std_error_total >= reference {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    BoundVerdict {
        name: LOWER_BOUND.into(),
        reference: Some(reference),
        verdict,
    }
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<MonteCarloSummary> {
    let results = run_episodes(config)?;
    Ok(summarize(config, &results))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedComparison {
    /// `loss_per_flip(a) − loss_per_flip(b)` per episode.
    pub deltas: Vec<f64>,
    pub mean_delta: f64,
    pub std_error: f64,
}

/// Runs `a` and `b` on identical mean sequences and compares per episode.
pub fn paired_compare(a: &ExperimentConfig, b: &ExperimentConfig) -> Result<PairedComparison> {
    if a.n != b.n || a.dist != b.dist || a.master_seed != b.master_seed || a.episodes != b.episodes
    {
        return Err(Error::ConfigMismatch(format!(
            "paired runs must share n, dist, seed and episodes: ({}, {}, {}, {}) vs ({}, {}, {}, {})",
            a.n, a.dist, a.master_seed, a.episodes, b.n, b.dist, b.master_seed, b.episodes
        )));
    }
    let ra = run_episodes(a)?;
    let rb = run_episodes(b)?;
    let deltas: Vec<f64> = ra
        .iter()
        .zip(&rb)
        .map(|(x, y)| x.loss_per_flip - y.loss_per_flip)
        .collect();
    let (mean_delta, std_error) = mean_and_se(&deltas);
    Ok(PairedComparison {
        deltas,
        mean_delta,
        std_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(
        strategy: &str,
        n: u64,
        k: u64,
        episodes: u64,
        payout: PayoutModel,
    ) -> ExperimentConfig {
        ExperimentConfig {
            dist: DistributionSpec::uniform(),
            strategy: strategy.parse().unwrap(),
            n,
            k,
            episodes,
            master_seed: 11,
            payout,
        }
    }

    #[test]
    fn oracle_hits_expected_minimum() {
        let s = run_experiment(&config(
            "oracle",
            100,
            1000,
            10_000,
            PayoutModel::FixedPayout,
        ))
        .unwrap();
        assert!((s.mean_loss_per_flip - 1.0 / 101.0).abs() <= 3.0 * s.std_error);
        assert!(s.suboptimality.abs() <= 3.0 * s.std_error);
        assert_eq!(
            s.verdict(LOWER_BOUND).unwrap().verdict,
            Verdict::NotApplicable
        );
    }

    #[test]
    fn always_first_pays_prior_mean() {
        for n in [1, 7, 1000] {
            let s = run_experiment(&config(
                "always-first",
                n,
                50,
                10_000,
                PayoutModel::Bernoulli,
            ))
            .unwrap();
            assert!(
                (s.mean_loss_per_flip - 0.5).abs() <= 3.0 * s.std_error,
                "{n}: {s:?}"
            );
        }
    }

    #[test]
    fn identical_configs_give_identical_summaries() {
        let c = config("known-uniform", 50, 2500, 300, PayoutModel::Bernoulli);
        let a = run_experiment(&c).unwrap();
        let b = run_experiment(&c).unwrap();
        assert_eq!(a, b);
        assert_eq!(
            a.mean_loss_per_flip.to_bits(),
            b.mean_loss_per_flip.to_bits()
        );
    }

    #[test]
    fn std_error_halves_when_episodes_quadruple() {
        let small = run_experiment(&config(
            "known-uniform",
            50,
            2500,
            1000,
            PayoutModel::Bernoulli,
        ))
        .unwrap();
        let large = run_experiment(&config(
            "known-uniform",
            50,
            2500,
            4000,
            PayoutModel::Bernoulli,
        ))
        .unwrap();
        let ratio = small.std_error / large.std_error;
        assert!((ratio - 2.0).abs() <= 0.4, "{ratio}");
    }

    #[test]
    fn oracle_dominates_in_fixed_mode() {
        let oracle = config("oracle", 200, 400, 300, PayoutModel::FixedPayout);
        for other in [
            "known-uniform",
            "beta-threshold",
            "always-first",
            "known-power",
            "adaptive:m=1",
        ] {
            let mut b = oracle.clone();
            b.strategy = other.parse().unwrap();
            let cmp = paired_compare(&oracle, &b).unwrap();
            assert!(cmp.deltas.iter().all(|&d| d <= 1e-12), "{other}");
        }
    }

    #[test]
    fn self_comparison_is_zero() {
        let a = config("known-uniform", 50, 2500, 100, PayoutModel::Bernoulli);
        let cmp = paired_compare(&a, &a).unwrap();
        assert!(cmp.deltas.iter().all(|&d| d == 0.0));
    }

    #[test]
    fn known_uniform_beats_always_first() {
        let a = config("known-uniform", 100, 10_000, 1000, PayoutModel::Bernoulli);
        let mut b = a.clone();
        b.strategy = StrategySpec::AlwaysFirst;
        let cmp = paired_compare(&a, &b).unwrap();
        assert!(cmp.mean_delta < -0.4, "{}", cmp.mean_delta);
    }

    #[test]
    fn mismatched_pairs_are_rejected() {
        let a = config("known-uniform", 50, 2500, 10, PayoutModel::Bernoulli);
        let mut b = a.clone();
        b.n = 51;
        assert!(matches!(
            paired_compare(&a, &b),
            Err(Error::ConfigMismatch(_))
        ));
        let mut b = a.clone();
        b.dist = DistributionSpec::power(2).unwrap();
        assert!(matches!(
            paired_compare(&a, &b),
            Err(Error::ConfigMismatch(_))
        ));
    }

    #[test]
    fn contract_violations_propagate() {
        let c = config("beta-threshold", 10, 100, 5, PayoutModel::Bernoulli);
        assert!(matches!(
            run_experiment(&c),
            Err(Error::ContractViolation(_))
        ));
        let mut c = config("known-uniform", 10, 100, 5, PayoutModel::Bernoulli);
        c.episodes = 0;
        assert!(run_experiment(&c).is_err());
    }

    #[test]
    fn verdict_validity_floors() {
        let below = config("known-uniform", 100, 9_999, 20, PayoutModel::Bernoulli);
        let s = run_experiment(&below).unwrap();
        // N′ = 100 but K < N′².
        assert_eq!(
            s.verdict(UPPER_BOUND).unwrap().verdict,
            Verdict::NotApplicable
        );
        let at = config("known-uniform", 100, 10_000, 200, PayoutModel::Bernoulli);
        let s = run_experiment(&at).unwrap();
        assert_eq!(s.verdict(UPPER_BOUND).unwrap().reference, Some(0.06));
        assert_eq!(s.verdict(UPPER_BOUND).unwrap().verdict, Verdict::Pass);
        assert_eq!(s.verdict(LOWER_BOUND).unwrap().verdict, Verdict::Pass);
        let few = config("known-uniform", 40, 10_000, 20, PayoutModel::Bernoulli);
        let s = run_experiment(&few).unwrap();
        // n < √K/2.
        assert_eq!(
            s.verdict(LOWER_BOUND).unwrap().verdict,
            Verdict::NotApplicable
        );
        let small_k = config("known-uniform", 10_000, 100, 500, PayoutModel::Bernoulli);
        let s = run_experiment(&small_k).unwrap();
        assert_eq!(s.verdict(LOWER_BOUND).unwrap().reference, Some(1.25));
        assert_eq!(s.verdict(LOWER_BOUND).unwrap().verdict, Verdict::Pass);
    }

    #[test]
    fn trace_matches_fast_run_in_fixed_mode() {
        let c = config("beta-threshold", 30, 200, 1, PayoutModel::FixedPayout);
        let fast = c.run_episode(0).unwrap();
        let (slow, rows) = c.trace_episode(0).unwrap();
        assert_eq!(fast.settled_index, slow.settled_index);
        assert!((fast.total_loss - slow.total_loss).abs() < 1e-9);
        assert_eq!(
            rows.iter()
                .filter(|r| r.action != crate::stream::TraceAction::Advance)
                .count(),
            200
        );
    }
}
