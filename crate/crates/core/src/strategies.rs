//! Strategies behind the [`Strategy`] contract, plus the oracle benchmark.

use std::fmt;
use std::str::FromStr;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::bounds::{eta_seq, power_threshold};
use crate::distributions::{parse_params, parse_value, DistributionSpec};
use crate::error::{Error, Result};
use crate::estimation::{AdaptiveStrategy, EstimatorConfig};
use crate::special::ceil_tolerant;
use crate::stream::{Action, EpisodeResult, LazyMeans, Observation, PayoutModel, Strategy};

pub type BoxedStrategy = Box<dyn Strategy + Send>;

/// Number of bandits a strategy pretends exist: `min(n, ⌈k^(m/(m+1))⌉)`.
pub fn truncate_n(n: u64, k: u64, m: u32) -> u64 {
    let mf = m as f64;
    n.min(ceil_tolerant((k as f64).powf(mf / (mf + 1.0))).max(1))
}

/// Two-heads rule for uniform means: keep pulling while at most one head has
/// been seen in the first `N′ − i` flips, and forever after that.
pub fn decide_known_uniform(obs: &Observation, n_eff: u64) -> Action {
    let threshold = uniform_threshold(obs.bandit_index, n_eff);
    if obs.flips > threshold || obs.heads <= 1 {
        Action::Pull
    } else {
        Action::Advance
    }
}

fn uniform_threshold(bandit_index: usize, n_eff: u64) -> u64 {
    n_eff - (bandit_index as u64).clamp(1, n_eff)
}

/// No-heads rule for `C·x^m` means with real threshold `f_i` (see
/// [`power_threshold`]). `c` rescales every threshold by `c^(-1/m)`.
pub fn decide_known_power(obs: &Observation, n_eff: u64, m: u32, c: f64) -> Action {
    power_action(
        obs,
        power_threshold(obs.bandit_index, n_eff, m, c.powf(-1.0 / m as f64)),
    )
}

#[inline]
fn power_action(obs: &Observation, threshold: f64) -> Action {
    if obs.flips as f64 > threshold || obs.heads == 0 {
        Action::Pull
    } else {
        Action::Advance
    }
}

#[derive(Debug, Clone)]
pub struct KnownUniform {
    n_eff: u64,
}

impl KnownUniform {
    pub fn new(n_eff: u64) -> Self {
        assert!(n_eff >= 1);
        Self { n_eff }
    }
}

impl Strategy for KnownUniform {
    fn decide(&mut self, obs: &Observation) -> Result<Action> {
        Ok(decide_known_uniform(obs, self.n_eff))
    }

    fn is_settled(&self, obs: &Observation) -> bool {
        obs.flips > uniform_threshold(obs.bandit_index, self.n_eff)
    }
}

/// Known-power strategy with thresholds precomputed per bandit.
#[derive(Debug, Clone)]
pub struct KnownPower {
    thresholds: Vec<f64>,
    /// Bandits before the first one this strategy manages.
    offset: usize,
}

impl KnownPower {
    pub fn new(n_eff: u64, m: u32, c: f64) -> Self {
        Self::with_scale(n_eff, m, c.powf(-1.0 / m as f64), 0)
    }

    /// Thresholds multiplied by `scale` (an estimate of `C^(-1/m)`), applied
    /// to the bandits after the first `offset`.
    pub fn with_scale(n_eff: u64, m: u32, scale: f64, offset: usize) -> Self {
        assert!(n_eff >= 1 && m >= 1);
        let thresholds = (1..=n_eff as usize)
            .map(|i| power_threshold(i, n_eff, m, scale))
            .collect();
        Self { thresholds, offset }
    }

    fn threshold(&self, bandit_index: usize) -> f64 {
        let local = bandit_index
            .saturating_sub(self.offset)
            .clamp(1, self.thresholds.len());
        self.thresholds[local - 1]
    }
}

impl Strategy for KnownPower {
    fn decide(&mut self, obs: &Observation) -> Result<Action> {
        Ok(power_action(obs, self.threshold(obs.bandit_index)))
    }

    fn is_settled(&self, obs: &Observation) -> bool {
        obs.flips as f64 > self.threshold(obs.bandit_index)
    }
}

/// Fixed-payout threshold strategy: pull once to reveal `p_i`, then settle
/// iff `p_i` beats the value of continuing, `η_r` with `r` bandits to come.
#[derive(Debug, Clone)]
pub struct BetaThreshold {
    n_eff: u64,
    /// `thresholds[r]` for `r` bandits remaining; `thresholds[0] = 1`.
    thresholds: Vec<f64>,
}

impl BetaThreshold {
    pub fn new(n_eff: u64, m: u32, c: f64) -> Self {
        assert!(n_eff >= 1 && m >= 1);
        let scale = c.powf(-1.0 / m as f64);
        let mut thresholds = Vec::with_capacity(n_eff as usize);
        thresholds.push(1.0);
        thresholds.extend(
            eta_seq(n_eff as usize - 1, m)
                .into_iter()
                .map(|v| v * scale),
        );
        Self { n_eff, thresholds }
    }

    pub fn remaining(&self, bandit_index: usize) -> usize {
        (self.n_eff - (bandit_index as u64).clamp(1, self.n_eff)) as usize
    }

    pub fn threshold(&self, remaining: usize) -> f64 {
        self.thresholds[remaining]
    }
}

pub fn decide_beta_threshold(obs: &Observation, thresholds: &BetaThreshold) -> Result<Action> {
    if obs.payout_model != PayoutModel::FixedPayout {
        return Err(Error::ContractViolation(
            "the beta-threshold strategy needs fixed-payout bandits".into(),
        ));
    }
    let Some(revealed) = obs.revealed_mean else {
        return Ok(Action::Pull);
    };
    let remaining = thresholds.remaining(obs.bandit_index);
    if remaining == 0 || revealed < thresholds.threshold(remaining) {
        Ok(Action::Pull)
    } else {
        Ok(Action::Advance)
    }
}

impl Strategy for BetaThreshold {
    fn decide(&mut self, obs: &Observation) -> Result<Action> {
        decide_beta_threshold(obs, self)
    }

    fn is_settled(&self, obs: &Observation) -> bool {
        match obs.revealed_mean {
            Some(p) => {
                let r = self.remaining(obs.bandit_index);
                r == 0 || p < self.threshold(r)
            }
            None => false,
        }
    }
}

/// Never advances.
#[derive(Debug, Clone, Copy, Default)]
pub struct AlwaysFirst;

impl Strategy for AlwaysFirst {
    fn decide(&mut self, _obs: &Observation) -> Result<Action> {
        Ok(Action::Pull)
    }

    fn is_settled(&self, _obs: &Observation) -> bool {
        true
    }
}

/// Index (1-based) of the smallest mean; ties go to the earliest bandit.
pub fn decide_oracle(means: &[f64]) -> usize {
    means
        .iter()
        .enumerate()
        .fold(
            (0, f64::INFINITY),
            |best, (j, &p)| if p < best.1 { (j, p) } else { best },
        )
        .0
        + 1
}

/// All-knowing benchmark: spend every pull on the best bandit of the stream.
pub fn run_oracle<R: RngCore + ?Sized>(
    means: LazyMeans,
    payout: PayoutModel,
    k: u64,
    rng: &mut R,
) -> Result<EpisodeResult> {
    if k == 0 {
        return Err(Error::InvalidParameter("pull budget k must be >= 1".into()));
    }
    let (index, p) = means.scan_min();
    let mut stream = crate::stream::BanditStream::new(vec![p], payout)?;
    let total_loss = stream.pull_many(k, rng);
    Ok(EpisodeResult {
        total_loss,
        flips_used: k,
        loss_per_flip: total_loss / k as f64,
        settled_index: index,
        bandits_visited: index,
        estimate: None,
    })
}

/// Text-configurable strategy recipe. Missing `m`/`c` default to the
/// experiment's distribution when the strategy is built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum StrategySpec {
    KnownUniform,
    KnownPower { m: Option<u32>, c: Option<f64> },
    BetaThreshold { m: Option<u32>, c: Option<f64> },
    Oracle,
    AlwaysFirst,
    Adaptive(EstimatorConfig),
}

impl StrategySpec {
    /// The exponent the strategy assumes, used for truncation.
    pub fn assumed_m(&self, dist: &DistributionSpec) -> u32 {
        match self {
            StrategySpec::KnownUniform => 1,
            StrategySpec::KnownPower { m, .. } | StrategySpec::BetaThreshold { m, .. } => {
                m.unwrap_or(dist.m())
            }
            StrategySpec::Adaptive(cfg) => *cfg.m_candidates.iter().max().unwrap_or(&1),
            StrategySpec::Oracle | StrategySpec::AlwaysFirst => dist.m(),
        }
    }

    /// `N′` for this strategy facing `n` bandits with budget `k`.
    pub fn n_effective(&self, n: u64, k: u64, dist: &DistributionSpec) -> u64 {
        match self {
            StrategySpec::KnownUniform
            | StrategySpec::KnownPower { .. }
            | StrategySpec::BetaThreshold { .. } => truncate_n(n, k, self.assumed_m(dist)),
            _ => n,
        }
    }

    /// Instantiates the per-episode strategy. The oracle is not a stream
    /// strategy; use [`run_oracle`].
    pub fn build(&self, n: u64, k: u64, dist: &DistributionSpec) -> Result<BoxedStrategy> {
        let n_eff = self.n_effective(n, k, dist);
        Ok(match self {
            StrategySpec::KnownUniform => Box::new(KnownUniform::new(n_eff)),
            StrategySpec::KnownPower { m, c } => Box::new(KnownPower::new(
                n_eff,
                m.unwrap_or(dist.m()),
                c.unwrap_or(dist.c()),
            )),
            StrategySpec::BetaThreshold { m, c } => Box::new(BetaThreshold::new(
                n_eff,
                m.unwrap_or(dist.m()),
                c.unwrap_or(dist.c()),
            )),
            StrategySpec::AlwaysFirst => Box::new(AlwaysFirst),
            StrategySpec::Adaptive(cfg) => Box::new(AdaptiveStrategy::new(n, k, cfg.clone())?),
            StrategySpec::Oracle => {
                return Err(Error::InvalidParameter(
                    "the oracle reads all means; run it with run_oracle".into(),
                ))
            }
        })
    }
}

impl fmt::Display for StrategySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn params(
            f: &mut fmt::Formatter<'_>,
            name: &str,
            m: &Option<u32>,
            c: &Option<f64>,
        ) -> fmt::Result {
            let mut parts = Vec::new();
            if let Some(m) = m {
                parts.push(format!("m={m}"));
            }
            if let Some(c) = c {
                parts.push(format!("c={c}"));
            }
            if parts.is_empty() {
                f.write_str(name)
            } else {
                write!(f, "{name}:{}", parts.join(","))
            }
        }
        match self {
            StrategySpec::KnownUniform => f.write_str("known-uniform"),
            StrategySpec::KnownPower { m, c } => params(f, "known-power", m, c),
            StrategySpec::BetaThreshold { m, c } => params(f, "beta-threshold", m, c),
            StrategySpec::Oracle => f.write_str("oracle"),
            StrategySpec::AlwaysFirst => f.write_str("always-first"),
            StrategySpec::Adaptive(cfg) => write!(f, "adaptive:{cfg}"),
        }
    }
}

impl FromStr for StrategySpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        const KIND: &str = "strategy";
        let s = s.trim();
        let (head, rest) = match s.split_once(':') {
            Some((h, p)) => (h.trim(), p),
            None => (s, ""),
        };
        let head = head.to_ascii_lowercase();
        if head == "adaptive" {
            return Ok(StrategySpec::Adaptive(EstimatorConfig::parse_params(
                s, rest,
            )?));
        }
        let mut m = None;
        let mut c = None;
        for (key, value) in parse_params(KIND, s, rest)? {
            match key {
                "m" => {
                    let v: u32 = parse_value(KIND, s, key, value)?;
                    if v == 0 {
                        return Err(Error::parse(KIND, s, "m must be >= 1"));
                    }
                    m = Some(v);
                }
                "c" => {
                    let v: f64 = parse_value(KIND, s, key, value)?;
                    if !(v.is_finite() && v > 0.0) {
                        return Err(Error::parse(KIND, s, "c must be positive"));
                    }
                    c = Some(v);
                }
                other => return Err(Error::parse(KIND, s, format!("unknown key `{other}`"))),
            }
        }
        let no_params = |spec: StrategySpec| {
            if m.is_some() || c.is_some() {
                Err(Error::parse(KIND, s, "this strategy takes no parameters"))
            } else {
                Ok(spec)
            }
        };
        match head.as_str() {
            "known-uniform" => no_params(StrategySpec::KnownUniform),
            "known-power" => Ok(StrategySpec::KnownPower { m, c }),
            "beta-threshold" | "eta-threshold" => Ok(StrategySpec::BetaThreshold { m, c }),
            "oracle" => no_params(StrategySpec::Oracle),
            "always-first" => no_params(StrategySpec::AlwaysFirst),
            other => Err(Error::parse(KIND, s, format!("unknown strategy `{other}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::BoxedStrategy;
    use super::*;
    use crate::rng::SplitMix64;
    use crate::stream::Strategy;
    use crate::stream::{run_episode_with, BanditStream, EpisodeOptions, TraceAction};
    use proptest::prelude::{any, prop_assert, prop_assert_eq, proptest, ProptestConfig};

    fn obs(flips: u64, heads: u64, bandit_index: usize) -> Observation {
        Observation {
            flips,
            heads,
            bandit_index,
            remaining_budget: 1_000,
            payout_model: PayoutModel::Bernoulli,
            revealed_mean: None,
        }
    }

    fn fixed_obs(flips: u64, bandit_index: usize, revealed: Option<f64>) -> Observation {
        Observation {
            payout_model: PayoutModel::FixedPayout,
            revealed_mean: revealed,
            ..obs(flips, 0, bandit_index)
        }
    }

    #[test]
    fn known_uniform_examples() {
        assert_eq!(decide_known_uniform(&obs(0, 0, 1), 100), Action::Pull);
        assert_eq!(decide_known_uniform(&obs(5, 2, 1), 100), Action::Advance);
        assert_eq!(decide_known_uniform(&obs(100, 40, 1), 100), Action::Pull);
        assert_eq!(decide_known_uniform(&obs(99, 1, 1), 100), Action::Pull);
        assert_eq!(decide_known_uniform(&obs(99, 2, 1), 100), Action::Advance);
        // Past N′ every bandit is treated as the last one and kept.
        assert_eq!(decide_known_uniform(&obs(1, 1, 130), 100), Action::Pull);
        assert_eq!(decide_known_uniform(&obs(2, 2, 130), 100), Action::Pull);
    }

    #[test]
    fn known_power_examples() {
        assert_eq!(
            decide_known_power(&obs(10, 0, 1), 100, 1, 1.0),
            Action::Pull
        );
        assert_eq!(
            decide_known_power(&obs(4, 1, 1), 100, 2, 1.0),
            Action::Advance
        );
        assert_eq!(
            decide_known_power(&obs(11, 7, 1), 100, 2, 1.0),
            Action::Pull
        );
        // t = f_i exactly is still inside the no-heads window.
        assert_eq!(
            decide_known_power(&obs(10, 1, 1), 100, 2, 1.0),
            Action::Advance
        );
        // c = 4 quarters the m = 1 threshold: f_1 = 12.5.
        assert_eq!(
            decide_known_power(&obs(13, 3, 1), 100, 1, 4.0),
            Action::Pull
        );
        assert_eq!(
            decide_known_power(&obs(12, 3, 1), 100, 1, 4.0),
            Action::Advance
        );
    }

    #[test]
    fn known_power_struct_agrees_with_function() {
        let mut s = KnownPower::new(50, 2, 1.5);
        for i in [1usize, 7, 50, 80] {
            for t in 0..30 {
                for h in 0..3 {
                    let o = obs(t, h.min(t), i);
                    assert_eq!(s.decide(&o).unwrap(), decide_known_power(&o, 50, 2, 1.5));
                }
            }
        }
    }

    #[test]
    fn beta_threshold_examples() {
        let two = BetaThreshold::new(2, 1, 1.0);
        assert_eq!(two.threshold(1), 0.5);
        assert_eq!(
            decide_beta_threshold(&fixed_obs(1, 1, Some(0.4)), &two).unwrap(),
            Action::Pull
        );
        assert_eq!(
            decide_beta_threshold(&fixed_obs(1, 1, Some(0.6)), &two).unwrap(),
            Action::Advance
        );
        assert_eq!(
            decide_beta_threshold(&fixed_obs(0, 1, None), &two).unwrap(),
            Action::Pull
        );
        let one = BetaThreshold::new(1, 1, 1.0);
        assert_eq!(
            decide_beta_threshold(&fixed_obs(1, 1, Some(0.99)), &one).unwrap(),
            Action::Pull
        );
        assert!(matches!(
            decide_beta_threshold(&obs(1, 0, 1), &two),
            Err(Error::ContractViolation(_))
        ));
    }

    #[test]
    fn beta_threshold_uses_eta_for_power_laws() {
        let s = BetaThreshold::new(3, 2, 1.0);
        let eta = eta_seq(2, 2);
        assert_eq!(s.threshold(0), 1.0);
        assert_eq!(s.threshold(1), eta[0]);
        assert_eq!(s.threshold(2), eta[1]);
    }

    #[test]
    fn truncation_examples() {
        assert_eq!(truncate_n(1_000_000, 10_000, 1), 100);
        assert_eq!(truncate_n(50, 1_000_000, 1), 50);
        assert_eq!(truncate_n(1_000_000, 1_000_000, 2), 10_000);
        assert_eq!(truncate_n(1_000_000, 100, 1), 10);
        assert_eq!(truncate_n(5, 1, 1), 1);
    }

    #[test]
    fn oracle_examples() {
        let means = vec![0.5, 0.1, 0.9];
        assert_eq!(decide_oracle(&means), 2);
        assert_eq!(decide_oracle(&[0.3]), 1);
        assert_eq!(decide_oracle(&[0.2, 0.1, 0.1]), 2);
    }

    #[test]
    fn oracle_on_uniform_matches_expected_minimum() {
        let dist = DistributionSpec::uniform();
        let episodes = 10_000;
        let mut total = 0.0;
        for e in 0..episodes {
            let means = LazyMeans::new(dist, 100, SplitMix64::new(e));
            let mut rng = SplitMix64::new(e + 1_000_000);
            let r = run_oracle(means, PayoutModel::FixedPayout, 10, &mut rng).unwrap();
            total += r.loss_per_flip;
        }
        let mean = total / episodes as f64;
        assert!((mean - 1.0 / 101.0).abs() < 1e-3, "{mean}");
    }

    #[test]
    fn strategy_text_forms() {
        let cases = [
            ("known-uniform", StrategySpec::KnownUniform),
            (
                "known-power:m=2,c=1",
                StrategySpec::KnownPower {
                    m: Some(2),
                    c: Some(1.0),
                },
            ),
            ("known-power", StrategySpec::KnownPower { m: None, c: None }),
            (
                "beta-threshold:m=2",
                StrategySpec::BetaThreshold {
                    m: Some(2),
                    c: None,
                },
            ),
            ("oracle", StrategySpec::Oracle),
            ("always-first", StrategySpec::AlwaysFirst),
        ];
        for (text, spec) in cases {
            assert_eq!(text.parse::<StrategySpec>().unwrap(), spec);
            assert_eq!(spec.to_string(), text);
        }
        for bad in [
            "bogus",
            "known-uniform:m=2",
            "known-power:m=0",
            "known-power:z=1",
            "oracle:c=2",
        ] {
            assert!(bad.parse::<StrategySpec>().is_err(), "{bad}");
        }
    }

    #[test]
    fn oracle_cannot_be_built_as_stream_strategy() {
        let d = DistributionSpec::uniform();
        assert!(StrategySpec::Oracle.build(10, 10, &d).is_err());
        assert!(StrategySpec::KnownUniform.build(10, 10, &d).is_ok());
    }

    /// Runs Bernoulli episodes of the two-heads rule on uniform means.
    fn settle_counts(n: usize, episodes: u64) -> Vec<u64> {
        let dist = DistributionSpec::uniform();
        let mut settled = vec![0u64; n + 1];
        for e in 0..episodes {
            let means = LazyMeans::new(dist, n, SplitMix64::new(3 * e + 1));
            let mut stream = BanditStream::new(means, PayoutModel::Bernoulli).unwrap();
            let mut strategy = KnownUniform::new(n as u64);
            let mut rng = SplitMix64::new(3 * e + 2);
            let r = run_episode_with(
                &mut stream,
                &mut strategy,
                10_000,
                &mut rng,
                EpisodeOptions::default(),
                None,
            )
            .unwrap();
            settled[r.settled_index] += 1;
        }
        settled
    }

    #[test]
    #[allow(clippy::needless_range_loop)]
    fn known_uniform_stay_probabilities() {
        let n = 20usize;
        let episodes = 40_000u64;
        let settled = settle_counts(n, episodes);
        let nf = n as f64;
        let mut arrived = episodes;
        for i in 1..=n / 2 {
            // Stay given arrival: 2/(N − (i − 1)).
            let p = 2.0 / (nf - (i as f64 - 1.0));
            let observed = settled[i] as f64 / arrived as f64;
            let se = (p * (1.0 - p) / arrived as f64).sqrt();
            assert!(
                (observed - p).abs() <= 3.0 * se,
                "stay at {i}: {observed} vs {p}"
            );
            // Arrive-and-stay: 2(N − i)/(N(N − 1)).
            let b = 2.0 * (nf - i as f64) / (nf * (nf - 1.0));
            let freq = settled[i] as f64 / episodes as f64;
            let se_b = (b * (1.0 - b) / episodes as f64).sqrt();
            assert!((freq - b).abs() <= 3.0 * se_b, "b_{i}: {freq} vs {b}");
            arrived -= settled[i];
        }
    }

    fn strategy_for(kind: u8) -> (BoxedStrategy, PayoutModel) {
        match kind {
            0 => (Box::new(KnownUniform::new(30)), PayoutModel::Bernoulli),
            1 => (
                Box::new(KnownPower::new(30, 1, 1.0)),
                PayoutModel::Bernoulli,
            ),
            2 => (
                Box::new(KnownPower::new(30, 2, 1.0)),
                PayoutModel::Bernoulli,
            ),
            3 => (
                Box::new(BetaThreshold::new(30, 1, 1.0)),
                PayoutModel::FixedPayout,
            ),
            _ => (Box::new(AlwaysFirst), PayoutModel::Bernoulli),
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn settled_bandits_absorb(kind in 0u8..5, seed in any::<u64>()) {
            let (mut strategy, payout) = strategy_for(kind);
            let means = LazyMeans::new(DistributionSpec::uniform(), 30, SplitMix64::new(seed));
            let mut stream = BanditStream::new(means, payout).unwrap();
            let mut rng = SplitMix64::new(seed ^ 0xABCD);
            let mut rows = Vec::new();
            let options = EpisodeOptions { settle_fast_path: false };
            run_episode_with(&mut stream, &mut strategy, 2_000, &mut rng, options, Some(&mut rows)).unwrap();
            prop_assert!(rows.windows(2).all(|w| w[0].bandit_index <= w[1].bandit_index));
            // Replay: once the settled predicate holds at a bandit, only pulls follow there.
            let (check, _) = strategy_for(kind);
            let mut settled_at = None;
            let mut revealed: Option<(usize, f64)> = None;
            for row in &rows {
                let known = match (payout, revealed) {
                    (PayoutModel::FixedPayout, Some((i, p))) if i == row.bandit_index => Some(p),
                    _ => None,
                };
                let o = Observation {
                    flips: row.flips,
                    heads: row.heads,
                    bandit_index: row.bandit_index,
                    remaining_budget: 1,
                    payout_model: payout,
                    revealed_mean: known,
                };
                if row.action == TraceAction::Pull {
                    revealed = Some((row.bandit_index, row.loss));
                }
                if settled_at == Some(row.bandit_index) {
                    prop_assert_eq!(row.action, TraceAction::Pull);
                }
                if check.is_settled(&o) {
                    settled_at = Some(row.bandit_index);
                    prop_assert_eq!(row.action, TraceAction::Pull);
                }
            }
        }
    }
}
