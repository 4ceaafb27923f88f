//! Learning the left tail of an unknown mean distribution.
//!
//! Phase one samples the first `⌈N^0.9⌉` bandits: in fixed-payout mode one
//! pull reveals each mean; in Bernoulli mode each bandit is flipped until
//! its first head and the reciprocal run length serves as a proxy mean
//! (scaled by `(m!)^(1/m)`). The samples are cut into pools of
//! `L = ⌈N^0.2⌉`, and the averaged pool minimum, normalized by the
//! order-statistic mean, estimates `C^(-1/m)` for a left tail `C·x^m`.
//! Phase two runs the known-power strategy on the remaining bandits with
//! thresholds scaled by that estimate.

use std::fmt;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::distributions::{parse_params, parse_value};
use crate::error::{Error, Result};
use crate::special::{ceil_tolerant, factorial, ln_gamma};
use crate::strategies::{truncate_n, KnownPower};
use crate::stream::{Action, BanditStream, MeanSource, Observation, PayoutModel, Strategy};

/// How a first-head run is turned into a proxy mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ProxyRule {
    /// `1/(T+1)`: reciprocal of the flips up to and including the first head.
    /// Its CDF under uniform means is exactly `x` at every `x = 1/k`.
    ReciprocalFlips,
    /// `1/T` for `T ≥ 1` tails before the first head, and 1 when `T = 0`.
    ReciprocalTails,
}

/// Normalizer applied to the averaged pool minimum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PoolNormalization {
    /// `Γ(L+1+1/m) / (Γ(L+1)·Γ(1+1/m))`, the exact reciprocal mean of the
    /// minimum of `L` draws from `x^m`.
    Exact,
    /// The large-`L` form `L^(1/m) / Γ(1+1/m)`.
    Asymptotic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    /// Phase one samples `⌈N^sample_exponent⌉` bandits.
    pub sample_exponent: f64,
    /// Pools hold `⌈N^pool_exponent⌉` samples.
    pub pool_exponent: f64,
    pub m_candidates: Vec<u32>,
    /// Admissible implied densities lie in `[1/B, B]`.
    pub density_bound_b: f64,
    pub proxy: ProxyRule,
    pub normalization: PoolNormalization,
    /// Per-bandit flip cap in phase one; `None` means `⌈K/(4·samples)⌉`.
    pub flip_cap: Option<u64>,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            sample_exponent: 0.9,
            pool_exponent: 0.2,
            m_candidates: vec![1],
            density_bound_b: 10.0,
            proxy: ProxyRule::ReciprocalFlips,
            normalization: PoolNormalization::Exact,
            flip_cap: None,
        }
    }
}

impl EstimatorConfig {
    pub fn with_candidates(m_candidates: Vec<u32>) -> Self {
        Self {
            m_candidates,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (p, s) = (self.pool_exponent, self.sample_exponent);
        if !(0.0 < p && p < s && s < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "need 0 < pool_exp < sample_exp < 1, got pool_exp={p}, sample_exp={s}"
            )));
        }
        if self.m_candidates.is_empty() || self.m_candidates.contains(&0) {
            return Err(Error::InvalidParameter(
                "m candidates must be a nonempty set of positive integers".into(),
            ));
        }
        if self.density_bound_b.is_nan() || self.density_bound_b <= 1.0 {
            return Err(Error::InvalidParameter(
                "density bound B must exceed 1".into(),
            ));
        }
        if self.flip_cap == Some(0) {
            return Err(Error::InvalidParameter("flip cap must be >= 1".into()));
        }
        Ok(())
    }

    /// Bandits consumed by phase one, leaving at least one for phase two.
    pub fn sample_count(&self, n: u64) -> u64 {
        ceil_tolerant((n as f64).powf(self.sample_exponent)).min(n.saturating_sub(1))
    }

    pub fn pool_size(&self, n: u64) -> usize {
        ceil_tolerant((n as f64).powf(self.pool_exponent)).max(1) as usize
    }

    pub fn flip_cap(&self, n: u64, k: u64) -> u64 {
        self.flip_cap
            .unwrap_or_else(|| {
                let samples = self.sample_count(n).max(1);
                k.div_ceil(4 * samples)
            })
            .max(1)
    }

    pub(crate) fn parse_params(input: &str, params: &str) -> Result<Self> {
        const KIND: &str = "adaptive strategy";
        let mut cfg = Self::default();
        for (key, value) in parse_params(KIND, input, params)? {
            match key {
                "m" => {
                    cfg.m_candidates = value
                        .split('|')
                        .map(|v| parse_value::<u32>(KIND, input, key, v.trim()))
                        .collect::<Result<_>>()?;
                    cfg.m_candidates.sort_unstable();
                    cfg.m_candidates.dedup();
                }
                "B" | "b" => cfg.density_bound_b = parse_value(KIND, input, key, value)?,
                "sample_exp" => cfg.sample_exponent = parse_value(KIND, input, key, value)?,
                "pool_exp" => cfg.pool_exponent = parse_value(KIND, input, key, value)?,
                "cap" => cfg.flip_cap = Some(parse_value(KIND, input, key, value)?),
                "proxy" => {
                    cfg.proxy = match value {
                        "flips" => ProxyRule::ReciprocalFlips,
                        "tails" => ProxyRule::ReciprocalTails,
                        _ => {
                            return Err(Error::parse(
                                KIND,
                                input,
                                "proxy must be `flips` or `tails`",
                            ))
                        }
                    }
                }
                "norm" => {
                    cfg.normalization = match value {
                        "exact" => PoolNormalization::Exact,
                        "asymptotic" => PoolNormalization::Asymptotic,
                        _ => {
                            return Err(Error::parse(
                                KIND,
                                input,
                                "norm must be `exact` or `asymptotic`",
                            ))
                        }
                    }
                }
                other => return Err(Error::parse(KIND, input, format!("unknown key `{other}`"))),
            }
        }
        cfg.validate()
            .map_err(|e| Error::parse(KIND, input, e.to_string()))?;
        Ok(cfg)
    }
}

impl fmt::Display for EstimatorConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ms: Vec<String> = self.m_candidates.iter().map(u32::to_string).collect();
        write!(
            f,
            "m={},B={},sample_exp={},pool_exp={}",
            ms.join("|"),
            self.density_bound_b,
            self.sample_exponent,
            self.pool_exponent
        )?;
        if self.proxy == ProxyRule::ReciprocalTails {
            f.write_str(",proxy=tails")?;
        }
        if self.normalization == PoolNormalization::Asymptotic {
            f.write_str(",norm=asymptotic")?;
        }
        if let Some(cap) = self.flip_cap {
            write!(f, ",cap={cap}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateResult {
    /// Estimate of `C^(-1/m)`.
    pub c_inv_root: f64,
    pub m_selected: u32,
    pub samples_used: u64,
    pub flips_used: u64,
    /// Set when the estimate could not be formed or no candidate passed the
    /// density bound and a fallback was used.
    pub fallback: bool,
}

/// Proxy mean of one first-head run of `flips` flips.
pub fn proxy_value(rule: ProxyRule, flips: u64, head_seen: bool, flip_cap: u64) -> f64 {
    if !head_seen {
        return 1.0 / flip_cap as f64;
    }
    match rule {
        ProxyRule::ReciprocalFlips => 1.0 / flips as f64,
        ProxyRule::ReciprocalTails => match flips - 1 {
            0 => 1.0,
            tails => 1.0 / tails as f64,
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FirstHeadSample {
    pub mu: f64,
    pub flips: u64,
    pub head_seen: bool,
}

/// Flips the current bandit until its first head (or `flip_cap` flips),
/// turns the run into a proxy mean and moves the stream on.
pub fn first_head_sample<M: MeanSource, R: RngCore + ?Sized>(
    stream: &mut BanditStream<M>,
    rng: &mut R,
    flip_cap: u64,
    rule: ProxyRule,
) -> FirstHeadSample {
    assert!(flip_cap >= 1, "flip cap must be >= 1");
    let mut flips = 0;
    let mut head_seen = false;
    while flips < flip_cap {
        flips += 1;
        if stream.pull(rng) >= 1.0 {
            head_seen = true;
            break;
        }
    }
    stream.advance();
    FirstHeadSample {
        mu: proxy_value(rule, flips, head_seen, flip_cap),
        flips,
        head_seen,
    }
}

/// Pulls each of the next `count` bandits once and returns the revealed payouts.
pub fn fixed_payout_samples<M: MeanSource, R: RngCore + ?Sized>(
    stream: &mut BanditStream<M>,
    rng: &mut R,
    count: usize,
) -> Vec<f64> {
    (0..count)
        .map(|_| {
            let p = stream.pull(rng);
            stream.advance();
            p
        })
        .collect()
}

/// `(m!)^(1/m)·μ`.
pub fn scale_proxy(mu: f64, m: u32) -> f64 {
    factorial(m).powf(1.0 / m as f64) * mu
}

/// Factor turning an averaged minimum of `pool_size` draws into `C^(-1/m)`.
pub fn pool_normalizer(pool_size: usize, m: u32, rule: PoolNormalization) -> f64 {
    let inv_m = 1.0 / m as f64;
    let l = pool_size as f64;
    match rule {
        PoolNormalization::Asymptotic => l.powf(inv_m) / ln_gamma(1.0 + inv_m).exp(),
        PoolNormalization::Exact => {
            (ln_gamma(l + 1.0 + inv_m) - ln_gamma(l + 1.0) - ln_gamma(1.0 + inv_m)).exp()
        }
    }
}

/// Averages the minima of consecutive pools of `pool_size` samples (a short
/// trailing pool is dropped) and normalizes to an estimate of `C^(-1/m)`.
pub fn pooled_min_estimate(
    samples: &[f64],
    pool_size: usize,
    m: u32,
    rule: PoolNormalization,
) -> Result<f64> {
    if pool_size == 0 || samples.len() < pool_size {
        return Err(Error::InsufficientData(format!(
            "{} samples cannot fill one pool of {pool_size}",
            samples.len()
        )));
    }
    let minima: Vec<f64> = samples
        .chunks_exact(pool_size)
        .map(|pool| pool.iter().copied().fold(f64::INFINITY, f64::min))
        .collect();
    let mean_min = minima.iter().sum::<f64>() / minima.len() as f64;
    Ok(mean_min * pool_normalizer(pool_size, m, rule))
}

/// Smallest candidate `m` whose implied density `c_inv_root^(-m)` lies in `[1/B, B]`.
pub fn select_m(estimates: &[(u32, f64)], b: f64) -> Result<u32> {
    let mut sorted = estimates.to_vec();
    sorted.sort_by_key(|&(m, _)| m);
    let fallback = sorted
        .last()
        .map(|&(m, _)| m)
        .ok_or_else(|| Error::InvalidParameter("select_m needs at least one candidate".into()))?;
    sorted
        .iter()
        .find(|&&(m, c_inv_root)| {
            let implied = c_inv_root.powi(-(m as i32));
            implied.is_finite() && (1.0 / b..=b).contains(&implied)
        })
        .map(|&(m, _)| m)
        .ok_or(Error::ModelSelection { bound: b, fallback })
}

/// Two-phase strategy for an unknown `C·x^m` left tail.
#[derive(Debug, Clone)]
pub struct AdaptiveStrategy {
    config: EstimatorConfig,
    n: u64,
    sample_count: usize,
    pool_size: usize,
    flip_cap: u64,
    samples: Vec<f64>,
    phase_one_flips: u64,
    payout: Option<PayoutModel>,
    estimate: Option<EstimateResult>,
    phase_two: Option<KnownPower>,
}

impl AdaptiveStrategy {
    pub fn new(n: u64, k: u64, config: EstimatorConfig) -> Result<Self> {
        config.validate()?;
        let sample_count = config.sample_count(n) as usize;
        Ok(Self {
            n,
            sample_count,
            pool_size: config.pool_size(n),
            flip_cap: config.flip_cap(n, k),
            samples: Vec::with_capacity(sample_count),
            phase_one_flips: 0,
            payout: None,
            estimate: None,
            phase_two: None,
            config,
        })
    }

    pub fn sample_count(&self) -> usize {
        self.sample_count
    }

    pub fn flip_cap(&self) -> u64 {
        self.flip_cap
    }

    fn record(&mut self, value: f64, flips: u64) {
        self.samples.push(value);
        self.phase_one_flips += flips;
    }

    fn estimate_from_samples(&self) -> EstimateResult {
        let scaled = |m: u32| -> Vec<f64> {
            match self.payout {
                Some(PayoutModel::Bernoulli) => {
                    self.samples.iter().map(|&mu| scale_proxy(mu, m)).collect()
                }
                _ => self.samples.clone(),
            }
        };
        let estimates: Result<Vec<(u32, f64)>> = self
            .config
            .m_candidates
            .iter()
            .map(|&m| {
                pooled_min_estimate(&scaled(m), self.pool_size, m, self.config.normalization)
                    .map(|c| (m, c))
            })
            .collect();
        let largest = *self.config.m_candidates.iter().max().expect("validated");
        let (m_selected, c_inv_root, fallback) = match estimates {
            Err(_) => (largest, 1.0, true),
            Ok(est) if est.len() == 1 => (est[0].0, est[0].1, false),
            Ok(est) => match select_m(&est, self.config.density_bound_b) {
                Ok(m) => (m, lookup(&est, m), false),
                Err(_) => (largest, lookup(&est, largest), true),
            },
        };
        EstimateResult {
            c_inv_root,
            m_selected,
            samples_used: self.samples.len() as u64,
            flips_used: self.phase_one_flips,
            fallback,
        }
    }

    fn start_phase_two(&mut self, remaining_budget: u64) {
        let estimate = self.estimate_from_samples();
        let remaining_bandits = self.n - self.sample_count as u64;
        let n_eff = truncate_n(
            remaining_bandits,
            remaining_budget.max(1),
            estimate.m_selected,
        );
        self.phase_two = Some(KnownPower::with_scale(
            n_eff,
            estimate.m_selected,
            estimate.c_inv_root,
            self.sample_count,
        ));
        self.estimate = Some(estimate);
    }
}

fn lookup(estimates: &[(u32, f64)], m: u32) -> f64 {
    estimates
        .iter()
        .find(|&&(c, _)| c == m)
        .map(|&(_, v)| v)
        .unwrap_or(1.0)
}

impl Strategy for AdaptiveStrategy {
    fn decide(&mut self, obs: &Observation) -> Result<Action> {
        self.payout.get_or_insert(obs.payout_model);
        if obs.bandit_index <= self.sample_count {
            let action = match obs.payout_model {
                PayoutModel::FixedPayout => match obs.revealed_mean {
                    None => Action::Pull,
                    Some(p) => {
                        self.record(p, obs.flips);
                        Action::Advance
                    }
                },
                PayoutModel::Bernoulli => {
                    if obs.heads >= 1 {
                        let mu = proxy_value(self.config.proxy, obs.flips, true, self.flip_cap);
                        self.record(mu, obs.flips);
                        Action::Advance
                    } else if obs.flips >= self.flip_cap {
                        let mu = proxy_value(self.config.proxy, obs.flips, false, self.flip_cap);
                        self.record(mu, obs.flips);
                        Action::Advance
                    } else {
                        Action::Pull
                    }
                }
            };
            return Ok(action);
        }
        if self.phase_two.is_none() {
            self.start_phase_two(obs.remaining_budget);
        }
        self.phase_two
            .as_mut()
            .expect("initialized above")
            .decide(obs)
    }

    fn is_settled(&self, obs: &Observation) -> bool {
        obs.bandit_index > self.sample_count
            && self.phase_two.as_ref().is_some_and(|p| p.is_settled(obs))
    }

    fn estimate(&self) -> Option<EstimateResult> {
        self.estimate
    }
}
