//! Analytic reference values.
//!
//! β (uniform) and η (`x^m`) numbers are the limiting optimal loss per flip
//! for fixed-payout bandits as `K → ∞`. They satisfy the backward recursion
//! over bandits remaining
//!
//! ```text
//! η_1 = m/(m+1),    η_i = η_{i-1} − η_{i-1}^(m+1) / (m+1)
//! ```
//!
//! where `η_1` is the prior mean (one bandit left, nothing to choose). With
//! `η_0 = 1` the same recursion produces `η_1`, which is how the threshold
//! strategy indexes it: with `r` bandits still to come, settle iff the
//! revealed payout is below `η_r`.

use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use crate::special::{factorial, ln_gamma};

/// `(β_1, …, β_n)`.
pub fn beta_seq(n: usize) -> Vec<f64> {
    eta_seq(n, 1)
}

/// `(η_1, …, η_n)` for the `x^m` law.
pub fn eta_seq(n: usize, m: u32) -> Vec<f64> {
    assert!(m >= 1, "m must be >= 1");
    let mut out = Vec::with_capacity(n);
    let mut eta = 1.0;
    for _ in 0..n {
        eta = eta_step(eta, m);
        out.push(eta);
    }
    out
}

/// `η_n` without materializing the sequence.
pub fn eta_tail(n: usize, m: u32) -> f64 {
    assert!(n >= 1 && m >= 1);
    (0..n).fold(1.0, |eta, _| eta_step(eta, m))
}

#[inline]
fn eta_step(eta: f64, m: u32) -> f64 {
    eta - eta.powi(m as i32 + 1) / (m as f64 + 1.0)
}

/// Large-`n` limit `c^(-1/m)·((m+1)/(m·n))^(1/m)`; `2/n` for the uniform law.
pub fn eta_asymptote(n: u64, m: u32, c: f64) -> f64 {
    let mf = m as f64;
    c.powf(-1.0 / mf) * ((mf + 1.0) / (mf * n as f64)).powf(1.0 / mf)
}

/// Total loss no strategy can beat with `k` pulls: `m/(4(m+1))·k^(m/(m+1))`
/// (`√k/8` for the uniform law).
pub fn lower_bound_total(k: u64, m: u32) -> f64 {
    let mf = m as f64;
    mf / (4.0 * (mf + 1.0)) * (k as f64).powf(mf / (mf + 1.0))
}

/// The strategies with a proven per-flip upper bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BoundedStrategy {
    /// Two heads allowed, threshold `N′ − i`: loss per flip ≤ `6/N′`.
    KnownUniform,
    /// No heads allowed, threshold `f_i`: loss per flip ≤ `c^(-1/m)·2^(1/m)·e·N′^(-1/m)`.
    KnownPower,
}

pub fn upper_bound_per_flip(strategy: BoundedStrategy, n_eff: u64, m: u32, c: f64) -> f64 {
    let n = n_eff as f64;
    match strategy {
        BoundedStrategy::KnownUniform => 6.0 / n,
        BoundedStrategy::KnownPower => {
            let inv_m = 1.0 / m as f64;
            c.powf(-inv_m) * 2f64.powf(inv_m) * E * n.powf(-inv_m)
        }
    }
}

/// Probability that a bandit whose mean follows `x^m` shows `a` heads and
/// `b` tails (in any order) in `a + b` flips:
/// `m·Γ(a+b+1)·Γ(a+m) / (Γ(a+1)·Γ(a+b+m+1))`.
pub fn prob_observation(a: u64, b: u64, m: u32) -> f64 {
    let (a, b, mf) = (a as f64, b as f64, m as f64);
    let ln = mf.ln() + ln_gamma(a + b + 1.0) + ln_gamma(a + mf)
        - ln_gamma(a + 1.0)
        - ln_gamma(a + b + mf + 1.0);
    ln.exp()
}

/// Posterior mean of the bandit's mean after `a` heads and `b` tails: `(a+m)/(a+b+m+1)`.
pub fn posterior_mean(a: u64, b: u64, m: u32) -> f64 {
    let (a, b, mf) = (a as f64, b as f64, m as f64);
    (a + mf) / (a + b + mf + 1.0)
}

/// `n·β_n`, which tends to 2 (from below) as `n` grows.
pub fn beta_asymptote_check(n: usize) -> f64 {
    assert!(n >= 2, "needs n >= 2");
    n as f64 * eta_tail(n, 1)
}

/// Threshold `f_i = c^(-1/m)·((m!/2)·(N′ − (i−1)))^(1/m)` of the known-power
/// strategy. Indices past `N′` use `i = N′`.
pub fn power_threshold(bandit_index: usize, n_eff: u64, m: u32, scale: f64) -> f64 {
    let i = (bandit_index as u64).clamp(1, n_eff.max(1));
    let remaining = (n_eff - (i - 1)) as f64;
    scale * (factorial(m) / 2.0 * remaining).powf(1.0 / m as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub n: u64,
    pub m: u32,
    pub c: f64,
    pub k: Option<u64>,
    /// `(β_1 … β_n)` or `(η_1 … η_n)`, scaled by `c^(-1/m)`.
    pub beta_or_eta: Vec<f64>,
    pub asymptote: f64,
    /// Needs `k`.
    pub lower_total_small_k: Option<f64>,
    /// `6/n` for the uniform law, the known-power bound otherwise.
    pub upper_per_flip: f64,
    pub upper_per_flip_known_power: f64,
}

impl BoundReport {
    pub fn compute(n: u64, m: u32, c: f64, k: Option<u64>) -> Self {
        let scale = c.powf(-1.0 / m as f64);
        let beta_or_eta = eta_seq(n as usize, m)
            .into_iter()
            .map(|v| v * scale)
            .collect();
        let known_power = upper_bound_per_flip(BoundedStrategy::KnownPower, n, m, c);
        let upper_per_flip = if m == 1 && c == 1.0 {
            upper_bound_per_flip(BoundedStrategy::KnownUniform, n, m, c)
        } else {
            known_power
        };
        Self {
            n,
            m,
            c,
            k,
            beta_or_eta,
            asymptote: eta_asymptote(n, m, c),
            lower_total_small_k: k.map(|k| lower_bound_total(k, m)),
            upper_per_flip,
            upper_per_flip_known_power: known_power,
        }
    }

    pub fn tail(&self) -> f64 {
        *self.beta_or_eta.last().expect("n >= 1")
    }
}
