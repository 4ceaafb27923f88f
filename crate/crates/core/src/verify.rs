//! Acceptance suite: each criterion is run at pinned sizes, seeds and
//! tolerances and reported as one pass/fail line.

use std::fmt;
use std::time::Instant;

use crate::bounds::{beta_seq, eta_tail, lower_bound_total, posterior_mean, prob_observation};
use crate::distributions::{expected_min_asymptotic, expected_min_exact, DistributionSpec};
use crate::error::Result;
use crate::estimation::{
    first_head_sample, fixed_payout_samples, pooled_min_estimate, scale_proxy, EstimatorConfig,
};
use crate::harness::{mean_and_se, run_episodes, summarize, ExperimentConfig};
use crate::report::{write_summaries, SummaryRecord};
use crate::rng::{substream, SplitMix64, StreamTag};
use crate::strategies::StrategySpec;
use crate::stream::{BanditStream, EpisodeResult, LazyMeans, PayoutModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    /// Reduced repetition counts and sample sizes; same tolerances.
    Fast,
    Full,
}

impl std::str::FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "fast" => Ok(Suite::Fast),
            "full" => Ok(Suite::Full),
            _ => Err(format!("unknown suite `{s}` (expected fast or full)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionOutcome {
    pub id: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl fmt::Display for CriterionOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<12} {}  {} ({:.1}s)",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.detail,
            self.seconds
        )
    }
}

struct Sizes {
    a1_episodes: u64,
    a2_episodes: u64,
    a4_episodes: u64,
    a5_episodes: u64,
    a6_n: u64,
    a7_samples: usize,
    a10_episodes: u64,
}

impl Suite {
    fn sizes(self) -> Sizes {
        match self {
            Suite::Full => Sizes {
                a1_episodes: 10_000,
                a2_episodes: 1_000,
                a4_episodes: 4_000,
                a5_episodes: 10_000,
                a6_n: 100_000,
                a7_samples: 100_000,
                a10_episodes: 200,
            },
            Suite::Fast => Sizes {
                a1_episodes: 2_000,
                a2_episodes: 1_000,
                a4_episodes: 1_000,
                a5_episodes: 1_000,
                a6_n: 10_000,
                a7_samples: 10_000,
                a10_episodes: 40,
            },
        }
    }
}

fn mean_se(results: &[EpisodeResult], f: impl Fn(&EpisodeResult) -> f64) -> (f64, f64) {
    let v: Vec<f64> = results.iter().map(f).collect();
    mean_and_se(&v)
}

/// Runs every criterion, feeding on-the-fly progress lines to `progress`.
pub fn run_suite(
    suite: Suite,
    mut progress: impl FnMut(&CriterionOutcome),
) -> Vec<CriterionOutcome> {
    let sizes = suite.sizes();
    let mut ctx = Context::default();
    let mut out = Vec::new();
    let mut record = |id: &'static str, f: &mut dyn FnMut() -> Result<(bool, String)>| {
        let start = Instant::now();
        let (passed, detail) = f().unwrap_or_else(|e| (false, format!("error: {e}")));
        let outcome = CriterionOutcome {
            id,
            passed,
            detail,
            seconds: start.elapsed().as_secs_f64(),
        };
        progress(&outcome);
        out.push(outcome);
    };
    record("A1", &mut || a1(&mut ctx, sizes.a1_episodes));
    record("A2-sim", &mut || a2_simulation(&mut ctx, sizes.a2_episodes));
    record("A2-analytic", &mut || Ok(a2_analytic(|n| eta_tail(n, 1))));
    record("A3-analytic", &mut || Ok(a3_analytic()));
    record("A3-sim", &mut || a3_simulation(&mut ctx, sizes.a2_episodes));
    record("A4", &mut || a4(&mut ctx, sizes.a4_episodes));
    record("A5", &mut || a5(&mut ctx, sizes.a5_episodes));
    record("A6", &mut || a6(sizes.a6_n));
    record("A7", &mut || Ok(a7(sizes.a7_samples)));
    record("A8", &mut || Ok(a8()));
    record("A9", &mut || Ok(a9()));
    record("A10", &mut || a10(&mut ctx, sizes.a10_episodes));
    record("A11", &mut || a11(&ctx));
    out
}

/// State shared with the determinism and dominance criterion.
#[derive(Default)]
struct Context {
    /// Fixed-payout runs with their per-episode results.
    fixed_runs: Vec<(ExperimentConfig, Vec<EpisodeResult>)>,
    /// A configuration and the CSV bytes of its first run.
    csv_runs: Vec<(ExperimentConfig, Vec<u8>)>,
}

impl Context {
    fn run(&mut self, config: ExperimentConfig) -> Result<Vec<EpisodeResult>> {
        let results = run_episodes(&config)?;
        if config.payout == PayoutModel::FixedPayout && config.strategy != StrategySpec::Oracle {
            self.fixed_runs.push((config.clone(), results.clone()));
        }
        if self.csv_runs.len() < 3 {
            let csv = summary_csv(&config, &results)?;
            self.csv_runs.push((config, csv));
        }
        Ok(results)
    }
}

fn summary_csv(config: &ExperimentConfig, results: &[EpisodeResult]) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_summaries(
        &mut buf,
        &[SummaryRecord::new(config, &summarize(config, results))],
    )?;
    Ok(buf)
}

fn config(
    dist: DistributionSpec,
    strategy: StrategySpec,
    n: u64,
    k: u64,
    episodes: u64,
    seed: u64,
    payout: PayoutModel,
) -> ExperimentConfig {
    ExperimentConfig {
        dist,
        strategy,
        n,
        k,
        episodes,
        master_seed: seed,
        payout,
    }
}

fn a1(ctx: &mut Context, episodes: u64) -> Result<(bool, String)> {
    let cfg = config(
        DistributionSpec::uniform(),
        StrategySpec::KnownUniform,
        100,
        10_000,
        episodes,
        0xA1,
        PayoutModel::Bernoulli,
    );
    let results = ctx.run(cfg)?;
    let (mean, se) = mean_se(&results, |r| r.loss_per_flip);
    let passed = mean + 3.0 * se >= 0.015 && mean - 3.0 * se <= 0.07;
    Ok((
        passed,
        format!("loss/flip {mean:.5} ± {se:.5} (band [0.015, 0.07])"),
    ))
}

fn threshold_simulation(
    ctx: &mut Context,
    m: u32,
    episodes: u64,
    seed: u64,
) -> Result<(bool, String)> {
    let dist = DistributionSpec::power(m)?;
    let strategy = StrategySpec::BetaThreshold { m: None, c: None };
    let cfg = config(
        dist,
        strategy,
        100,
        1_000_000,
        episodes,
        seed,
        PayoutModel::FixedPayout,
    );
    let results = ctx.run(cfg)?;
    let (mean, se) = mean_se(&results, |r| r.loss_per_flip);
    let tail = eta_tail(100, m);
    let rel = (mean - tail).abs() / tail;
    Ok((
        rel <= 0.15,
        format!("loss/flip {mean:.6} ± {se:.6} vs tail {tail:.6} (rel {rel:.4}, tol 0.15)"),
    ))
}

fn a2_simulation(ctx: &mut Context, episodes: u64) -> Result<(bool, String)> {
    threshold_simulation(ctx, 1, episodes, 0xA2)
}

/// `n·β_n` at `n = 10⁴` must lie in (2.0, 2.1) and decrease up to `n = 10⁶`.
pub fn a2_analytic(beta_at: impl Fn(usize) -> f64) -> (bool, String) {
    let at_1e4 = 1e4 * beta_at(10_000);
    let at_1e6 = 1e6 * beta_at(1_000_000);
    let passed = at_1e4 > 2.0 && at_1e4 < 2.1 && at_1e6 < at_1e4;
    (
        passed,
        format!("n·β_n = {at_1e4:.10} at 1e4, {at_1e6:.10} at 1e6 (need (2.0, 2.1), decreasing)"),
    )
}

/// `β` sequence from an arbitrary base value, for mutation checks.
pub fn beta_from_base(base: f64, n: usize) -> f64 {
    (1..n).fold(base, |b, _| b - b * b / 2.0)
}

fn a3_analytic() -> (bool, String) {
    let n = 100_000usize;
    let value = (n as f64).sqrt() * eta_tail(n, 2);
    let target = 1.5f64.sqrt();
    let rel = (value - target).abs() / target;
    (
        rel <= 0.02,
        format!("√n·η_n = {value:.6} at 1e5 vs √1.5 = {target:.6} (rel {rel:.5})"),
    )
}

fn a3_simulation(ctx: &mut Context, episodes: u64) -> Result<(bool, String)> {
    threshold_simulation(ctx, 2, episodes, 0xA3)
}

fn a4(ctx: &mut Context, episodes: u64) -> Result<(bool, String)> {
    let n = 400u64;
    let k = (n as f64).powf(1.5).ceil() as u64 * 4;
    let cfg = config(
        DistributionSpec::power(2)?,
        StrategySpec::KnownPower { m: None, c: None },
        n,
        k,
        episodes,
        0xA4,
        PayoutModel::Bernoulli,
    );
    let results = ctx.run(cfg)?;
    let (mean, se) = mean_se(&results, |r| r.loss_per_flip);
    let upper = 2f64.sqrt() * std::f64::consts::E / 20.0;
    let lower = (1.5 / n as f64).sqrt() / 2.0;
    Ok((
        mean <= upper && mean >= lower,
        format!("loss/flip {mean:.5} ± {se:.5} (band [{lower:.5}, {upper:.5}])"),
    ))
}

fn a5(ctx: &mut Context, episodes: u64) -> Result<(bool, String)> {
    let bound = lower_bound_total(100, 1);
    let strategies = [
        (StrategySpec::KnownUniform, PayoutModel::Bernoulli),
        (
            StrategySpec::KnownPower { m: None, c: None },
            PayoutModel::Bernoulli,
        ),
        (
            StrategySpec::BetaThreshold { m: None, c: None },
            PayoutModel::FixedPayout,
        ),
        (StrategySpec::AlwaysFirst, PayoutModel::Bernoulli),
        (
            StrategySpec::Adaptive(EstimatorConfig::default()),
            PayoutModel::Bernoulli,
        ),
    ];
    let mut passed = true;
    let mut parts = Vec::new();
    for (strategy, payout) in strategies {
        let name = strategy.to_string();
        let cfg = config(
            DistributionSpec::uniform(),
            strategy,
            1_000_000,
            100,
            episodes,
            0xA5,
            payout,
        );
        let results = ctx.run(cfg)?;
        let (mean, se) = mean_se(&results, |r| r.total_loss);
        passed &= mean >= bound - 3.0 * se;
        parts.push(format!("{name} {mean:.3}±{se:.3}"));
    }
    Ok((
        passed,
        format!("total loss ≥ {bound} − 3SE: {}", parts.join(", ")),
    ))
}

fn a6(n: u64) -> Result<(bool, String)> {
    let dist = DistributionSpec::scaled_power(1, 2.0)?;
    let cfg = EstimatorConfig::default();
    let target = 0.5;
    let mut hits = 0;
    let mut worst: f64 = 0.0;
    for seed in 0..100u64 {
        let means = LazyMeans::new(dist, n as usize, substream(seed, 0, StreamTag::Means));
        let mut stream = BanditStream::new(means, PayoutModel::FixedPayout)?;
        let mut rng = substream(seed, 0, StreamTag::Payouts);
        let samples = fixed_payout_samples(&mut stream, &mut rng, cfg.sample_count(n) as usize);
        let est = pooled_min_estimate(&samples, cfg.pool_size(n), 1, cfg.normalization)?;
        let rel = (est - target).abs() / target;
        worst = worst.max(rel);
        hits += (rel <= 0.10) as u32;
    }
    Ok((
        hits >= 95,
        format!("{hits}/100 seeds within 10% of 0.5 at N={n} (worst rel error {worst:.4})"),
    ))
}

fn a7(samples: usize) -> (bool, String) {
    let means = LazyMeans::new(
        DistributionSpec::uniform(),
        samples,
        substream(0xA7, 0, StreamTag::Means),
    );
    let mut stream = BanditStream::new(means, PayoutModel::Bernoulli).expect("nonempty");
    let mut rng = substream(0xA7, 0, StreamTag::Payouts);
    let cfg = EstimatorConfig::default();
    let mut proxies: Vec<f64> = (0..samples)
        .map(|_| {
            scale_proxy(
                first_head_sample(&mut stream, &mut rng, 1_000_000, cfg.proxy).mu,
                1,
            )
        })
        .collect();
    proxies.sort_by(f64::total_cmp);
    let mut passed = true;
    let mut parts = Vec::new();
    for x in [0.05, 0.1, 0.2] {
        let ecdf = proxies.partition_point(|&v| v <= x) as f64 / samples as f64;
        passed &= (ecdf - x).abs() <= 0.02;
        parts.push(format!("F({x}) = {ecdf:.4}"));
    }
    (
        passed,
        format!("{} over {samples} samples (tol 0.02)", parts.join(", ")),
    )
}

/// Adaptive Simpson quadrature on `[a, b]`.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, eps: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn step(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        eps: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * eps {
            return left + right + delta / 15.0;
        }
        step(f, a, m, fa, flm, fm, left, eps / 2.0, depth - 1)
            + step(f, m, b, fm, frm, fb, right, eps / 2.0, depth - 1)
    }
    let (fa, fb) = (f(a), f(b));
    let fm = f(0.5 * (a + b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, eps, 48)
}

fn binomial(n: u64, k: u64) -> f64 {
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

fn a8() -> (bool, String) {
    let mut worst_prob: f64 = 0.0;
    let mut worst_post: f64 = 0.0;
    for m in 1..=3u32 {
        for a in 0..=10u64 {
            for b in 0..=10u64 {
                let mf = m as f64;
                let weight =
                    move |x: f64| mf * x.powi(m as i32 - 1 + a as i32) * (1.0 - x).powi(b as i32);
                let mass = integrate(&weight, 0.0, 1.0, 1e-15);
                let first = integrate(&|x| x * weight(x), 0.0, 1.0, 1e-15);
                let numeric_prob = binomial(a + b, a) * mass;
                worst_prob = worst_prob.max((prob_observation(a, b, m) - numeric_prob).abs());
                worst_post = worst_post.max((posterior_mean(a, b, m) - first / mass).abs());
            }
        }
    }
    let mut worst_identity: f64 = 0.0;
    for m in 1..=3u32 {
        for t in 0..=20u64 {
            let total: f64 = (0..=t).map(|a| prob_observation(a, t - a, m)).sum();
            let expect: f64 = (0..=t)
                .map(|a| prob_observation(a, t - a, m) * posterior_mean(a, t - a, m))
                .sum();
            worst_identity = worst_identity
                .max((total - 1.0).abs())
                .max((expect - m as f64 / (m as f64 + 1.0)).abs());
        }
    }
    let passed = worst_prob <= 1e-8 && worst_post <= 1e-8 && worst_identity <= 1e-10;
    (
        passed,
        format!(
            "max |Δ| prob {worst_prob:.2e}, posterior {worst_post:.2e} (tol 1e-8); identities {worst_identity:.2e} (tol 1e-10)"
        ),
    )
}

fn a9() -> (bool, String) {
    let closed = (1..=10_000u64)
        .map(|n| (expected_min_exact(n, 1) - 1.0 / (n as f64 + 1.0)).abs())
        .fold(0.0, f64::max);
    let ratio_gap = (1..=3u32)
        .map(|m| (expected_min_exact(100_000, m) / expected_min_asymptotic(100_000, m) - 1.0).abs())
        .fold(0.0, f64::max);
    let mut rng = SplitMix64::new(0xA9);
    let pairs = 1_000_000;
    let mc = (0..pairs)
        .map(|_| rng.next_f64().min(rng.next_f64()))
        .sum::<f64>()
        / pairs as f64;
    let passed = closed <= 1e-12 && ratio_gap <= 0.01 && (mc - 1.0 / 3.0).abs() <= 1e-3;
    (
        passed,
        format!("max |E_n − 1/(n+1)| {closed:.2e}; exact/asymptotic gap {ratio_gap:.2e}; pair min {mc:.5}"),
    )
}

fn a10(ctx: &mut Context, episodes: u64) -> Result<(bool, String)> {
    let n = 10_000u64;
    let k = n * n;
    let mut passed = true;
    let mut parts = Vec::new();
    for c in [0.5, 1.0, 2.0] {
        let dist = DistributionSpec::scaled_power(1, c)?;
        let adaptive = config(
            dist,
            StrategySpec::Adaptive(EstimatorConfig::default()),
            n,
            k,
            episodes,
            0xA10,
            PayoutModel::Bernoulli,
        );
        let known = ExperimentConfig {
            strategy: StrategySpec::KnownPower {
                m: Some(1),
                c: Some(c),
            },
            ..adaptive.clone()
        };
        // Both runs share the mean sequences, so the deltas are paired.
        let a = ctx.run(adaptive)?;
        let b = ctx.run(known)?;
        let deltas: Vec<f64> = a
            .iter()
            .zip(&b)
            .map(|(x, y)| x.loss_per_flip - y.loss_per_flip)
            .collect();
        let (delta, delta_se) = mean_and_se(&deltas);
        let (ma, _) = mean_se(&a, |r| r.loss_per_flip);
        let (mb, _) = mean_se(&b, |r| r.loss_per_flip);
        let ratio = ma / mb;
        let ok = (0.1..=10.0).contains(&ratio) && delta >= -3.0 * delta_se;
        passed &= ok;
        parts.push(format!(
            "C={c}: adaptive {ma:.3e} known {mb:.3e} ratio {ratio:.2}, Δ {delta:.2e}±{delta_se:.1e}"
        ));
    }
    Ok((passed, parts.join("; ")))
}

fn a11(ctx: &Context) -> Result<(bool, String)> {
    let mut identical = true;
    for (cfg, first) in &ctx.csv_runs {
        let again = summary_csv(cfg, &run_episodes(cfg)?)?;
        identical &= &again == first;
    }
    let mut violations = 0usize;
    let mut episodes = 0usize;
    for (cfg, results) in &ctx.fixed_runs {
        let oracle_cfg = ExperimentConfig {
            strategy: StrategySpec::Oracle,
            ..cfg.clone()
        };
        let oracle = run_episodes(&oracle_cfg)?;
        for (o, r) in oracle.iter().zip(results) {
            episodes += 1;
            if o.total_loss > r.total_loss * (1.0 + 1e-9) + 1e-12 {
                violations += 1;
            }
        }
    }
    Ok((
        identical && violations == 0 && episodes > 0,
        format!(
            "{} configs rerun bit-identical: {identical}; oracle dominance violations {violations}/{episodes} fixed-payout episodes over {} runs",
            ctx.csv_runs.len(),
            ctx.fixed_runs.len()
        ),
    ))
}

/// `β` tail values from [`beta_seq`], for cross-checks.
pub fn beta_tail(n: usize) -> f64 {
    *beta_seq(n).last().expect("n >= 1")
}
