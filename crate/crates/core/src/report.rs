//! CSV and JSON output. Numbers carry 10 significant digits.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::bounds::BoundReport;
use crate::error::Result;
use crate::harness::{ExperimentConfig, MonteCarloSummary, Verdict, LOWER_BOUND, UPPER_BOUND};
use crate::stream::TraceRow;

pub const SUMMARY_HEADER: [&str; 15] = [
    "strategy",
    "dist",
    "n",
    "k",
    "episodes",
    "seed",
    "mean_loss_per_flip",
    "std_err",
    "suboptimality",
    "upper_per_flip",
    "upper_verdict",
    "lower_total",
    "lower_verdict",
    "payout",
    "mean_total_loss",
];

pub const TRACE_HEADER: [&str; 6] = [
    "episode",
    "bandit_index",
    "flips",
    "heads",
    "action",
    "loss",
];

pub const BOUNDS_HEADER: [&str; 9] = [
    "n",
    "m",
    "c",
    "k",
    "tail",
    "asymptote",
    "lower_total",
    "upper_per_flip",
    "upper_per_flip_known_power",
];

/// `x` with 10 significant digits, trailing zeros dropped. Very large or
/// small magnitudes use exponent notation.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".into() } else { x.to_string() };
    }
    let exp = x.abs().log10().floor() as i32;
    if !(-6..=15).contains(&exp) {
        let s = format!("{x:.9e}");
        let (mantissa, e) = s.split_once('e').expect("exponent form");
        return format!("{}e{e}", trim_zeros(mantissa));
    }
    let decimals = (9 - exp).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// One experiment as written to CSV; the JSON form has the same fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRecord {
    pub strategy: String,
    pub dist: String,
    pub n: u64,
    pub k: u64,
    pub episodes: u64,
    pub seed: u64,
    pub mean_loss_per_flip: f64,
    pub std_err: f64,
    pub suboptimality: f64,
    pub upper_per_flip: Option<f64>,
    pub upper_verdict: Verdict,
    pub lower_total: Option<f64>,
    pub lower_verdict: Verdict,
    pub payout: String,
    pub mean_total_loss: f64,
}

impl SummaryRecord {
    pub fn new(config: &ExperimentConfig, summary: &MonteCarloSummary) -> Self {
        let bound = |name| {
            summary
                .verdict(name)
                .map(|v| (v.reference, v.verdict))
                .unwrap_or((None, Verdict::NotApplicable))
        };
        let (upper_per_flip, upper_verdict) = bound(UPPER_BOUND);
        let (lower_total, lower_verdict) = bound(LOWER_BOUND);
        Self {
            strategy: config.strategy.to_string(),
            dist: config.dist.to_string(),
            n: config.n,
            k: config.k,
            episodes: config.episodes,
            seed: config.master_seed,
            mean_loss_per_flip: summary.mean_loss_per_flip,
            std_err: summary.std_error,
            suboptimality: summary.suboptimality,
            upper_per_flip,
            upper_verdict,
            lower_total,
            lower_verdict,
            payout: config.payout.to_string(),
            mean_total_loss: summary.mean_total_loss,
        }
    }

    fn fields(&self) -> [String; 15] {
        let opt = |v: Option<f64>| v.map(fmt_num).unwrap_or_default();
        [
            self.strategy.clone(),
            self.dist.clone(),
            self.n.to_string(),
            self.k.to_string(),
            self.episodes.to_string(),
            self.seed.to_string(),
            fmt_num(self.mean_loss_per_flip),
            fmt_num(self.std_err),
            fmt_num(self.suboptimality),
            opt(self.upper_per_flip),
            self.upper_verdict.to_string(),
            opt(self.lower_total),
            self.lower_verdict.to_string(),
            self.payout.clone(),
            fmt_num(self.mean_total_loss),
        ]
    }
}

pub fn write_summaries<W: Write>(out: W, records: &[SummaryRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SUMMARY_HEADER)?;
    for r in records {
        w.write_record(r.fields())?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_summaries_json<W: Write>(out: W, records: &[SummaryRecord]) -> Result<()> {
    serde_json::to_writer_pretty(out, records)?;
    Ok(())
}

pub fn write_trace<W: Write>(out: W, episode: u64, rows: &[TraceRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_HEADER)?;
    for r in rows {
        w.write_record([
            episode.to_string(),
            r.bandit_index.to_string(),
            r.flips.to_string(),
            r.heads.to_string(),
            r.action.to_string(),
            fmt_num(r.loss),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_bounds<W: Write>(out: W, reports: &[BoundReport]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(BOUNDS_HEADER)?;
    for r in reports {
        w.write_record([
            r.n.to_string(),
            r.m.to_string(),
            fmt_num(r.c),
            r.k.map(|k| k.to_string()).unwrap_or_default(),
            fmt_num(r.tail()),
            fmt_num(r.asymptote),
            r.lower_total_small_k.map(fmt_num).unwrap_or_default(),
            fmt_num(r.upper_per_flip),
            fmt_num(r.upper_per_flip_known_power),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_bounds_json<W: Write>(out: W, report: &BoundReport) -> Result<()> {
    serde_json::to_writer_pretty(out, report)?;
    Ok(())
}
