//! Mean-generating laws with left tail `C·x^m` on `[0, 1]`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::ln_gamma;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DistributionKind {
    Uniform,
    Power,
    ScaledPower,
}

/// The law `F` that bandit means are drawn from.
///
/// `ScaledPower` is the `Power(m)` law rescaled onto `[0, c^(-1/m)]`, so
/// `cdf(x) = min(c·x^m, 1)`. When `c < 1` the rescaled support overshoots 1
/// and the excess mass sits on the point `x = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistributionSpec {
    kind: DistributionKind,
    m: u32,
    c: f64,
}

impl DistributionSpec {
    pub fn uniform() -> Self {
        Self {
            kind: DistributionKind::Uniform,
            m: 1,
            c: 1.0,
        }
    }

    pub fn power(m: u32) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidParameter(
                "power exponent m must be >= 1".into(),
            ));
        }
        Ok(Self {
            kind: DistributionKind::Power,
            m,
            c: 1.0,
        })
    }

    pub fn scaled_power(m: u32, c: f64) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidParameter(
                "power exponent m must be >= 1".into(),
            ));
        }
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "scale c must be positive, got {c}"
            )));
        }
        Ok(Self {
            kind: DistributionKind::ScaledPower,
            m,
            c,
        })
    }

    pub fn kind(&self) -> DistributionKind {
        self.kind
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    /// `c^(-1/m)`: the factor applied to every threshold and expectation of
    /// the unscaled `x^m` law.
    pub fn scale(&self) -> f64 {
        self.c.powf(-1.0 / self.m as f64)
    }

    pub fn cdf(&self, x: f64) -> Result<f64> {
        check_unit("x", x)?;
        Ok(self.cdf_unchecked(x))
    }

    fn cdf_unchecked(&self, x: f64) -> f64 {
        match self.kind {
            DistributionKind::Uniform => x,
            DistributionKind::Power => x.powi(self.m as i32),
            // Mass left over when c < 1 sits at 1.
            DistributionKind::ScaledPower if x >= 1.0 => 1.0,
            DistributionKind::ScaledPower => (self.c * x.powi(self.m as i32)).min(1.0),
        }
    }

    /// Density of the continuous part (the point mass at 1 for `c < 1` is excluded).
    pub fn pdf(&self, x: f64) -> Result<f64> {
        check_unit("x", x)?;
        let m = self.m as f64;
        let upper = self.scale();
        if x > upper {
            return Ok(0.0);
        }
        Ok(self.c * m * x.powi(self.m as i32 - 1))
    }

    pub fn quantile(&self, u: f64) -> Result<f64> {
        check_unit("u", u)?;
        Ok(self.quantile_unchecked(u))
    }

    #[inline]
    pub(crate) fn quantile_unchecked(&self, u: f64) -> f64 {
        match self.kind {
            DistributionKind::Uniform => u,
            DistributionKind::Power => match self.m {
                1 => u,
                2 => u.sqrt(),
                m => u.powf(1.0 / m as f64),
            },
            DistributionKind::ScaledPower => {
                let v = u / self.c;
                let x = if self.m == 1 {
                    v
                } else {
                    v.powf(1.0 / self.m as f64)
                };
                x.min(1.0)
            }
        }
    }

    /// Inverse-CDF sample for a uniform variate `u ∈ (0, 1)`.
    pub fn sample_mean(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::Domain {
                what: "u",
                value: u,
                domain: "(0, 1)",
            });
        }
        Ok(self.quantile_unchecked(u))
    }

    /// Mean of the law (for `c < 1` this includes the point mass at 1).
    pub fn mean(&self) -> f64 {
        let m = self.m as f64;
        let upper = self.scale();
        if upper <= 1.0 {
            upper * m / (m + 1.0)
        } else {
            // ∫_0^1 (1 - c x^m) dx
            1.0 - self.c / (m + 1.0)
        }
    }

    /// Expected minimum of `n` draws under this law, using the exact `x^m`
    /// value rescaled by `c^(-1/m)` (exact whenever `c >= 1`).
    pub fn expected_min(&self, n: u64) -> f64 {
        expected_min_exact(n, self.m) * self.scale()
    }
}

fn check_unit(what: &'static str, x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::Domain {
            what,
            value: x,
            domain: "[0, 1]",
        })
    }
}

/// Exact expected minimum of `n` draws from the `x^m` law,
/// `Γ(1+1/m)·Γ(n+1) / Γ(n+1+1/m) = ∏_{j≤n} j/(j+1/m)`. The product is used
/// up to `n = 10⁵`, log-Γ space beyond.
pub fn expected_min_exact(n: u64, m: u32) -> f64 {
    assert!(
        n >= 1 && m >= 1,
        "expected_min_exact needs n >= 1 and m >= 1"
    );
    let inv_m = 1.0 / m as f64;
    if n <= 100_000 {
        return (1..=n).fold(1.0, |acc, j| acc * (j as f64 / (j as f64 + inv_m)));
    }
    let nf = n as f64;
    (ln_gamma(1.0 + inv_m) + ln_gamma(nf + 1.0) - ln_gamma(nf + 1.0 + inv_m)).exp()
}

/// Large-`n` form `Γ(1/m) / (m·n^(1/m))`. Not accurate for small `n`
/// (it returns 1 at `n = m = 1`, where the exact value is 1/2).
pub fn expected_min_asymptotic(n: u64, m: u32) -> f64 {
    assert!(
        n >= 1 && m >= 1,
        "expected_min_asymptotic needs n >= 1 and m >= 1"
    );
    let inv_m = 1.0 / m as f64;
    (ln_gamma(inv_m) - (m as f64).ln() - inv_m * (n as f64).ln()).exp()
}

impl fmt::Display for DistributionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            DistributionKind::Uniform => write!(f, "uniform"),
            DistributionKind::Power => write!(f, "power:m={}", self.m),
            DistributionKind::ScaledPower => write!(f, "power:m={},c={}", self.m, self.c),
        }
    }
}

/// Parses `uniform`, `power:m=2` or `power:m=2,c=1.5` (also `scaled-power:…`).
/// Giving `c` always yields a `ScaledPower` law.
impl FromStr for DistributionSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        const KIND: &str = "distribution";
        let s = s.trim();
        let (head, params) = match s.split_once(':') {
            Some((h, p)) => (h.trim(), p),
            None => (s, ""),
        };
        let pairs = parse_params(KIND, s, params)?;
        let mut m = None;
        let mut c = None;
        for (key, value) in pairs {
            match key {
                "m" => m = Some(parse_value::<u32>(KIND, s, key, value)?),
                "c" => c = Some(parse_value::<f64>(KIND, s, key, value)?),
                other => return Err(Error::parse(KIND, s, format!("unknown key `{other}`"))),
            }
        }
        match head.to_ascii_lowercase().as_str() {
            "uniform" => {
                if m.is_some() || c.is_some() {
                    return Err(Error::parse(KIND, s, "uniform takes no parameters"));
                }
                Ok(Self::uniform())
            }
            "power" | "scaled-power" => {
                let m = m.ok_or_else(|| Error::parse(KIND, s, "missing `m`"))?;
                let built = match c {
                    Some(c) => Self::scaled_power(m, c),
                    None if head == "scaled-power" => Err(Error::parse(KIND, s, "missing `c`")),
                    None => Self::power(m),
                };
                built.map_err(|e| Error::parse(KIND, s, e.to_string()))
            }
            other => Err(Error::parse(
                KIND,
                s,
                format!("unknown distribution `{other}`"),
            )),
        }
    }
}

/// Splits `k=v,k=v` into pairs. Shared by the strategy parser.
pub(crate) fn parse_params<'a>(
    kind: &'static str,
    input: &str,
    params: &'a str,
) -> Result<Vec<(&'a str, &'a str)>> {
    params
        .split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| {
            p.split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| Error::parse(kind, input, format!("expected key=value, got `{p}`")))
        })
        .collect()
}

pub(crate) fn parse_value<T: FromStr>(
    kind: &'static str,
    input: &str,
    key: &str,
    value: &str,
) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::parse(kind, input, format!("bad value `{value}` for `{key}`")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;
    use proptest::prelude::*;

    fn trapezoid(f: impl Fn(f64) -> f64, a: f64, b: f64, steps: usize) -> f64 {
        let h = (b - a) / steps as f64;
        let inner: f64 = (1..steps).map(|j| f(a + j as f64 * h)).sum();
        h * (0.5 * (f(a) + f(b)) + inner)
    }

    #[test]
    fn cdf_examples() {
        assert_eq!(DistributionSpec::uniform().cdf(0.3).unwrap(), 0.3);
        assert_eq!(DistributionSpec::power(2).unwrap().cdf(0.5).unwrap(), 0.25);
        let scaled = DistributionSpec::scaled_power(1, 2.0).unwrap();
        // Oracle: integrate the rescaled density from 0 to 0.25.
        let integral = trapezoid(|x| scaled.pdf(x).unwrap(), 0.0, 0.25, 1000);
        assert!((integral - 0.5).abs() < 1e-12);
        assert!((scaled.cdf(0.25).unwrap() - integral).abs() < 1e-12);
    }

    #[test]
    fn cdf_rejects_out_of_domain() {
        let d = DistributionSpec::uniform();
        assert!(matches!(d.cdf(1.5), Err(Error::Domain { .. })));
        assert!(matches!(d.cdf(-0.1), Err(Error::Domain { .. })));
        assert!(d.sample_mean(0.0).is_err());
        assert!(d.sample_mean(1.0).is_err());
    }

    #[test]
    fn sample_mean_examples() {
        assert_eq!(DistributionSpec::uniform().sample_mean(0.7).unwrap(), 0.7);
        assert_eq!(
            DistributionSpec::power(2)
                .unwrap()
                .sample_mean(0.25)
                .unwrap(),
            0.5
        );
        let scaled = DistributionSpec::scaled_power(1, 2.0).unwrap();
        assert_eq!(scaled.sample_mean(0.5).unwrap(), 0.25);
        // Residual mass at 1 when c < 1.
        let thin = DistributionSpec::scaled_power(1, 0.5).unwrap();
        assert_eq!(thin.sample_mean(0.75).unwrap(), 1.0);
    }

    #[test]
    fn uniform_equals_power_one() {
        let u = DistributionSpec::uniform();
        let p = DistributionSpec::power(1).unwrap();
        let s = DistributionSpec::scaled_power(1, 1.0).unwrap();
        for j in 0..=20 {
            let x = j as f64 / 20.0;
            assert_eq!(u.cdf(x).unwrap(), p.cdf(x).unwrap());
            assert_eq!(u.cdf(x).unwrap(), s.cdf(x).unwrap());
            assert_eq!(u.pdf(x).unwrap(), p.pdf(x).unwrap());
            assert_eq!(u.quantile(x).unwrap(), p.quantile(x).unwrap());
        }
        assert_eq!(u.mean(), p.mean());
        assert_eq!(u.expected_min(17), p.expected_min(17));
    }

    #[test]
    fn empirical_cdf_matches() {
        for spec in [
            DistributionSpec::uniform(),
            DistributionSpec::power(2).unwrap(),
            DistributionSpec::scaled_power(2, 1.5).unwrap(),
            DistributionSpec::scaled_power(1, 0.5).unwrap(),
        ] {
            let mut rng = SplitMix64::new(11);
            let mut draws: Vec<f64> = (0..100_000)
                .map(|_| spec.sample_mean(rng.next_open01()).unwrap())
                .collect();
            draws.sort_by(f64::total_cmp);
            for j in 1..=20 {
                let x = j as f64 / 20.0;
                let below = draws.partition_point(|&v| v <= x) as f64 / draws.len() as f64;
                let exact = spec.cdf(x).unwrap();
                assert!(
                    (below - exact).abs() < 0.01,
                    "{spec} at {x}: {below} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn expected_min_examples() {
        assert!((expected_min_exact(1, 1) - 0.5).abs() < 1e-15);
        assert!((expected_min_exact(2, 1) - 1.0 / 3.0).abs() < 1e-14);
        let big = expected_min_exact(1_000_000, 1);
        assert!(((big - expected_min_asymptotic(1_000_000, 1)) / big).abs() < 1e-5);
        assert!((expected_min_asymptotic(100, 1) - 0.01).abs() < 1e-15);
        let gamma_half = std::f64::consts::PI.sqrt();
        assert!((expected_min_asymptotic(10_000, 2) - gamma_half / 200.0).abs() < 1e-12);
        let exact = expected_min_exact(10_000, 2);
        assert!((expected_min_asymptotic(10_000, 2) / exact - 1.0).abs() < 1e-2);
        assert!((expected_min_asymptotic(1, 1) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn expected_min_of_two_uniforms_by_simulation() {
        let mut rng = SplitMix64::new(2024);
        let reps = 1_000_000;
        let total: f64 = (0..reps).map(|_| rng.next_f64().min(rng.next_f64())).sum();
        assert!((total / reps as f64 - expected_min_exact(2, 1)).abs() < 1e-3);
    }

    #[test]
    fn expected_min_uniform_closed_form() {
        for n in 1..=10_000u64 {
            let v = expected_min_exact(n, 1);
            assert!((v - 1.0 / (n as f64 + 1.0)).abs() < 1e-12, "n = {n}");
        }
    }

    #[test]
    fn expected_min_exact_over_asymptotic_tends_to_one() {
        for m in 1..=3 {
            let mut prev_ratio_gap = f64::INFINITY;
            let mut prev = f64::INFINITY;
            for n in [10u64, 100, 1_000, 10_000, 100_000] {
                let exact = expected_min_exact(n, m);
                assert!(exact < prev);
                prev = exact;
                let gap = (exact / expected_min_asymptotic(n, m) - 1.0).abs();
                assert!(gap < prev_ratio_gap);
                prev_ratio_gap = gap;
            }
        }
    }

    #[test]
    fn text_form() {
        let d: DistributionSpec = "power:m=2,c=1.5".parse().unwrap();
        assert_eq!(d.kind(), DistributionKind::ScaledPower);
        assert_eq!((d.m(), d.c()), (2, 1.5));
        assert_eq!(d.to_string(), "power:m=2,c=1.5");
        let p: DistributionSpec = "power:m=3".parse().unwrap();
        assert_eq!(p, DistributionSpec::power(3).unwrap());
        assert_eq!(
            "uniform".parse::<DistributionSpec>().unwrap(),
            DistributionSpec::uniform()
        );
        assert_eq!(
            "scaled-power:m=1,c=2".parse::<DistributionSpec>().unwrap(),
            DistributionSpec::scaled_power(1, 2.0).unwrap()
        );
        for bad in [
            "",
            "gauss",
            "power",
            "power:m=0",
            "power:m=2,c=-1",
            "uniform:m=2",
            "power:m=x",
            "power:q=1",
        ] {
            assert!(bad.parse::<DistributionSpec>().is_err(), "{bad}");
        }
    }

    proptest! {
        #[test]
        fn quantile_inverts_cdf(m in 1u32..5, c in 0.5f64..4.0, x in 0.0f64..1.0) {
            let d = DistributionSpec::scaled_power(m, c).unwrap();
            let x = x * d.scale().min(1.0);
            let back = d.quantile(d.cdf(x).unwrap()).unwrap();
            prop_assert!((back - x).abs() < 1e-9);
        }

        #[test]
        fn cdf_is_monotone(m in 1u32..5, c in 0.5f64..4.0, a in 0.0f64..1.0, b in 0.0f64..1.0) {
            let d = DistributionSpec::scaled_power(m, c).unwrap();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(d.cdf(lo).unwrap() <= d.cdf(hi).unwrap());
            prop_assert_eq!(d.cdf(0.0).unwrap(), 0.0);
        }

        #[test]
        fn display_round_trips(m in 1u32..6, c in 0.1f64..10.0) {
            let d = DistributionSpec::scaled_power(m, c).unwrap();
            prop_assert_eq!(d.to_string().parse::<DistributionSpec>().unwrap(), d);
        }
    }
}
