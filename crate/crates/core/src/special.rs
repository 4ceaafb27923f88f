//! Small numeric helpers shared across modules.

pub(crate) use statrs::function::gamma::ln_gamma;

/// `m!` as a real; exact for the small exponents used here.
pub(crate) fn factorial(m: u32) -> f64 {
    (1..=m).fold(1.0, |acc, j| acc * j as f64)
}

/// Ceiling that snaps to the nearest integer when `x` is within float noise
/// of it, so `(1e6).powf(2/3)` gives 10 000 rather than 10 001.
pub(crate) fn ceil_tolerant(x: f64) -> u64 {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * r.abs().max(1.0) {
        r as u64
    } else {
        x.ceil() as u64
    }
}
