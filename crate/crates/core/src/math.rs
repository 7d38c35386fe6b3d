//! Scalar helpers over `libm` so the crate stays `no_std`.

pub use libm::{exp, lgamma, log, log1p, sqrt};

pub const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

/// Numerically stable `log(sum(exp(v)))`; `-inf` for an empty or all `-inf` input.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    let sum: f64 = values.iter().map(|v| exp(v - max)).sum();
    max + log(sum)
}

/// Metropolis acceptance probability `min(1, exp(log_ratio))`.
///
/// A NaN log ratio (both sides `-inf`) maps to 0.
#[inline]
pub fn acceptance(log_ratio: f64) -> f64 {
    if log_ratio.is_nan() {
        0.0
    } else if log_ratio >= 0.0 {
        1.0
    } else {
        exp(log_ratio)
    }
}
