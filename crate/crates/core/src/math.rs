//! Float helpers that `core` does not provide.

#[inline]
pub(crate) fn floor(x: f64) -> f64 {
    libm::floor(x)
}

#[inline]
pub(crate) fn log10(x: f64) -> f64 {
    libm::log10(x)
}

/// Rounds half away from zero.
#[inline]
pub(crate) fn round(x: f64) -> f64 {
    libm::round(x)
}

/// `n` copies of `t` added one at a time, matching a simulated serial queue
/// bit for bit.
pub(crate) fn serial_sum(n: usize, t: f64) -> f64 {
    (0..n).fold(0.0, |acc, _| acc + t)
}
