//! Scalar math routed through `libm` so every build uses the same
//! implementations.

pub use core::f64::consts::PI;

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn sin(x: f64) -> f64 {
    libm::sin(x)
}

#[inline]
pub fn cos(x: f64) -> f64 {
    libm::cos(x)
}

#[inline]
pub fn atan2(y: f64, x: f64) -> f64 {
    libm::atan2(y, x)
}

#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub fn abs(x: f64) -> f64 {
    libm::fabs(x)
}

#[inline]
pub fn floor(x: f64) -> f64 {
    libm::floor(x)
}

#[inline]
pub fn ceil(x: f64) -> f64 {
    libm::ceil(x)
}

#[inline]
pub fn hypot(x: f64, y: f64) -> f64 {
    libm::hypot(x, y)
}

/// Reduces an angle to `[0, period)`.
pub fn wrap(x: f64, period: f64) -> f64 {
    let r = x - period * floor(x / period);
    if r >= period {
        0.0
    } else {
        r
    }
}

/// Distance between two angles modulo `period`, in `[0, period / 2]`.
pub fn circular_distance(a: f64, b: f64, period: f64) -> f64 {
    let d = wrap(a - b, period);
    if d > period / 2.0 {
        period - d
    } else {
        d
    }
}
