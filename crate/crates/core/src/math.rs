//! Scalar float math routed through `libm` so the crate builds without
//! `std`. Methods like `abs`, `max`, `clamp` and `to_radians` are available
//! in `core` and are used directly.

pub use libm::{acos, asin, atan2, ceil, cos, fabs, floor, hypot, round, sin, sqrt, tan};

pub const TAU: f64 = core::f64::consts::TAU;
pub const PI: f64 = core::f64::consts::PI;

/// Euclidean remainder for floats (`f64::rem_euclid` lives in `std`).
pub fn rem_euclid(x: f64, modulus: f64) -> f64 {
    let r = x - modulus * floor(x / modulus);
    if r >= modulus {
        r - modulus
    } else {
        r
    }
}

/// Wraps `angle` into the half-open interval `[min, min + 2π)`.
pub fn wrap_angle(angle: f64, min: f64) -> f64 {
    let mut a = angle - TAU * floor((angle - min) / TAU);
    // floor() can land exactly on min + 2π for inputs just below min.
    if a >= min + TAU {
        a -= TAU;
    }
    if a < min {
        a += TAU;
    }
    a
}
