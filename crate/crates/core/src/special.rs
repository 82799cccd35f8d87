//! Error function family and standard normal helpers.
//!
//! `erfc` is libm's port of the fdlibm `s_erf.c` routine: piecewise rational
//! approximations on [0, 0.84375), [0.84375, 1.25), [1.25, 1/0.35) and
//! [1/0.35, 28), with the tail handled through `exp(-x^2)` split into two
//! exactly representable parts. Its documented error is below one ulp, far
//! inside the 1e-12 absolute budget the predictive probability needs.

use core::f64::consts::{FRAC_1_SQRT_2, PI};

pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

/// Standard normal density.
pub fn normal_pdf(z: f64) -> f64 {
    libm::exp(-0.5 * z * z) / libm::sqrt(2.0 * PI)
}

/// Standard normal CDF, `Phi(z) = erfc(-z / sqrt 2) / 2`.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z * FRAC_1_SQRT_2)
}

/// `phi(z) / Phi(z)`, stable for very negative `z` where both underflow.
pub fn inverse_mills(z: f64) -> f64 {
    if z > -35.0 {
        normal_pdf(z) / normal_cdf(z)
    } else {
        let z2 = z * z;
        -z / (1.0 - 1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2))
    }
}
