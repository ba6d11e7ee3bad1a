//! Error-function helpers.
//!
//! `erf`/`erfc` come from `libm` (the musl implementations, below one ulp of
//! error). The scaled complement `erfcx` and the product `exp(a)·erfc(b)` are
//! built on top so that CDF terms like `e^A (1 - erf B)` stay finite whenever
//! the mathematical product is.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

const FRAC_1_SQRT_PI: f64 = 0.564_189_583_547_756_3;

#[inline]
pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

#[inline]
pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

/// Scaled complementary error function `exp(x²)·erfc(x)`.
pub fn erfcx(x: f64) -> f64 {
    if x < 4.0 {
        if x < -26.0 {
            return f64::INFINITY;
        }
        return (x * x).exp() * erfc(x);
    }
    // Laplace continued fraction, evaluated bottom-up.
    let mut f = x;
    for k in (1..=80).rev() {
        f = x + (k as f64 * 0.5) / f;
    }
    FRAC_1_SQRT_PI / f
}

/// `exp(a)·erfc(b)` without intermediate overflow.
pub fn exp_erfc(a: f64, b: f64) -> f64 {
    if b > 0.0 {
        (a - b * b).exp() * erfcx(b)
    } else {
        a.exp() * erfc(b)
    }
}

/// Standard normal CDF.
#[inline]
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// Standard normal density.
#[inline]
pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Density of `N(mean, var)` at `x`.
#[inline]
pub fn gaussian_pdf(x: f64, mean: f64, var: f64) -> f64 {
    let d = x - mean;
    (-d * d / (2.0 * var)).exp() / (2.0 * PI * var).sqrt()
}
