//! Closed-form tail exponents.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Default multiplier of the `sqrt(ln a)` band.
pub const DEFAULT_KAPPA: f64 = 3.0;

fn check_beta(beta: f64) -> Result<()> {
    if beta > 0.0 {
        Ok(())
    } else {
        Err(Error::param(format!("beta must be positive, got {beta}")))
    }
}

/// `-(2/3) beta a^{3/2} - (3/4) beta ln a`, the right-tail log-probability up
/// to its `O(sqrt(ln a))` correction. Meaningful only for `a > 1`; see
/// [`right_tail_warning`].
pub fn log_right_tail(a: f64, beta: f64) -> Result<f64> {
    check_beta(beta)?;
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::domain(format!("right-tail exponent needs a > 0, got {a}")));
    }
    Ok(-(2.0 / 3.0) * beta * a.powf(1.5) - 0.75 * beta * a.ln())
}

/// Warning attached to [`log_right_tail`] outside its asymptotic regime.
pub fn right_tail_warning(a: f64) -> Option<String> {
    (a <= 1.0).then(|| format!("a = {a} <= 1: the right-tail asymptotic is not meaningful here"))
}

/// `d/da` of `-log_right_tail`: `beta sqrt(a) + 3 beta / (4 a)`.
pub fn right_tail_slope(a: f64, beta: f64) -> f64 {
    beta * a.sqrt() + 0.75 * beta / a
}

/// Leading left-tail exponent `-beta a^3 / 24` for `P(TW_beta < -a)`.
pub fn log_left_tail(a: f64, beta: f64) -> f64 {
    -beta * a * a * a / 24.0
}

/// Exact `beta = 2` right-tail asymptotic from Painlevé II:
/// `-(3/2) ln a - ln(16 pi) - (4/3) a^{3/2}`.
pub fn log_right_tail_beta2_painleve(a: f64) -> Result<f64> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::domain(format!("Painlevé tail needs a > 0, got {a}")));
    }
    Ok(-1.5 * a.ln() - (16.0 * PI).ln() - (4.0 / 3.0) * a.powf(1.5))
}

/// Half-width `kappa sqrt(ln a)` of the tolerance band around
/// [`log_right_tail`].
pub fn band(a: f64, kappa: f64) -> f64 {
    kappa * a.max(1.0).ln().sqrt()
}

/// `(exp(-x^2/2), 4 exp(-x^2/2))`: bounds on `P(B_1 > x)` and on
/// `P(sup_{[0,1]} |B| > x)`.
pub fn brownian_tail_bounds(x: f64) -> Result<(f64, f64)> {
    if !(x >= 0.0) {
        return Err(Error::param(format!("tail level must be non-negative, got {x}")));
    }
    let e = (-0.5 * x * x).exp();
    Ok((e, 4.0 * e))
}
