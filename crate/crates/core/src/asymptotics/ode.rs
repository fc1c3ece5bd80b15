//! Explicit solutions of the comparison Riccati equations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `sqrt(a/C) coth(sqrt(aC) t)`, the solution of `F' = a - C F^2` coming
/// down from `+infinity` at `t = 0`.
pub fn ode_f(t: f64, a: f64, c: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::domain(format!("F has its pole at t = 0; got t = {t}")));
    }
    if !(a > 0.0) || !(c > 0.0) {
        return Err(Error::param(format!("F needs a > 0 and C > 0, got a = {a}, C = {c}")));
    }
    let z = (a * c).sqrt() * t;
    // coth z = (1 + e^{-2z}) / (1 - e^{-2z}), stable for small and large z
    let e = (-2.0 * z).exp();
    Ok((a / c).sqrt() * (1.0 + e) / -(-2.0 * z).exp_m1())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FAtTau {
    /// `(3/8 - sigma) ln a / sqrt(a)`.
    pub tau_prime: f64,
    /// `(1 + (4/sqrt(beta)) M / (sqrt(a) - (2/sqrt(beta)) M))^2`.
    pub c: f64,
    pub exact: f64,
    /// `sqrt(a) - (2/sqrt(beta)) M + 2 a^{-(1/4 - 2 sigma)}`.
    pub expansion: f64,
}

impl FAtTau {
    pub fn gap(&self) -> f64 {
        (self.exact - self.expansion).abs()
    }
}

/// `F` at the early time `tau'`, exactly and through its two-term expansion.
pub fn ode_f_at_tau(a: f64, beta: f64, sigma: f64, m: f64) -> Result<FAtTau> {
    if !(a > 1.0) || !a.is_finite() {
        return Err(Error::param(format!("expansion needs a > 1, got {a}")));
    }
    if !(beta > 0.0) {
        return Err(Error::param(format!("beta must be positive, got {beta}")));
    }
    if !(sigma > 0.0 && sigma < 0.125) {
        return Err(Error::param(format!("sigma must lie in (0, 1/8), got {sigma}")));
    }
    if !(0.0..=1.0).contains(&m) {
        return Err(Error::param(format!("M must lie in [0, 1], got {m}")));
    }
    let s = a.sqrt();
    let k = 2.0 / beta.sqrt();
    if s <= k * m {
        return Err(Error::param("sqrt(a) must exceed (2/sqrt(beta)) M"));
    }
    let root_c = 1.0 + 2.0 * k * m / (s - k * m);
    let c = root_c * root_c;
    let tau_prime = (0.375 - sigma) * a.ln() / s;
    let exact = ode_f(tau_prime, a, c)?;
    let expansion = s - k * m + 2.0 * a.powf(-(0.25 - 2.0 * sigma));
    Ok(FAtTau {
        tau_prime,
        c,
        exact,
        expansion,
    })
}

/// Solution of `H' = H^2 - C`, `H(0) = start`:
/// `-sqrt(C) tanh(sqrt(C) t - artanh(start / sqrt(C)))`.
///
/// Evaluated in the rational form
/// `sqrt(C) (tanh(sqrt(C) t) - b) / (b tanh(sqrt(C) t) - 1)`, `b = start/sqrt(C)`,
/// which also covers `|start| > sqrt(C)`. For `start > sqrt(C)` the solution
/// blows up at [`ode_h_pole`]; past the pole the meromorphic continuation is
/// returned and the pole itself is a domain error.
pub fn ode_h(t: f64, c: f64, start: f64) -> Result<f64> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::param(format!("H needs C > 0, got {c}")));
    }
    if !(t >= 0.0) {
        return Err(Error::param(format!("H is evaluated forward in time, got t = {t}")));
    }
    let rc = c.sqrt();
    let b = start / rc;
    if b == 1.0 || b == -1.0 {
        return Ok(start);
    }
    let th = (rc * t).tanh();
    let den = b * th - 1.0;
    if den.abs() < 1e-14 {
        return Err(Error::domain(format!("t = {t} is the pole of H")));
    }
    Ok(rc * (th - b) / den)
}

/// Blow-up time of [`ode_h`] for `start > sqrt(C)`.
pub fn ode_h_pole(c: f64, start: f64) -> Option<f64> {
    let rc = c.sqrt();
    (start > rc).then(|| (rc / start).atanh() / rc)
}
