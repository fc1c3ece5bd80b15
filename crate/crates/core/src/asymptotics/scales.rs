//! The time and space scales of the tail event at level `a`.

use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::girsanov::c1_floor;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalScales {
    pub a: f64,
    /// `(3/8) ln a / sqrt(a)`, the typical time to reach `sqrt(a)` from `+infinity`.
    pub tau: f64,
    /// `(3/8 - 1/sqrt(ln a)) ln a / sqrt(a)`; negative until `ln a > 64/9`.
    pub tau_minus: f64,
    /// `(ln a / a)^{1/4}`.
    pub delta: f64,
    /// `(4/sqrt(beta)) sqrt(ln a) / a^{1/4}`.
    pub epsilon: f64,
    /// `c3 ln a / sqrt(a)`.
    pub xi: f64,
}

pub fn critical_scales(a: f64, beta: f64, c3: f64) -> Result<CriticalScales> {
    if !(a > E) || !a.is_finite() {
        return Err(Error::domain(format!("critical scales need a > e, got {a}")));
    }
    if !(beta > 0.0) {
        return Err(Error::param(format!("beta must be positive, got {beta}")));
    }
    if !(c3 > 0.0) {
        return Err(Error::param(format!("c3 must be positive, got {c3}")));
    }
    let l = a.ln();
    let s = a.sqrt();
    Ok(CriticalScales {
        a,
        tau: 0.375 * l / s,
        tau_minus: (0.375 - 1.0 / l.sqrt()) * l / s,
        delta: (l / a).powf(0.25),
        epsilon: 4.0 / beta.sqrt() * l.sqrt() / a.powf(0.25),
        xi: c3 * l / s,
    })
}

/// Inner cutoff used by the estimators. Equals the critical `delta` for
/// `a > e`; below that the `ln a` factor degenerates, so `delta(e)` is used,
/// capped at `sqrt(a)/2` to leave a core interval.
pub fn working_delta(a: f64) -> Result<f64> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::param(format!("working delta needs a > 0, got {a}")));
    }
    let l = a.max(E);
    Ok(((l.ln() / l).powf(0.25)).min(0.5 * a.sqrt()))
}

/// Censoring horizon `c3 max(ln a, 1) / sqrt(a)`.
pub fn working_xi(a: f64, c3: f64) -> Result<f64> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::param(format!("working horizon needs a > 0, got {a}")));
    }
    Ok(c3 * a.ln().max(1.0) / a.sqrt())
}

/// Smallest integer `c3 >= 1` for which `(beta/4) c3 c + (3/16) c1 beta < -beta`
/// with `c = |8/beta - 2| - 2 - c1`.
pub fn default_c3(beta: f64, c1: f64) -> Result<f64> {
    let floor = c1_floor(beta)?;
    if c1 <= floor {
        return Err(Error::param(format!("c1 = {c1} must exceed {floor}")));
    }
    let c = (8.0 / beta - 2.0).abs() - 2.0 - c1;
    let bound = 4.0 * (1.0 + 0.1875 * c1) / c.abs();
    Ok((bound.floor() + 1.0).max(1.0))
}

/// `2 sqrt(beta) / sqrt(3) + 3`, the cap on the running maximum.
pub fn default_c2(beta: f64) -> f64 {
    2.0 * beta.sqrt() / 3f64.sqrt() + 3.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::girsanov::default_c1;

    #[test]
    fn at_e_to_the_fourth() {
        let a = 4f64.exp();
        let s = critical_scales(a, 2.0, 1.0).unwrap();
        assert!((s.tau - 1.5 / 2f64.exp()).abs() < 1e-14);
        assert!((s.tau - 0.203_00).abs() < 1e-5);
        assert!((s.delta - 0.520_26).abs() < 1e-5);
        assert!(s.tau_minus < s.tau);
        assert!((s.tau * a.sqrt() / a.ln() - 0.375).abs() < 1e-15);
    }

    #[test]
    fn domain() {
        assert!(critical_scales(E, 2.0, 1.0).is_err());
        assert!(critical_scales(2.0, 2.0, 1.0).is_err());
        assert!(critical_scales(3.0, 2.0, 1.0).is_ok());
    }

    #[test]
    fn epsilon_over_delta() {
        for &a in &[10.0, 1e3, 1e6] {
            let s = critical_scales(a, 2.0, 1.0).unwrap();
            let expect = 4.0 / 2f64.sqrt() * a.ln().powf(0.25);
            assert!((s.epsilon / s.delta - expect).abs() < 1e-12 * expect);
        }
    }

    #[test]
    fn constants() {
        assert_eq!(default_c3(2.0, default_c1(2.0).unwrap()).unwrap(), 5.0);
        assert_eq!(default_c3(1.0, default_c1(1.0).unwrap()).unwrap(), 8.0);
        assert!(default_c3(2.0, 0.0).is_err());
        assert!((default_c2(2.0) - (2.0 * 2f64.sqrt() / 3f64.sqrt() + 3.0)).abs() < 1e-15);
    }

    #[test]
    fn working_scales() {
        assert!((working_delta(100.0).unwrap() - (100f64.ln() / 100.0).powf(0.25)).abs() < 1e-15);
        assert!((working_delta(0.5).unwrap() - 0.5 * 0.5f64.sqrt()).abs() < 1e-15);
        assert!((working_xi(1.0, 5.0).unwrap() - 5.0).abs() < 1e-15);
    }
}
