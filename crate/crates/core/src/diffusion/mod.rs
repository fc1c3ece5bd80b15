//! The explosion diffusion `dX = (t + a - X^2) dt + (2/sqrt(beta)) dB` and its
//! drift-reversed companion.

mod integrate;
mod naive;
mod path;
mod stepper;
mod trace;

pub use integrate::{entry_time, integrate, resolve_start, Drift, Observer, Run, StepFlow, Termination};
pub use naive::{estimate_hit_naive, estimate_tail_naive, simulate_coupled, CoupledPaths};
pub use path::{simulate_path, PathOutcome, PathQuery};
pub use stepper::StepPolicy;
pub use trace::{simulate_trace, write_trace_csv, TraceRecorder};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::girsanov::PhiSpec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum StartValue {
    Finite(f64),
    PlusInfinity,
}

impl StartValue {
    pub fn finite(self) -> Option<f64> {
        match self {
            StartValue::Finite(x) => Some(x),
            StartValue::PlusInfinity => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffusionParams {
    pub a: f64,
    /// Inverse temperature; `f64::INFINITY` switches the noise off.
    pub beta: f64,
    pub t0: f64,
    pub x0: StartValue,
}

impl DiffusionParams {
    /// The problem started from `+infinity` at time zero.
    pub fn new(a: f64, beta: f64) -> Result<Self> {
        let p = DiffusionParams {
            a,
            beta,
            t0: 0.0,
            x0: StartValue::PlusInfinity,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn starting_at(mut self, t0: f64, x0: f64) -> Result<Self> {
        self.t0 = t0;
        self.x0 = StartValue::Finite(x0);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.a.is_finite() {
            return Err(Error::param(format!("a must be finite, got {}", self.a)));
        }
        if !(self.beta > 0.0) {
            return Err(Error::param(format!("beta must be positive, got {}", self.beta)));
        }
        if !(self.t0 >= 0.0) || !self.t0.is_finite() {
            return Err(Error::param(format!(
                "start time must be non-negative, got {}",
                self.t0
            )));
        }
        if let StartValue::Finite(x) = self.x0 {
            if !x.is_finite() {
                return Err(Error::param("finite start value is not finite; use PlusInfinity"));
            }
        }
        Ok(())
    }

    /// Noise coefficient `2 / sqrt(beta)`, zero for `beta = infinity`.
    pub fn noise_scale(&self) -> f64 {
        if self.beta.is_infinite() {
            0.0
        } else {
            2.0 / self.beta.sqrt()
        }
    }
}

#[inline]
pub fn drift_x(t: f64, x: f64, a: f64) -> f64 {
    t + a - x * x
}

#[inline]
pub fn drift_y(t: f64, y: f64, a: f64, phi: Option<&PhiSpec>) -> f64 {
    let base = -a + y * y - t;
    match phi {
        Some(p) => base + p.eval(y),
        None => base,
    }
}

/// The same problem seen from time `tau`: `a + tau` with the clock reset.
pub fn shifted_params(params: &DiffusionParams, tau: f64) -> Result<DiffusionParams> {
    if !(tau >= 0.0) || !tau.is_finite() {
        return Err(Error::param(format!("shift must be non-negative, got {tau}")));
    }
    Ok(DiffusionParams {
        a: params.a + tau,
        t0: 0.0,
        ..*params
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn drifts() {
        assert_eq!(drift_x(0.0, 0.0, 4.0), 4.0);
        assert_eq!(drift_x(1.0, 2.0, 3.0), 0.0);
        assert_eq!(drift_x(0.0, -3.0, 0.0), -9.0);
        assert_eq!(drift_y(1.0, 2.0, 3.0, None), 0.0);
        assert_eq!(drift_y(0.0, 0.0, 4.0, None), -4.0);
        let phi = PhiSpec::phi2(100.0, 2.0, 0.5).unwrap();
        assert!((drift_y(0.0, 0.0, 100.0, Some(&phi)) + 100.2).abs() < 1e-12);
    }

    #[test]
    fn shift() {
        let p = DiffusionParams::new(100.0, 2.0).unwrap().starting_at(0.3, 9.0).unwrap();
        assert_eq!(shifted_params(&p, 0.0).unwrap().a, 100.0);
        let s = shifted_params(&p, 0.173).unwrap();
        assert!((s.a - 100.173).abs() < 1e-12);
        assert_eq!(s.t0, 0.0);
        assert!(shifted_params(&p, -1.0).is_err());
    }

    #[test]
    fn params_validation() {
        assert!(DiffusionParams::new(1.0, 0.0).is_err());
        assert!(DiffusionParams::new(f64::NAN, 2.0).is_err());
        assert_eq!(DiffusionParams::new(1.0, f64::INFINITY).unwrap().noise_scale(), 0.0);
        assert!((DiffusionParams::new(1.0, 2.0).unwrap().noise_scale() - 2f64.sqrt()).abs() < 1e-15);
    }
}
