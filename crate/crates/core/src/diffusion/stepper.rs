use serde::{Deserialize, Serialize};

use super::DiffusionParams;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepPolicy {
    pub dt_max: f64,
    pub safety: f64,
    /// Where a path started at `+infinity` actually begins.
    pub x_cap: f64,
    /// `K` in the explosion threshold `-K sqrt(a_+ + t_+ + 1)`.
    pub explosion_margin: f64,
    /// Integration horizon, measured from the start time.
    pub t_budget: f64,
}

impl StepPolicy {
    pub fn for_problem(params: &DiffusionParams) -> Self {
        let a = params.a;
        // Past t with (a + t)^{3/2} >= 30/beta the diffusion sits on the
        // stable branch and leaving it costs more than exp(-20).
        let c = if params.beta.is_infinite() {
            0.0
        } else {
            (30.0 / params.beta).powf(2.0 / 3.0)
        };
        StepPolicy {
            dt_max: 1e-3 / a.max(1.0).sqrt(),
            safety: 0.1,
            x_cap: 10f64.max(3.0 * (a.abs() + 1.0).sqrt()),
            explosion_margin: 5.0,
            t_budget: (c - a - params.t0).max(1.0) + 1.0,
        }
    }

    pub fn with_dt_max(mut self, dt_max: f64) -> Self {
        self.dt_max = dt_max;
        self
    }

    pub fn with_budget(mut self, t_budget: f64) -> Self {
        self.t_budget = t_budget;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64| v > 0.0 && v.is_finite();
        if !pos(self.dt_max) {
            return Err(Error::param(format!("dt_max must be positive, got {}", self.dt_max)));
        }
        if !(self.safety > 0.0 && self.safety < 1.0) {
            return Err(Error::param(format!("safety must lie in (0, 1), got {}", self.safety)));
        }
        if !pos(self.x_cap) {
            return Err(Error::param(format!("x_cap must be positive, got {}", self.x_cap)));
        }
        if !(self.explosion_margin > 1.0) || !self.explosion_margin.is_finite() {
            return Err(Error::param(format!(
                "explosion margin must exceed 1, got {}",
                self.explosion_margin
            )));
        }
        if !pos(self.t_budget) {
            return Err(Error::param(format!(
                "t_budget must be positive, got {}",
                self.t_budget
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn step(&self, t: f64, x: f64, a: f64) -> f64 {
        self.dt_max.min(self.safety / (1.0 + x * x + a.abs() + t.abs()))
    }

    /// Level below which a forward path is certified to blow down (and above
    /// whose negative a reversed path is certified to blow up).
    #[inline]
    pub fn explosion_threshold(&self, t: f64, a: f64) -> f64 {
        -self.explosion_margin * (a.max(0.0) + t.max(0.0) + 1.0).sqrt()
    }

    /// Upper bound on the remaining time to infinity from `|x|` beyond the
    /// threshold, from `dx/dt <= -(1 - 1/K^2) x^2`.
    #[inline]
    pub fn remaining_time_bound(&self, x: f64) -> f64 {
        let k2 = self.explosion_margin * self.explosion_margin;
        1.0 / ((1.0 - 1.0 / k2) * x.abs())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let p = DiffusionParams::new(4.0, 2.0).unwrap();
        let s = StepPolicy::for_problem(&p);
        s.validate().unwrap();
        assert!((s.dt_max - 5e-4).abs() < 1e-15);
        assert_eq!(s.x_cap, 10.0);
        assert_eq!(s.explosion_margin, 5.0);
        let s = StepPolicy::for_problem(&DiffusionParams::new(100.0, 2.0).unwrap());
        assert!((s.x_cap - 3.0 * 101f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn step_is_positive_and_bounded() {
        let s = StepPolicy::for_problem(&DiffusionParams::new(1.0, 2.0).unwrap());
        for &x in &[-1e6, -3.0, 0.0, 2.0, 1e6] {
            let dt = s.step(0.5, x, 1.0);
            assert!(dt > 0.0 && dt <= s.dt_max);
            assert!(dt * 2.0 * x.abs() < 1.0);
        }
    }

    #[test]
    fn invalid_policy() {
        let s = StepPolicy::for_problem(&DiffusionParams::new(1.0, 2.0).unwrap());
        assert!(StepPolicy { safety: 1.0, ..s }.validate().is_err());
        assert!(StepPolicy { dt_max: 0.0, ..s }.validate().is_err());
        assert!(StepPolicy {
            explosion_margin: 1.0,
            ..s
        }
        .validate()
        .is_err());
    }
}
