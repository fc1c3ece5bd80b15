//! Euler-Maruyama loop shared by every simulation in the crate.

use super::{drift_x, drift_y, DiffusionParams, StartValue, StepPolicy};
use crate::error::{Error, Result};
use crate::girsanov::PhiSpec;
use crate::rng::RngStream;

/// Beyond this magnitude a path that is already past the explosion threshold
/// is declared exploded even if the remaining-time bound overshoots the
/// budget; the bound is then below `1e-8` anyway.
const RUNAWAY: f64 = 1e8;

#[derive(Debug, Clone, Copy)]
pub enum Drift<'p> {
    /// `t + a - x^2`; explodes downward.
    Forward,
    /// `-a + y^2 - t + phi(y)`; explodes upward.
    Reversed(Option<&'p PhiSpec>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepFlow {
    Continue,
    Stop,
}

/// Receives every accepted Euler step `(t0, x0) -> (t1, x1)`.
pub trait Observer {
    fn start(&mut self, _t: f64, _x: f64) -> StepFlow {
        StepFlow::Continue
    }

    fn step(&mut self, t0: f64, x0: f64, t1: f64, x1: f64) -> StepFlow;
}

impl Observer for () {
    fn step(&mut self, _: f64, _: f64, _: f64, _: f64) -> StepFlow {
        StepFlow::Continue
    }
}

impl<O: Observer + ?Sized> Observer for &mut O {
    fn start(&mut self, t: f64, x: f64) -> StepFlow {
        (**self).start(t, x)
    }

    fn step(&mut self, t0: f64, x0: f64, t1: f64, x1: f64) -> StepFlow {
        (**self).step(t0, x0, t1, x1)
    }
}

impl<A: Observer, B: Observer> Observer for (A, B) {
    fn start(&mut self, t: f64, x: f64) -> StepFlow {
        let a = self.0.start(t, x);
        let b = self.1.start(t, x);
        if a == StepFlow::Stop || b == StepFlow::Stop {
            StepFlow::Stop
        } else {
            StepFlow::Continue
        }
    }

    fn step(&mut self, t0: f64, x0: f64, t1: f64, x1: f64) -> StepFlow {
        let a = self.0.step(t0, x0, t1, x1);
        let b = self.1.step(t0, x0, t1, x1);
        if a == StepFlow::Stop || b == StepFlow::Stop {
            StepFlow::Stop
        } else {
            StepFlow::Continue
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Termination {
    /// Crossed the certificate threshold; `time` includes the remaining-time bound.
    Exploded { time: f64 },
    /// The observer asked to stop.
    Stopped,
    /// Budget exhausted.
    Budget,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Run {
    pub termination: Termination,
    pub t_start: f64,
    pub x_start: f64,
    pub t_end: f64,
    pub x_end: f64,
    pub steps: u64,
}

/// Time the noise-free flow `x' = a_eff - x^2` needs to come down from
/// `+infinity` to `x`.
pub fn entry_time(a_eff: f64, x: f64) -> f64 {
    if a_eff > 0.0 {
        let r = a_eff.sqrt();
        (r / x).atanh() / r
    } else if a_eff < 0.0 {
        let r = (-a_eff).sqrt();
        (r / x).atan() / r
    } else {
        1.0 / x
    }
}

/// Where and when a path actually begins. A start at `+infinity` is replaced
/// by `x_cap` (raised if needed to stay clear of the attracting branch),
/// reached after the deterministic entry time.
pub fn resolve_start(params: &DiffusionParams, policy: &StepPolicy) -> (f64, f64) {
    match params.x0 {
        StartValue::Finite(x) => (params.t0, x),
        StartValue::PlusInfinity => {
            let a_eff = params.a + params.t0;
            let x = policy.x_cap.max(2.0 * a_eff.max(0.0).sqrt());
            (params.t0 + entry_time(a_eff, x), x)
        }
    }
}

pub fn integrate<O: Observer>(
    params: &DiffusionParams,
    policy: &StepPolicy,
    drift: Drift<'_>,
    rng: &mut RngStream,
    mut observer: O,
) -> Result<Run> {
    params.validate()?;
    policy.validate()?;
    if matches!(drift, Drift::Reversed(_)) && params.x0 == StartValue::PlusInfinity {
        return Err(Error::param("the reversed diffusion needs a finite start"));
    }
    let a = params.a;
    let sigma = params.noise_scale();
    let t_limit = params.t0 + policy.t_budget;
    let (t_start, x_start) = resolve_start(params, policy);
    let mut t = t_start;
    let mut x = x_start;
    let mut steps = 0u64;
    let finish = |termination, t, x, steps| Run {
        termination,
        t_start,
        x_start,
        t_end: t,
        x_end: x,
        steps,
    };

    if observer.start(t, x) == StepFlow::Stop {
        return Ok(finish(Termination::Stopped, t, x, steps));
    }
    if let Some(time) = certify(policy, drift, t, x, a, t_limit) {
        return Ok(finish(Termination::Exploded { time }, t, x, steps));
    }
    while t < t_limit {
        let mut dt = policy.step(t, x, a);
        let mut t1 = t + dt;
        if t1 >= t_limit {
            t1 = t_limit;
            dt = t_limit - t;
        }
        let b = match drift {
            Drift::Forward => drift_x(t, x, a),
            Drift::Reversed(phi) => drift_y(t, x, a, phi),
        };
        let dw = if sigma > 0.0 {
            sigma * dt.sqrt() * rng.standard_normal()
        } else {
            0.0
        };
        let x1 = x + b * dt + dw;
        if !x1.is_finite() {
            return Err(Error::NumericFailure {
                t: t1,
                detail: format!("state left the reals from x = {x} with dt = {dt}"),
            });
        }
        steps += 1;
        let flow = observer.step(t, x, t1, x1);
        t = t1;
        x = x1;
        if flow == StepFlow::Stop {
            return Ok(finish(Termination::Stopped, t, x, steps));
        }
        if let Some(time) = certify(policy, drift, t, x, a, t_limit) {
            return Ok(finish(Termination::Exploded { time }, t, x, steps));
        }
    }
    Ok(finish(Termination::Budget, t, x, steps))
}

#[inline]
fn certify(policy: &StepPolicy, drift: Drift<'_>, t: f64, x: f64, a: f64, t_limit: f64) -> Option<f64> {
    let thr = policy.explosion_threshold(t, a);
    let beyond = match drift {
        Drift::Forward => x <= thr,
        Drift::Reversed(_) => x >= -thr,
    };
    if !beyond {
        return None;
    }
    let time = t + policy.remaining_time_bound(x);
    if time <= t_limit {
        Some(time)
    } else if x.abs() > RUNAWAY {
        Some(time.min(t_limit))
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive_stream;

    #[test]
    fn entry_time_limits() {
        assert!((entry_time(0.0, 10.0) - 0.1).abs() < 1e-15);
        assert!((entry_time(1e-12, 10.0) - 0.1).abs() < 1e-12);
        assert!((entry_time(-1e-12, 10.0) - 0.1).abs() < 1e-12);
        // coth solution: x(t) = r coth(r t)
        let r: f64 = 2.0;
        let t = entry_time(4.0, 10.0);
        assert!((r / (r * t).tanh() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn deterministic_stays_above_branch() {
        let p = DiffusionParams::new(4.0, f64::INFINITY)
            .unwrap()
            .starting_at(0.0, 10.0)
            .unwrap();
        let pol = StepPolicy::for_problem(&p).with_budget(5.0);
        struct Above(bool);
        impl Observer for Above {
            fn step(&mut self, _: f64, _: f64, t1: f64, x1: f64) -> StepFlow {
                // the moving branch lags sqrt(a + t) by about 1/(4 (a + t))
                if x1 < (4.0 + t1).sqrt() - 0.1 || x1 < 2.0 {
                    self.0 = false;
                }
                StepFlow::Continue
            }
        }
        let mut obs = Above(true);
        let run = integrate(&p, &pol, Drift::Forward, &mut derive_stream(0, 0), &mut obs).unwrap();
        assert_eq!(run.termination, Termination::Budget);
        assert!(obs.0);
        assert!((run.x_end - 3.0).abs() < 0.1, "{}", run.x_end);
    }

    #[test]
    fn reversed_rejects_infinite_start() {
        let p = DiffusionParams::new(4.0, 2.0).unwrap();
        let pol = StepPolicy::for_problem(&p);
        assert!(integrate(&p, &pol, Drift::Reversed(None), &mut derive_stream(0, 0), ()).is_err());
    }
}
