//! The Girsanov log-weight of a reversed path relative to the forward law.
//!
//! Under the forward law the drift is `h = t + a - y^2`; the sampling law
//! uses `-h + phi(y)`. With noise variance `4/beta` the log-likelihood ratio
//! of a path stopped at `T'` is `G = (beta/4) * (star + phi terms)` where
//! `star = 2 int h dY`. Itô's formula applied to `2 (t + a) y - (2/3) y^3`
//! turns `star` into endpoint terms plus `(8/beta - 2) int Y dt`, which is the
//! closed form reported here; the raw Itô sum is accumulated alongside as a
//! discretisation check.
//!
//! Estimators do not use the closed form. Applied to an Euler path it differs
//! from the path's true likelihood ratio by a zero-mean discretisation noise,
//! and `E exp(G + noise)` then overshoots by about `exp(var / 2)`; with a
//! steep `phi` that is several percent. They use instead the exact likelihood
//! ratio of the Euler chain itself, the product of Gaussian step densities,
//! which makes the weighted estimate unbiased for the same discrete chain the
//! naive estimator simulates.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::PhiSpec;
use crate::diffusion::{Observer, StepFlow};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightRecord {
    pub a: f64,
    pub beta: f64,
    pub y_start: f64,
    pub y_end: f64,
    pub t_start: f64,
    /// Hitting time `T'` of `y_end`.
    pub t_hit: f64,
    pub int_y: f64,
    /// `(beta/4) (-(8/3) a^{3/2})`.
    pub term_main: f64,
    /// Remaining endpoint terms of `star`, scaled by `beta/4`.
    pub term_boundary: f64,
    /// `(beta/4) 2 T' y_end`.
    pub term_time: f64,
    /// `(beta/4) (8/beta - 2) int Y dt`.
    pub term_pathintegral: f64,
    /// `(beta/4) (Phi(Y_0) - Phi(Y_T') + int ((2/beta) phi' + phi^2/2 + phi (Y^2 - a - t)) dt)`.
    pub term_phi: f64,
    /// Unscaled left-point Itô sum `2 sum (t + a - Y^2) dY`.
    pub accumulation_direct: f64,
    /// Closed-form `G`, the sum of the `term_*` fields.
    pub log_weight: f64,
    /// Log-likelihood ratio of the simulated Euler chain, over whole steps up
    /// to the first grid point at or below the target. Used by the estimators.
    pub log_weight_euler: f64,
    /// First grid point at or below the target. A continuation of the
    /// chain starts here, not at `(t_hit, y_end)`.
    pub t_grid: f64,
    pub y_grid: f64,
}

impl WeightRecord {
    /// Unscaled closed form of `star`.
    pub fn star_closed(&self) -> f64 {
        (self.term_main + self.term_boundary + self.term_time + self.term_pathintegral) * 4.0 / self.beta
    }

    pub fn parts_sum(&self) -> f64 {
        self.term_main + self.term_boundary + self.term_time + self.term_pathintegral + self.term_phi
    }

    /// The weight with `star` replaced by the direct Itô sum.
    pub fn log_weight_direct(&self) -> f64 {
        0.25 * self.beta * self.accumulation_direct + self.term_phi
    }
}

/// Closed-form weight from the summary statistics of a path from
/// `(t_start, y_start)` to `(t_hit, y_end)`.
#[allow(clippy::too_many_arguments)]
pub fn closed_form_weight(
    a: f64,
    beta: f64,
    phi: Option<&PhiSpec>,
    t_start: f64,
    y_start: f64,
    t_hit: f64,
    y_end: f64,
    int_y: f64,
    int_phi: f64,
    accumulation_direct: f64,
) -> WeightRecord {
    let q = 0.25 * beta;
    let a32 = a.max(0.0).powf(1.5);
    let (u, d) = (y_start, y_end);
    let main = -(8.0 / 3.0) * a32;
    let boundary = 2.0 * a * (d - u) - (2.0 / 3.0) * (d * d * d - u * u * u) + (8.0 / 3.0) * a32 - 2.0 * t_start * u;
    let time = 2.0 * t_hit * d;
    let path = (8.0 / beta - 2.0) * int_y;
    let phi_part = match phi {
        Some(p) => p.antiderivative(u) - p.antiderivative(d) + int_phi,
        None => 0.0,
    };
    let mut rec = WeightRecord {
        a,
        beta,
        y_start: u,
        y_end: d,
        t_start,
        t_hit,
        int_y,
        term_main: q * main,
        term_boundary: q * boundary,
        term_time: q * time,
        term_pathintegral: q * path,
        term_phi: q * phi_part,
        accumulation_direct,
        log_weight: 0.0,
        log_weight_euler: 0.0,
        t_grid: t_hit,
        y_grid: d,
    };
    rec.log_weight = rec.parts_sum();
    // without the path, the closed form is the only weight available
    rec.log_weight_euler = rec.log_weight;
    rec
}

/// Observer that accumulates the weight integrals along a reversed path and
/// stops on the first downward crossing of `target` or upward crossing of
/// `abort`.
#[derive(Debug, Clone)]
pub struct WeightAccumulator<'p> {
    a: f64,
    beta: f64,
    phi: Option<&'p PhiSpec>,
    target: f64,
    abort: f64,
    t_start: f64,
    y_start: f64,
    int_y: f64,
    int_phi: f64,
    direct: f64,
    euler: f64,
    outcome: Option<Crossed>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Crossed {
    Target { t_hit: f64, t_grid: f64, y_grid: f64 },
    Abort,
}

impl<'p> WeightAccumulator<'p> {
    pub fn new(a: f64, beta: f64, phi: Option<&'p PhiSpec>, target: f64, abort: f64) -> Self {
        WeightAccumulator {
            a,
            beta,
            phi,
            target,
            abort,
            t_start: 0.0,
            y_start: f64::NAN,
            int_y: 0.0,
            int_phi: 0.0,
            direct: 0.0,
            euler: 0.0,
            outcome: None,
        }
    }

    pub fn aborted(&self) -> bool {
        self.outcome == Some(Crossed::Abort)
    }

    /// The weight record, if the target was reached.
    pub fn record(&self) -> Option<WeightRecord> {
        match self.outcome {
            Some(Crossed::Target { t_hit, t_grid, y_grid }) => {
                let mut rec = closed_form_weight(
                    self.a,
                    self.beta,
                    self.phi,
                    self.t_start,
                    self.y_start,
                    t_hit,
                    self.target,
                    self.int_y,
                    self.int_phi,
                    self.direct,
                );
                rec.log_weight_euler = 0.25 * self.beta * self.euler;
                rec.t_grid = t_grid;
                rec.y_grid = y_grid;
                Some(rec)
            }
            _ => None,
        }
    }

    #[inline]
    fn add(&mut self, t0: f64, y0: f64, dt: f64, dy: f64) {
        self.int_y += y0 * dt;
        if let Some(p) = self.phi {
            self.int_phi += p.weight_integrand(t0, y0) * dt;
        }
        self.direct += 2.0 * (t0 + self.a - y0 * y0) * dy;
    }
}

impl Observer for WeightAccumulator<'_> {
    fn start(&mut self, t: f64, y: f64) -> StepFlow {
        self.t_start = t;
        self.y_start = y;
        if y <= self.target {
            self.outcome = Some(Crossed::Target {
                t_hit: t,
                t_grid: t,
                y_grid: y,
            });
            StepFlow::Stop
        } else if y >= self.abort {
            self.outcome = Some(Crossed::Abort);
            StepFlow::Stop
        } else {
            StepFlow::Continue
        }
    }

    #[inline]
    fn step(&mut self, t0: f64, y0: f64, t1: f64, y1: f64) -> StepFlow {
        // Gaussian log-density ratio of the whole step, forward drift h over
        // sampling drift -h + phi, times 4/beta
        let h = t0 + self.a - y0 * y0;
        let p = self.phi.map_or(0.0, |f| f.eval(y0));
        let dy = y1 - y0;
        self.euler += (2.0 * h - p) * dy + (0.5 * p * p - h * p) * (t1 - t0);
        if y1 <= self.target {
            let theta = (self.target - y0) / (y1 - y0);
            let t_hit = t0 + theta * (t1 - t0);
            self.add(t0, y0, t_hit - t0, self.target - y0);
            self.outcome = Some(Crossed::Target {
                t_hit,
                t_grid: t1,
                y_grid: y1,
            });
            return StepFlow::Stop;
        }
        self.add(t0, y0, t1 - t0, y1 - y0);
        if y1 >= self.abort {
            self.outcome = Some(Crossed::Abort);
            return StepFlow::Stop;
        }
        StepFlow::Continue
    }
}

/// Weight of a recorded reversed path `(t, y)` that runs from its first
/// point down to `target`. The trace must be at full resolution.
pub fn girsanov_log_weight(
    trace: &[(f64, f64)],
    a: f64,
    beta: f64,
    phi: Option<&PhiSpec>,
    target: f64,
) -> Result<WeightRecord> {
    let Some(&(t0, y0)) = trace.first() else {
        return Err(Error::param("empty trace"));
    };
    let mut acc = WeightAccumulator::new(a, beta, phi, target, f64::INFINITY);
    if acc.start(t0, y0) == StepFlow::Continue {
        for w in trace.windows(2) {
            if acc.step(w[0].0, w[0].1, w[1].0, w[1].1) == StepFlow::Stop {
                break;
            }
        }
    }
    acc.record().ok_or_else(|| {
        Error::EstimatorFailure(format!(
            "path never reached the target level {target}; weight undefined"
        ))
    })
}

pub fn write_weight_csv<W: Write>(mut w: W, records: &[WeightRecord]) -> Result<()> {
    w.write_all(
        b"t_hit,int_y,log_weight,term_main,term_boundary,term_time,term_pathintegral,term_phi,accumulation_direct,log_weight_euler\n",
    )?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{}",
            r.t_hit,
            r.int_y,
            r.log_weight,
            r.term_main,
            r.term_boundary,
            r.term_time,
            r.term_pathintegral,
            r.term_phi,
            r.accumulation_direct,
            r.log_weight_euler
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn main_term_is_exact() {
        let r = closed_form_weight(4.0, 2.0, None, 0.0, 1.2, 0.7, -1.2, -0.3, 0.0, 0.0);
        assert_eq!(r.term_main, -(2.0 / 3.0) * 2.0 * 8.0);
        assert!((r.parts_sum() - r.log_weight).abs() < 1e-12);
    }

    #[test]
    fn symmetric_endpoints_match_expanded_polynomial() {
        let (a, beta, l, t): (f64, f64, f64, f64) = (9.0, 2.0, 0.4, 0.8);
        let s = a.sqrt();
        let r = closed_form_weight(a, beta, None, 0.0, s - l, t, -s + l, 0.0, 0.0, 0.0);
        let bound = -(4.0 / 3.0) * l.powi(3) + 4.0 * s * l * l;
        let time = 2.0 * l * t - 2.0 * s * t;
        assert!((r.term_boundary - 0.5 * bound).abs() < 1e-12);
        assert!((r.term_time - 0.5 * time).abs() < 1e-12);
    }

    #[test]
    fn degenerate_path_limit() {
        let a: f64 = 100.0;
        let phi = PhiSpec::phi2(a, 2.0, 0.5).unwrap();
        let s = a.sqrt();
        let eps = 1e-9;
        let r = closed_form_weight(a, 2.0, Some(&phi), 0.0, s - eps, 0.0, -s + eps, 0.0, 0.0, 0.0);
        let expect = -(2.0 / 3.0) * 2.0 * a.powf(1.5) + 0.5 * (phi.antiderivative(s) - phi.antiderivative(-s));
        assert!((r.log_weight - expect).abs() < 1e-6, "{} vs {}", r.log_weight, expect);
    }

    #[test]
    fn trace_must_hit_target() {
        let trace = [(0.0, 1.0), (0.1, 0.5), (0.2, 0.2)];
        assert!(girsanov_log_weight(&trace, 1.0, 2.0, None, -0.5).is_err());
        let r = girsanov_log_weight(&trace, 1.0, 2.0, None, 0.3).unwrap();
        assert!((r.t_hit - (0.1 + 0.1 * 2.0 / 3.0)).abs() < 1e-12);
        assert!((r.int_y - (0.1 + 0.5 * 0.1 * 2.0 / 3.0)).abs() < 1e-12);
    }
}
