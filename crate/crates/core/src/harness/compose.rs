//! Full-tail estimates assembled from the three stretches of an exploding
//! path: the descent from `+infinity` to `u = sqrt(a) - delta`, the crossing
//! of the parabola from `u` down to `d = -sqrt(a) + delta`, and the final
//! blow-down from `d`.
//!
//! Two assemblies are provided.
//!
//! [`estimate_tail_composed`] is unbiased up to discretisation and
//! truncation. A forward path is simulated from `+infinity`; every time it
//! comes down through `u` (after last visiting `sqrt(a)`) an attempt starts
//! at that time `s`. The chance that the attempt reaches `d` before going
//! back to `sqrt(a)` is estimated by one reversed path for the shifted level
//! `a + s`, and the chance of then exploding before returning to `sqrt(a)`
//! by a few forward replicates from `d`. Summing the products over the
//! attempts of the forward path gives an unbiased estimate of the explosion
//! probability, since exactly one attempt of an exploding path is the one
//! that leads to the explosion. Each piece restarts at the grid point where
//! the previous one stopped rather than on the level itself: restarting on
//! the level throws away the overshoot of every crossing, which cost about
//! ten percent of the tail at `a = 1` with the default step.
//!
//! [`compose_full_tail`] multiplies three separately estimated factors and
//! propagates their errors in log space. It treats the stretches as
//! independent, which they are not, and is kept as a diagnostic of the
//! per-stretch sizes.

use serde::{Deserialize, Serialize};

use crate::asymptotics::{working_delta, working_xi};
use crate::diffusion::{integrate, DiffusionParams, Drift, Observer, StepFlow, StepPolicy, Termination};
use crate::error::{Error, Result};
use crate::estimate::{log_sum_exp, TailEstimate, Z95};
use crate::girsanov::{sample_branch, Branch, PhiSpec};
use crate::parallel::try_map_paths;
use crate::rng::{RngStream, StreamDomain};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComposeSettings {
    /// Inner cutoff; `None` selects [`working_delta`].
    pub delta: Option<f64>,
    pub c3: f64,
    /// Forward replicates of the last stretch per successful crossing.
    pub stretch3_replicates: u32,
    /// Attempts starting after the level has grown enough to cost this many
    /// more nats are not simulated.
    pub horizon_nats: f64,
    /// Scale factor applied to the default `dt_max`.
    pub dt_scale: f64,
}

impl Default for ComposeSettings {
    fn default() -> Self {
        ComposeSettings {
            delta: None,
            c3: 5.0,
            stretch3_replicates: 8,
            horizon_nats: 12.0,
            dt_scale: 1.0,
        }
    }
}

/// Time after which the leading cost `(2/3) beta (a + s)^{3/2}` exceeds its
/// value at `s = 0` by `nats`.
pub fn attempt_horizon(a: f64, beta: f64, nats: f64) -> f64 {
    if beta.is_infinite() {
        return 1.0;
    }
    let ap = a.max(0.0);
    ((ap.powf(1.5) + 1.5 * nats / beta).powf(2.0 / 3.0) - ap).max(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComposedDiagnostics {
    pub delta: f64,
    pub horizon: f64,
    pub attempts: u64,
    pub crossings: u64,
    pub censored_crossings: u64,
    pub aborted_crossings: u64,
    pub main_explosions: u64,
    /// Mean success fraction of the last stretch over successful crossings.
    pub stretch3_mean: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComposedEstimate {
    pub estimate: TailEstimate,
    pub diagnostics: ComposedDiagnostics,
}

/// Records crossing attempts as the first grid point at or below `u`, so
/// that every continuation restarts where the Euler chain actually is.
struct Attempts {
    u: f64,
    top: f64,
    armed: bool,
    starts: Vec<(f64, f64)>,
}

impl Observer for Attempts {
    fn step(&mut self, _: f64, x0: f64, t1: f64, x1: f64) -> StepFlow {
        if x1 >= self.top {
            self.armed = true;
        } else if self.armed && x0 > self.u && x1 <= self.u {
            self.starts.push((t1, x1));
            self.armed = false;
        }
        StepFlow::Continue
    }
}

/// Stops a forward path when it climbs back to `top`.
struct Ceiling(f64);

impl Observer for Ceiling {
    fn step(&mut self, _: f64, _: f64, _: f64, x1: f64) -> StepFlow {
        if x1 >= self.0 {
            StepFlow::Stop
        } else {
            StepFlow::Continue
        }
    }
}

struct PathResult {
    log_total: f64,
    attempts: u64,
    crossings: u64,
    censored: u64,
    aborted: u64,
    exploded: bool,
    stretch3: Vec<f64>,
}

pub fn estimate_tail_composed(
    a: f64,
    beta: f64,
    settings: &ComposeSettings,
    n_paths: u64,
    rng: &RngStream,
) -> Result<ComposedEstimate> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::param(format!("composed estimator needs a > 0, got {a}")));
    }
    if n_paths == 0 {
        return Err(Error::param("n_paths must be at least 1"));
    }
    if settings.stretch3_replicates == 0 || !(settings.c3 > 0.0) || !(settings.dt_scale > 0.0) {
        return Err(Error::param("invalid composition settings"));
    }
    let s = a.sqrt();
    let delta = match settings.delta {
        Some(d) => d,
        None => working_delta(a)?,
    };
    if !(delta > 0.0) || !(delta < s) {
        return Err(Error::param(format!("delta must lie in (0, sqrt(a)), got {delta}")));
    }
    let (u, d) = (s - delta, -s + delta);
    let horizon = attempt_horizon(a, beta, settings.horizon_nats);
    let main_params = DiffusionParams::new(a, beta)?;
    let base = StepPolicy::for_problem(&main_params);
    let main_policy = base.with_dt_max(base.dt_max * settings.dt_scale).with_budget(horizon);

    let per_path = try_map_paths(n_paths, |i| {
        let mut main_rng = rng.split(StreamDomain::ComposedMain, i);
        let mut att = Attempts {
            u,
            top: s,
            armed: true,
            starts: Vec::new(),
        };
        let run = integrate(&main_params, &main_policy, Drift::Forward, &mut main_rng, &mut att)?;
        let mut out = PathResult {
            log_total: f64::NEG_INFINITY,
            attempts: att.starts.len() as u64,
            crossings: 0,
            censored: 0,
            aborted: 0,
            exploded: matches!(run.termination, Termination::Exploded { .. }),
            stretch3: Vec::new(),
        };
        let mut terms = Vec::with_capacity(att.starts.len());
        for (k, &(t_s, x_s)) in att.starts.iter().enumerate() {
            let mut br = main_rng.split(StreamDomain::ComposedBranch, k as u64);
            // a single step may carry the chain past d
            let crossing = if x_s <= d {
                Some((0.0, t_s, x_s))
            } else {
                let a_t = a + t_s;
                let s_t = a_t.sqrt();
                let delta_t = working_delta(a_t)?.min(s_t - u);
                let phi = PhiSpec::phi2(a_t, beta, delta_t)?;
                let shifted = DiffusionParams::new(a_t, beta)?;
                let bp = StepPolicy::for_problem(&shifted);
                let policy = bp
                    .with_dt_max(bp.dt_max * settings.dt_scale)
                    .with_budget(working_xi(a_t, settings.c3)?);
                match sample_branch(a_t, beta, Some(&phi), x_s, d, s, &policy, &mut br)? {
                    Branch::Hit(rec) => Some((rec.log_weight_euler, t_s + rec.t_grid, rec.y_grid)),
                    Branch::Censored => {
                        out.censored += 1;
                        None
                    }
                    Branch::Aborted | Branch::Escaped => {
                        out.aborted += 1;
                        None
                    }
                }
            };
            let Some((log_w, t_d, x_d)) = crossing else {
                continue;
            };
            out.crossings += 1;
            let p3 = DiffusionParams::new(a, beta)?.starting_at(t_d, x_d)?;
            let pp = StepPolicy::for_problem(&p3);
            let pol3 = pp.with_dt_max(pp.dt_max * settings.dt_scale);
            let m = settings.stretch3_replicates;
            let mut wins = 0u32;
            for j in 0..m {
                let mut r3 = br.split(StreamDomain::StretchFactors, j as u64);
                let run3 = integrate(&p3, &pol3, Drift::Forward, &mut r3, Ceiling(s))?;
                if matches!(run3.termination, Termination::Exploded { .. }) {
                    wins += 1;
                }
            }
            let frac = wins as f64 / m as f64;
            out.stretch3.push(frac);
            terms.push(log_w + frac.ln());
        }
        out.log_total = log_sum_exp(&terms);
        Ok(out)
    })?;

    let log_w: Vec<f64> = per_path.iter().map(|p| p.log_total).collect();
    let censored_paths = per_path.iter().filter(|p| p.censored > 0).count() as u64;
    let estimate = TailEstimate::from_log_weights(&log_w, censored_paths)?;
    let s3: Vec<f64> = per_path.iter().flat_map(|p| p.stretch3.iter().copied()).collect();
    let diagnostics = ComposedDiagnostics {
        delta,
        horizon,
        attempts: per_path.iter().map(|p| p.attempts).sum(),
        crossings: per_path.iter().map(|p| p.crossings).sum(),
        censored_crossings: per_path.iter().map(|p| p.censored).sum(),
        aborted_crossings: per_path.iter().map(|p| p.aborted).sum(),
        main_explosions: per_path.iter().filter(|p| p.exploded).count() as u64,
        stretch3_mean: if s3.is_empty() {
            f64::NAN
        } else {
            s3.iter().sum::<f64>() / s3.len() as f64
        },
    };
    Ok(ComposedEstimate { estimate, diagnostics })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComposedTail {
    pub log_p: f64,
    /// Delta-method standard error of `log_p`.
    pub log_stderr: f64,
    pub log_ci: (f64, f64),
    pub stretch1: TailEstimate,
    pub stretch3: TailEstimate,
    pub inner: TailEstimate,
}

/// Product of the inner crossing estimate (started at `sqrt(a) - delta` at
/// time zero) with simulated factors for the first and last stretches.
///
/// The first factor is the mean over forward paths from `+infinity` of
/// `1{T_u < horizon} exp(-(2/3) beta ((a + T_u)^{3/2} - a^{3/2}))`: the
/// exponential discounts the inner probability for the later effective level
/// `a + T_u`, to leading order. The last factor is the fraction of forward
/// paths from `d` at time zero that explode before climbing back to
/// `sqrt(a)`.
pub fn compose_full_tail(
    inner: &TailEstimate,
    a: f64,
    beta: f64,
    delta: f64,
    policy: &StepPolicy,
    n_paths: u64,
    rng: &RngStream,
) -> Result<ComposedTail> {
    if !(a > 0.0) || !(delta > 0.0) || !(delta < a.sqrt()) {
        return Err(Error::param("composition needs a > 0 and delta in (0, sqrt(a))"));
    }
    if n_paths == 0 {
        return Err(Error::param("n_paths must be at least 1"));
    }
    if inner.n_hit == 0 || !(inner.log_p_hat.is_finite()) {
        return Err(Error::EstimatorFailure("inner crossing estimate is zero".into()));
    }
    let s = a.sqrt();
    let (u, d) = (s - delta, -s + delta);
    let main = DiffusionParams::new(a, beta)?;
    let horizon = attempt_horizon(a, beta, 12.0);
    let pol1 = policy.with_budget(horizon);
    let s1 = try_map_paths(n_paths, |i| {
        let mut r = rng.split(StreamDomain::StretchFactors, i);
        let mut att = Attempts {
            u,
            top: f64::INFINITY,
            armed: true,
            starts: Vec::new(),
        };
        struct First<'a>(&'a mut Attempts);
        impl Observer for First<'_> {
            fn step(&mut self, t0: f64, x0: f64, t1: f64, x1: f64) -> StepFlow {
                self.0.step(t0, x0, t1, x1);
                if self.0.starts.is_empty() {
                    StepFlow::Continue
                } else {
                    StepFlow::Stop
                }
            }
        }
        integrate(&main, &pol1, Drift::Forward, &mut r, First(&mut att))?;
        Ok(match att.starts.first() {
            Some(&(t_u, _)) => -(2.0 / 3.0) * beta * ((a + t_u).powf(1.5) - a.powf(1.5)),
            None => f64::NEG_INFINITY,
        })
    })?;
    let stretch1 = TailEstimate::from_log_weights(&s1, 0)?;

    let p3 = DiffusionParams::new(a, beta)?.starting_at(0.0, d)?;
    let pol3 = StepPolicy {
        t_budget: StepPolicy::for_problem(&p3).t_budget,
        ..*policy
    };
    let s3 = try_map_paths(n_paths, |i| {
        let mut r = rng.split(StreamDomain::Diagnostics, i);
        let run = integrate(&p3, &pol3, Drift::Forward, &mut r, Ceiling(s))?;
        Ok((
            matches!(run.termination, Termination::Exploded { .. }),
            run.termination == Termination::Budget,
        ))
    })?;
    let hits = s3.iter().filter(|x| x.0).count() as u64;
    let cens = s3.iter().filter(|x| x.1).count() as u64;
    let stretch3 = TailEstimate::from_binomial(hits, n_paths, cens)?;
    if stretch1.n_hit == 0 || hits == 0 {
        return Err(Error::EstimatorFailure(format!(
            "degenerate stretch factor: {} first-stretch hits, {hits} last-stretch explosions",
            stretch1.n_hit
        )));
    }
    let log_p = stretch1.log_p_hat + inner.log_p_hat + stretch3.log_p_hat;
    let log_stderr = (stretch1.rel_stderr.powi(2) + inner.rel_stderr.powi(2) + stretch3.rel_stderr.powi(2)).sqrt();
    Ok(ComposedTail {
        log_p,
        log_stderr,
        log_ci: (log_p - Z95 * log_stderr, log_p + Z95 * log_stderr),
        stretch1,
        stretch3,
        inner: *inner,
    })
}
