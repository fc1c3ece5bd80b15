use super::path::crossing;
use super::{drift_x, integrate, DiffusionParams, Drift, Observer, StartValue, StepFlow, StepPolicy, Termination};
use crate::error::{Error, Result};
use crate::estimate::TailEstimate;
use crate::parallel::try_map_paths;
use crate::rng::{RngStream, StreamDomain};

/// Fraction of exploding paths, with its Clopper-Pearson interval.
///
/// A path whose budget runs out is counted as censored only when it ends
/// below zero; paths ending above zero sit near the stable branch, from
/// which a late explosion is negligible with the default budget.
pub fn estimate_tail_naive(
    params: &DiffusionParams,
    policy: &StepPolicy,
    n_paths: u64,
    rng: &RngStream,
) -> Result<TailEstimate> {
    if n_paths == 0 {
        return Err(Error::param("n_paths must be at least 1"));
    }
    let runs = try_map_paths(n_paths, |i| {
        let mut r = rng.split(StreamDomain::NaivePaths, i);
        integrate(params, policy, Drift::Forward, &mut r, ())
    })?;
    let mut hit = 0;
    let mut censored = 0;
    for run in &runs {
        match run.termination {
            Termination::Exploded { .. } => hit += 1,
            Termination::Budget if run.x_end < 0.0 => censored += 1,
            _ => {}
        }
    }
    TailEstimate::from_binomial(hit, n_paths, censored)
}

struct FirstHit {
    level: f64,
    hit: bool,
}

impl Observer for FirstHit {
    fn start(&mut self, _t: f64, x: f64) -> StepFlow {
        self.hit = x == self.level;
        if self.hit {
            StepFlow::Stop
        } else {
            StepFlow::Continue
        }
    }

    fn step(&mut self, t0: f64, x0: f64, t1: f64, x1: f64) -> StepFlow {
        if crossing(self.level, t0, x0, t1, x1).is_some() {
            self.hit = true;
            StepFlow::Stop
        } else {
            StepFlow::Continue
        }
    }
}

/// Fraction of forward paths that reach `level` within the budget.
pub fn estimate_hit_naive(
    params: &DiffusionParams,
    policy: &StepPolicy,
    level: f64,
    n_paths: u64,
    rng: &RngStream,
) -> Result<TailEstimate> {
    if n_paths == 0 {
        return Err(Error::param("n_paths must be at least 1"));
    }
    if !level.is_finite() {
        return Err(Error::param("hitting level must be finite"));
    }
    let hits = try_map_paths(n_paths, |i| {
        let mut r = rng.split(StreamDomain::NaivePaths, i);
        let mut obs = FirstHit { level, hit: false };
        let run = integrate(params, policy, Drift::Forward, &mut r, &mut obs)?;
        // an explosion certificate is always below any level the path was above
        let hit = obs.hit || matches!(run.termination, Termination::Exploded { .. });
        let unresolved = !hit && run.termination == Termination::Budget && run.x_end < 0.0;
        Ok((hit, unresolved))
    })?;
    let n_hit = hits.iter().filter(|h| h.0).count() as u64;
    let censored = hits.iter().filter(|h| h.1).count() as u64;
    TailEstimate::from_binomial(n_hit, n_paths, censored)
}

/// Two forward paths driven by the same Brownian increments on a common grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledPaths {
    pub t: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub lower_exploded: bool,
}

impl CoupledPaths {
    /// Grid points where `lower > upper`.
    pub fn violations(&self) -> usize {
        self.lower.iter().zip(&self.upper).filter(|(l, u)| l > u).count()
    }
}

/// Run `lower` and `upper` with shared noise until the lower path crosses
/// its explosion threshold or the budget runs out. The common step is the
/// policy step at the larger of the two magnitudes, which keeps the Euler map
/// `x -> x - x^2 dt` increasing on both paths.
pub fn simulate_coupled(
    lower: &DiffusionParams,
    upper: &DiffusionParams,
    policy: &StepPolicy,
    rng: &mut RngStream,
) -> Result<CoupledPaths> {
    lower.validate()?;
    upper.validate()?;
    policy.validate()?;
    let (StartValue::Finite(x_lo), StartValue::Finite(x_hi)) = (lower.x0, upper.x0) else {
        return Err(Error::param("coupled paths need finite starts"));
    };
    if lower.t0 != upper.t0 || lower.beta != upper.beta {
        return Err(Error::param("coupled paths must share start time and beta"));
    }
    let sigma = lower.noise_scale();
    let a_max = lower.a.abs().max(upper.a.abs());
    let t_limit = lower.t0 + policy.t_budget;
    let mut t = lower.t0;
    let (mut xl, mut xu) = (x_lo, x_hi);
    let mut out = CoupledPaths {
        t: vec![t],
        lower: vec![xl],
        upper: vec![xu],
        lower_exploded: false,
    };
    while t < t_limit {
        if xl <= policy.explosion_threshold(t, lower.a) {
            out.lower_exploded = true;
            break;
        }
        let dt = policy.step(t, xl.abs().max(xu.abs()), a_max).min(t_limit - t);
        let dw = if sigma > 0.0 {
            sigma * dt.sqrt() * rng.standard_normal()
        } else {
            0.0
        };
        xl += drift_x(t, xl, lower.a) * dt + dw;
        xu += drift_x(t, xu, upper.a) * dt + dw;
        t += dt;
        if !xl.is_finite() || !xu.is_finite() {
            return Err(Error::NumericFailure {
                t,
                detail: "coupled state left the reals".into(),
            });
        }
        out.t.push(t);
        out.lower.push(xl);
        out.upper.push(xu);
    }
    Ok(out)
}
