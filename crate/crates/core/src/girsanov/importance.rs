//! Importance sampling of the parabola crossing under the reversed drift.

use super::{PhiSpec, WeightAccumulator, WeightRecord};
use crate::diffusion::{integrate, DiffusionParams, Drift, StepPolicy, Termination};
use crate::error::{Error, Result};
use crate::estimate::TailEstimate;
use crate::parallel::try_map_paths;
use crate::rng::{RngStream, StreamDomain};

/// Fate of one reversed path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Branch {
    /// Reached the target; carries the weight.
    Hit(WeightRecord),
    /// Crossed the abort level first.
    Aborted,
    /// Still running when the horizon ran out.
    Censored,
    /// Certified to blow up upward.
    Escaped,
}

/// Run one reversed path from `y_start` at time zero under level `a`, until
/// it reaches `target` (downward), `abort` (upward), escapes, or exhausts
/// the policy budget.
#[allow(clippy::too_many_arguments)]
pub fn sample_branch(
    a: f64,
    beta: f64,
    phi: Option<&PhiSpec>,
    y_start: f64,
    target: f64,
    abort: f64,
    policy: &StepPolicy,
    rng: &mut RngStream,
) -> Result<Branch> {
    let params = DiffusionParams::new(a, beta)?.starting_at(0.0, y_start)?;
    let mut acc = WeightAccumulator::new(a, beta, phi, target, abort);
    let run = integrate(&params, policy, Drift::Reversed(phi), rng, &mut acc)?;
    if let Some(rec) = acc.record() {
        return Ok(Branch::Hit(rec));
    }
    Ok(match run.termination {
        Termination::Exploded { .. } => Branch::Escaped,
        Termination::Budget => Branch::Censored,
        Termination::Stopped if acc.aborted() => Branch::Aborted,
        Termination::Stopped => Branch::Censored,
    })
}

#[derive(Debug, Clone)]
pub struct IsRun {
    pub estimate: TailEstimate,
    /// One record per path that reached the target, in path order.
    pub records: Vec<WeightRecord>,
    pub n_escaped: u64,
}

/// `P_{sqrt(a) - l}(T_{-sqrt(a) + l} < infinity)` for the forward diffusion
/// started at time zero, as the mean of `1{T' <= xi} exp(G)` over reversed
/// paths. Paths still running at `xi` are dropped and counted as censored.
pub fn estimate_tail_is(
    params: &DiffusionParams,
    spec: &PhiSpec,
    l: f64,
    xi: f64,
    n_paths: u64,
    rng: &RngStream,
) -> Result<TailEstimate> {
    Ok(estimate_tail_is_detailed(params, spec, l, xi, n_paths, None, rng)?.estimate)
}

pub fn estimate_tail_is_detailed(
    params: &DiffusionParams,
    spec: &PhiSpec,
    l: f64,
    xi: f64,
    n_paths: u64,
    policy: Option<StepPolicy>,
    rng: &RngStream,
) -> Result<IsRun> {
    params.validate()?;
    if n_paths == 0 {
        return Err(Error::param("n_paths must be at least 1"));
    }
    if spec.a != params.a || spec.beta != params.beta {
        return Err(Error::param("correction drift was built for a different (a, beta)"));
    }
    let s = params.a.sqrt();
    if !(l > 0.0) || !(l < s) {
        return Err(Error::param(format!("l must lie in (0, sqrt(a)), got {l}")));
    }
    if !(xi > 0.0) || !xi.is_finite() {
        return Err(Error::param(format!("horizon xi must be positive, got {xi}")));
    }
    let policy = policy
        .unwrap_or_else(|| StepPolicy::for_problem(params))
        .with_budget(xi);
    let (start, target) = (s - l, -s + l);
    let branches = try_map_paths(n_paths, |i| {
        let mut r = rng.split(StreamDomain::InnerImportance, i);
        sample_branch(
            params.a,
            params.beta,
            Some(spec),
            start,
            target,
            f64::INFINITY,
            &policy,
            &mut r,
        )
    })?;
    let mut log_w = Vec::with_capacity(branches.len());
    let mut records = Vec::new();
    let mut censored = 0;
    let mut escaped = 0;
    for b in &branches {
        match b {
            Branch::Hit(rec) => {
                log_w.push(rec.log_weight_euler);
                records.push(*rec);
            }
            Branch::Censored => {
                censored += 1;
                log_w.push(f64::NEG_INFINITY);
            }
            Branch::Escaped | Branch::Aborted => {
                escaped += 1;
                log_w.push(f64::NEG_INFINITY);
            }
        }
    }
    if censored == n_paths {
        return Err(Error::EstimatorFailure(format!(
            "all {n_paths} reversed paths were still running at xi = {xi}"
        )));
    }
    Ok(IsRun {
        estimate: TailEstimate::from_log_weights(&log_w, censored)?,
        records,
        n_escaped: escaped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive_stream;

    #[test]
    fn rejects_bad_inputs() {
        let p = DiffusionParams::new(4.0, 2.0).unwrap();
        let phi = PhiSpec::phi2(4.0, 2.0, 0.5).unwrap();
        let r = derive_stream(0, 0);
        assert!(estimate_tail_is(&p, &phi, 0.5, 1.0, 0, &r).is_err());
        assert!(estimate_tail_is(&p, &phi, 0.5, 0.0, 10, &r).is_err());
        assert!(estimate_tail_is(&p, &phi, 3.0, 1.0, 10, &r).is_err());
        let other = PhiSpec::phi2(5.0, 2.0, 0.5).unwrap();
        assert!(estimate_tail_is(&p, &other, 0.5, 1.0, 10, &r).is_err());
    }

    #[test]
    fn all_censored_is_a_failure() {
        let p = DiffusionParams::new(4.0, 2.0).unwrap();
        let phi = PhiSpec::phi2(4.0, 2.0, 0.5).unwrap();
        let e = estimate_tail_is(&p, &phi, 0.5, 1e-4, 20, &derive_stream(0, 0));
        assert!(matches!(e, Err(Error::EstimatorFailure(_))));
    }

    #[test]
    fn weights_are_reproducible() {
        let p = DiffusionParams::new(4.0, 2.0).unwrap();
        let phi = PhiSpec::phi2(4.0, 2.0, 0.7).unwrap();
        let a = estimate_tail_is(&p, &phi, 0.7, 3.0, 50, &derive_stream(3, 0)).unwrap();
        let b = estimate_tail_is(&p, &phi, 0.7, 3.0, 50, &derive_stream(3, 0)).unwrap();
        assert_eq!(a, b);
        assert!(a.n_hit > 0);
        assert!(a.ess <= a.n_hit as f64 + 1e-9);
    }
}
