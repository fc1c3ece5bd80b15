use serde::{Deserialize, Serialize};

use super::integrate::entry_time;
use super::{integrate, DiffusionParams, Drift, Observer, StartValue, StepFlow, StepPolicy, Termination};
use crate::error::{Error, Result};
use crate::rng::RngStream;

/// What to record along a path.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PathQuery {
    /// First-passage levels.
    pub levels: Vec<f64>,
    /// `(level, horizon)`: last crossing of `level` at or before `horizon`.
    pub last_passage: Vec<(f64, f64)>,
    /// `(t_lo, t_hi)`: maximum over grid points in the window.
    pub sup_windows: Vec<(f64, f64)>,
    /// Stop the path once every level in `levels` has been reached.
    pub stop_when_all_hit: bool,
}

impl PathQuery {
    pub fn hitting(levels: &[f64]) -> Self {
        PathQuery {
            levels: levels.to_vec(),
            ..Default::default()
        }
    }

    pub fn stop_when_all_hit(mut self) -> Self {
        self.stop_when_all_hit = true;
        self
    }

    fn validate(&self) -> Result<()> {
        let finite = self.levels.iter().all(|l| l.is_finite())
            && self.last_passage.iter().all(|(l, h)| l.is_finite() && !h.is_nan())
            && self.sup_windows.iter().all(|(lo, hi)| lo <= hi);
        if finite {
            Ok(())
        } else {
            Err(Error::param("query levels must be finite and windows ordered"))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathOutcome {
    pub exploded: bool,
    pub explosion_time: Option<f64>,
    pub hit_times: Vec<(f64, Option<f64>)>,
    pub last_passage: Vec<((f64, f64), Option<f64>)>,
    /// `None` when no grid point fell inside the window.
    pub sup_window: Vec<((f64, f64), Option<f64>)>,
    /// The budget ran out before explosion.
    pub censored: bool,
    /// The query asked to stop early.
    pub stopped: bool,
    pub t_end: f64,
    pub x_end: f64,
    pub steps: u64,
}

impl PathOutcome {
    pub fn hit_time(&self, level: f64) -> Option<f64> {
        self.hit_times.iter().find(|(l, _)| *l == level).and_then(|(_, t)| *t)
    }

    pub fn last_passage_time(&self, level: f64, horizon: f64) -> Option<f64> {
        self.last_passage
            .iter()
            .find(|((l, h), _)| *l == level && *h == horizon)
            .and_then(|(_, t)| *t)
    }

    pub fn sup_over(&self, window: (f64, f64)) -> Option<f64> {
        self.sup_window.iter().find(|(w, _)| *w == window).and_then(|(_, m)| *m)
    }
}

/// Crossing time of `level` on the segment `(t0, x0) -> (t1, x1)`, if any.
#[inline]
pub(crate) fn crossing(level: f64, t0: f64, x0: f64, t1: f64, x1: f64) -> Option<f64> {
    let d0 = x0 - level;
    let d1 = x1 - level;
    if d0 == 0.0 {
        return Some(t0);
    }
    if d0 * d1 > 0.0 {
        return None;
    }
    Some(t0 + (t1 - t0) * d0 / (d0 - d1))
}

struct Recorder<'q> {
    query: &'q PathQuery,
    hits: Vec<Option<f64>>,
    last: Vec<Option<f64>>,
    sups: Vec<Option<f64>>,
    remaining: usize,
}

impl Recorder<'_> {
    fn visit(&mut self, t: f64, x: f64) {
        for (s, &(lo, hi)) in self.sups.iter_mut().zip(&self.query.sup_windows) {
            if t >= lo && t <= hi {
                *s = Some(s.map_or(x, |m: f64| m.max(x)));
            }
        }
    }

    fn flow(&self) -> StepFlow {
        if self.query.stop_when_all_hit && !self.query.levels.is_empty() && self.remaining == 0 {
            StepFlow::Stop
        } else {
            StepFlow::Continue
        }
    }
}

impl Observer for Recorder<'_> {
    fn start(&mut self, t: f64, x: f64) -> StepFlow {
        for (h, &l) in self.hits.iter_mut().zip(&self.query.levels) {
            if h.is_none() && x == l {
                *h = Some(t);
                self.remaining -= 1;
            }
        }
        for (lp, &(l, horizon)) in self.last.iter_mut().zip(&self.query.last_passage) {
            if x == l && t <= horizon {
                *lp = Some(t);
            }
        }
        self.visit(t, x);
        self.flow()
    }

    fn step(&mut self, t0: f64, x0: f64, t1: f64, x1: f64) -> StepFlow {
        for (h, &l) in self.hits.iter_mut().zip(&self.query.levels) {
            if h.is_none() {
                if let Some(tc) = crossing(l, t0, x0, t1, x1) {
                    *h = Some(tc);
                    self.remaining -= 1;
                }
            }
        }
        for (lp, &(l, horizon)) in self.last.iter_mut().zip(&self.query.last_passage) {
            if t0 <= horizon {
                // the segment start was already credited on the previous step
                if let Some(tc) = crossing(l, t0, x0, t1, x1) {
                    if tc <= horizon && (tc > t0 || lp.is_none()) {
                        *lp = Some(tc);
                    }
                }
            }
        }
        self.visit(t1, x1);
        self.flow()
    }
}

/// Simulate one trajectory and fill in the requested statistics.
///
/// For a start at `+infinity`, levels above the actual starting point are
/// credited with their deterministic entry times.
pub fn simulate_path(
    params: &DiffusionParams,
    policy: &StepPolicy,
    drift: Drift<'_>,
    query: &PathQuery,
    rng: &mut RngStream,
) -> Result<PathOutcome> {
    query.validate()?;
    let mut rec = Recorder {
        query,
        hits: vec![None; query.levels.len()],
        last: vec![None; query.last_passage.len()],
        sups: vec![None; query.sup_windows.len()],
        remaining: query.levels.len(),
    };
    if params.x0 == StartValue::PlusInfinity {
        let (_, x_start) = super::resolve_start(params, policy);
        let a_eff = params.a + params.t0;
        for (h, &l) in rec.hits.iter_mut().zip(&query.levels) {
            if l >= x_start {
                *h = Some(params.t0 + entry_time(a_eff, l));
                rec.remaining -= 1;
            }
        }
    }
    let run = integrate(params, policy, drift, rng, &mut rec)?;
    let (exploded, explosion_time) = match run.termination {
        Termination::Exploded { time } => (true, Some(time)),
        _ => (false, None),
    };
    Ok(PathOutcome {
        exploded,
        explosion_time,
        hit_times: query.levels.iter().copied().zip(rec.hits).collect(),
        last_passage: query.last_passage.iter().copied().zip(rec.last).collect(),
        sup_window: query.sup_windows.iter().copied().zip(rec.sups).collect(),
        censored: run.termination == Termination::Budget,
        stopped: run.termination == Termination::Stopped,
        t_end: run.t_end,
        x_end: run.x_end,
        steps: run.steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive_stream;

    #[test]
    fn crossing_interpolates() {
        assert_eq!(crossing(0.0, 1.0, 1.0, 2.0, -1.0), Some(1.5));
        assert_eq!(crossing(0.0, 1.0, 1.0, 2.0, 0.5), None);
        assert_eq!(crossing(0.5, 1.0, 0.5, 2.0, 3.0), Some(1.0));
    }

    #[test]
    fn hit_times_are_ordered() {
        let p = DiffusionParams::new(1.0, 2.0).unwrap();
        let pol = StepPolicy::for_problem(&p);
        let levels = [3.0, 1.5, 0.5, 0.0, -1.0];
        let q = PathQuery::hitting(&levels);
        for i in 0..50 {
            let o = simulate_path(&p, &pol, Drift::Forward, &q, &mut derive_stream(4, i)).unwrap();
            let ts: Vec<Option<f64>> = levels.iter().map(|&l| o.hit_time(l)).collect();
            for w in ts.windows(2) {
                if let (Some(a), Some(b)) = (w[0], w[1]) {
                    assert!(a <= b);
                }
            }
            assert!(o.hit_time(3.0).is_some());
            if o.exploded {
                assert!(o.hit_time(-1.0).is_some());
                assert!(o.explosion_time.unwrap() <= p.t0 + pol.t_budget);
            }
            assert!(!(o.exploded && o.censored));
        }
    }

    #[test]
    fn level_above_cap_gets_entry_time() {
        let p = DiffusionParams::new(0.0, 2.0).unwrap();
        let pol = StepPolicy::for_problem(&p);
        let q = PathQuery::hitting(&[20.0]).stop_when_all_hit();
        let o = simulate_path(&p, &pol, Drift::Forward, &q, &mut derive_stream(0, 0)).unwrap();
        assert!((o.hit_time(20.0).unwrap() - 0.05).abs() < 1e-15);
        assert!(o.stopped);
        assert_eq!(o.steps, 0);
    }

    #[test]
    fn last_passage_and_sup() {
        let p = DiffusionParams::new(4.0, 2.0).unwrap().starting_at(0.0, 2.0).unwrap();
        let pol = StepPolicy::for_problem(&p).with_budget(1.0);
        let q = PathQuery {
            levels: vec![],
            last_passage: vec![(2.0, 0.5)],
            sup_windows: vec![(0.0, 0.5)],
            stop_when_all_hit: false,
        };
        let o = simulate_path(&p, &pol, Drift::Forward, &q, &mut derive_stream(1, 1)).unwrap();
        let lp = o.last_passage_time(2.0, 0.5).unwrap();
        assert!((0.0..=0.5).contains(&lp));
        assert!(o.sup_over((0.0, 0.5)).unwrap() >= 2.0);
    }
}
