use std::io::Write;

use super::{integrate, DiffusionParams, Drift, Observer, Run, StepFlow, StepPolicy};
use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Keeps every `stride`-th grid point, plus the first and the last.
#[derive(Debug, Clone)]
pub struct TraceRecorder {
    stride: usize,
    seen: usize,
    pub rows: Vec<(f64, f64)>,
    last: Option<(f64, f64)>,
}

impl TraceRecorder {
    pub fn new(stride: usize) -> Result<Self> {
        if stride == 0 {
            return Err(Error::param("trace stride must be at least 1"));
        }
        Ok(TraceRecorder {
            stride,
            seen: 0,
            rows: Vec::new(),
            last: None,
        })
    }

    pub fn finish(mut self) -> Vec<(f64, f64)> {
        if let Some(p) = self.last {
            if self.rows.last() != Some(&p) {
                self.rows.push(p);
            }
        }
        self.rows
    }
}

impl Observer for TraceRecorder {
    fn start(&mut self, t: f64, x: f64) -> StepFlow {
        self.rows.push((t, x));
        self.seen = 0;
        StepFlow::Continue
    }

    fn step(&mut self, _: f64, _: f64, t1: f64, x1: f64) -> StepFlow {
        self.seen += 1;
        if self.seen.is_multiple_of(self.stride) {
            self.rows.push((t1, x1));
        }
        self.last = Some((t1, x1));
        StepFlow::Continue
    }
}

pub fn simulate_trace(
    params: &DiffusionParams,
    policy: &StepPolicy,
    drift: Drift<'_>,
    stride: usize,
    rng: &mut RngStream,
) -> Result<(Run, Vec<(f64, f64)>)> {
    let mut rec = TraceRecorder::new(stride)?;
    let run = integrate(params, policy, drift, rng, &mut rec)?;
    Ok((run, rec.finish()))
}

pub fn write_trace_csv<W: Write>(mut w: W, rows: &[(f64, f64)]) -> Result<()> {
    w.write_all(b"t,x\n")?;
    for (t, x) in rows {
        writeln!(w, "{t},{x}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive_stream;

    #[test]
    fn thinning() {
        let p = DiffusionParams::new(1.0, 2.0).unwrap().starting_at(0.0, 1.0).unwrap();
        let pol = StepPolicy::for_problem(&p).with_budget(0.1);
        let (run, rows) = simulate_trace(&p, &pol, Drift::Forward, 10, &mut derive_stream(0, 3)).unwrap();
        assert_eq!(rows[0], (0.0, 1.0));
        assert_eq!(*rows.last().unwrap(), (run.t_end, run.x_end));
        let n = run.steps as usize;
        assert!(rows.len() == n / 10 + 1 || rows.len() == n / 10 + 2);
        let mut buf = Vec::new();
        write_trace_csv(&mut buf, &rows).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("t,x\n0,1\n"));
        assert_eq!(s.lines().count(), rows.len() + 1);
    }
}
