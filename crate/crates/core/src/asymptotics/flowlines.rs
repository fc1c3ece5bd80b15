//! Flowlines of `z' = t + a - (z + sigma B_t)^2` and the separatrix between
//! exploding and non-exploding starts from `+infinity`.
//!
//! With `sigma = 0` this is the Riccati equation itself. With noise, `z` is
//! `X - sigma B` for the explosion diffusion `X` driven by a fixed Brownian
//! path, which turns each noisy run into an ODE solved by RK4 against a
//! piecewise-linear interpolation of `B`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::diffusion::entry_time;
use crate::error::{Error, Result};
use crate::rng::RngStream;

const MARGIN: f64 = 5.0;

/// Default RK4 step (also the spacing of the Brownian grid).
pub const DEFAULT_FLOW_DT: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum FlowMode {
    Deterministic,
    Noisy { beta: f64 },
}

/// `sigma B` sampled on a uniform grid starting at `t0` with `B(t0) = 0`.
#[derive(Debug, Clone)]
struct Noise {
    t0: f64,
    dt: f64,
    values: Vec<f64>,
}

impl Noise {
    fn sample(rng: &mut RngStream, sigma: f64, t0: f64, t1: f64, dt: f64) -> Self {
        let n = ((t1 - t0) / dt).ceil() as usize + 1;
        let sd = sigma * dt.sqrt();
        let mut values = Vec::with_capacity(n + 1);
        let mut acc = 0.0;
        values.push(acc);
        for _ in 0..n {
            acc += sd * rng.standard_normal();
            values.push(acc);
        }
        Noise { t0, dt, values }
    }

    #[inline]
    fn at(&self, t: f64) -> f64 {
        let u = ((t - self.t0) / self.dt).max(0.0);
        let i = (u as usize).min(self.values.len() - 2);
        let f = (u - i as f64).min(1.0);
        self.values[i] + f * (self.values[i + 1] - self.values[i])
    }
}

/// One realisation of the flow field.
#[derive(Debug, Clone)]
pub struct FlowField {
    pub a: f64,
    pub t_max: f64,
    pub dt: f64,
    noise: Option<Noise>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowRun {
    pub exploded: bool,
    pub t_end: f64,
    /// `(t, z)` every `stride` steps, when requested.
    pub points: Vec<(f64, f64)>,
}

/// Default horizon `10 + 2 sqrt(a_+)`.
pub fn default_t_max(a: f64) -> f64 {
    10.0 + 2.0 * a.max(0.0).sqrt()
}

impl FlowField {
    /// Noise-free field.
    pub fn deterministic(a: f64, t_max: f64, dt: f64) -> Result<Self> {
        check(a, t_max, dt)?;
        Ok(FlowField {
            a,
            t_max,
            dt,
            noise: None,
        })
    }

    /// Field driven by one Brownian path on `[t_lo, t_max]`.
    pub fn noisy(a: f64, beta: f64, t_lo: f64, t_max: f64, dt: f64, rng: &mut RngStream) -> Result<Self> {
        check(a, t_max, dt)?;
        if !(beta > 0.0) {
            return Err(Error::param(format!("beta must be positive, got {beta}")));
        }
        if !(t_lo < t_max) {
            return Err(Error::param("noise window is empty"));
        }
        let sigma = if beta.is_infinite() { 0.0 } else { 2.0 / beta.sqrt() };
        Ok(FlowField {
            a,
            t_max,
            dt,
            noise: Some(Noise::sample(rng, sigma, t_lo, t_max, dt)),
        })
    }

    #[inline]
    fn shift(&self, t: f64) -> f64 {
        self.noise.as_ref().map_or(0.0, |n| n.at(t))
    }

    #[inline]
    fn rhs(&self, t: f64, z: f64) -> f64 {
        let x = z + self.shift(t);
        t + self.a - x * x
    }

    /// Integrate from `(t0, z0)`; `z0 = None` means `+infinity`.
    pub fn run(&self, t0: f64, z0: Option<f64>, stride: Option<usize>) -> FlowRun {
        let (mut t, mut z) = match z0 {
            Some(z) => (t0, z),
            None => {
                let a_eff = self.a + t0;
                let x = 10f64.max(3.0 * (a_eff.abs() + 1.0).sqrt());
                let te = t0 + entry_time(a_eff, x);
                (te, x - self.shift(te))
            }
        };
        let mut points = Vec::new();
        if stride.is_some() {
            points.push((t, z));
        }
        let h = self.dt;
        let mut k = 0usize;
        while t < self.t_max {
            let x = z + self.shift(t);
            let thr = -MARGIN * (self.a.max(0.0) + t.max(0.0) + 1.0).sqrt();
            if x <= thr {
                return FlowRun {
                    exploded: true,
                    t_end: t,
                    points,
                };
            }
            let h = h.min(self.t_max - t);
            let k1 = self.rhs(t, z);
            let k2 = self.rhs(t + 0.5 * h, z + 0.5 * h * k1);
            let k3 = self.rhs(t + 0.5 * h, z + 0.5 * h * k2);
            let k4 = self.rhs(t + h, z + h * k3);
            z += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            t += h;
            k += 1;
            if let Some(s) = stride {
                if k.is_multiple_of(s) {
                    points.push((t, z));
                }
            }
        }
        FlowRun {
            exploded: false,
            t_end: t,
            points,
        }
    }

    pub fn explodes_from_infinity(&self, t0: f64) -> bool {
        self.run(t0, None, None).exploded
    }
}

fn check(a: f64, t_max: f64, dt: f64) -> Result<()> {
    if !a.is_finite() || !t_max.is_finite() {
        return Err(Error::param("flow parameters must be finite"));
    }
    if !(dt > 0.0) {
        return Err(Error::param(format!("flow step must be positive, got {dt}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeparatrixBracket {
    /// Latest start from `+infinity` known to explode.
    pub lo: f64,
    /// Earliest start known not to explode.
    pub hi: f64,
    pub iterations: u32,
}

impl SeparatrixBracket {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

/// Bisect on the start time from `+infinity` between an exploding `lo` and
/// a non-exploding `hi`.
pub fn separatrix(field: &FlowField, lo: f64, hi: f64, tol: f64) -> Result<SeparatrixBracket> {
    if !(lo < hi) || !(tol > 0.0) {
        return Err(Error::param("separatrix needs lo < hi and a positive tolerance"));
    }
    if !field.explodes_from_infinity(lo) || field.explodes_from_infinity(hi) {
        return Err(Error::EstimatorFailure(format!(
            "start times [{lo}, {hi}] do not straddle the separatrix"
        )));
    }
    let (mut lo, mut hi) = (lo, hi);
    let mut iterations = 0;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if field.explodes_from_infinity(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    Ok(SeparatrixBracket { lo, hi, iterations })
}

/// Default bisection bracket for level `a`: the separatrix start sits near
/// `TW_beta - a`, far inside `[-10 - a, 6 - a]`.
pub fn default_bracket(a: f64) -> (f64, f64) {
    (-10.0 - a, (6.0 - a).min(default_t_max(a) - 2.0))
}

/// One separatrix start time: deterministic, or for one fresh Brownian path.
pub fn separatrix_start(a: f64, mode: FlowMode, tol: f64, rng: &mut RngStream) -> Result<SeparatrixBracket> {
    let (lo, hi) = default_bracket(a);
    let t_max = default_t_max(a);
    let field = match mode {
        FlowMode::Deterministic => FlowField::deterministic(a, t_max, DEFAULT_FLOW_DT)?,
        FlowMode::Noisy { beta } => FlowField::noisy(a, beta, lo, t_max, DEFAULT_FLOW_DT, rng)?,
    };
    separatrix(&field, lo, hi, tol)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowGrid {
    pub t_range: (f64, f64),
    pub z_range: (f64, f64),
    pub n_t: usize,
    pub n_z: usize,
    /// Keep every `stride`-th RK4 point in the table.
    pub stride: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Flow {
    pub id: usize,
    pub t0: f64,
    pub z0: f64,
    pub run: FlowRun,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowTable {
    pub a: f64,
    pub mode: FlowMode,
    pub flows: Vec<Flow>,
    pub separatrix: Option<SeparatrixBracket>,
}

/// Flowlines from a lattice of starts over `t_range x z_range`, plus the
/// separatrix start from `+infinity` when the lattice's time range
/// straddles it.
pub fn flowline_grid(a: f64, grid: &FlowGrid, mode: FlowMode, rng: &mut RngStream) -> Result<FlowTable> {
    let (t_lo, t_hi) = grid.t_range;
    let (z_lo, z_hi) = grid.z_range;
    if !(t_lo < t_hi) || !(z_lo < z_hi) || grid.n_t == 0 || grid.n_z == 0 || grid.stride == 0 {
        return Err(Error::param("flow grid ranges must be non-degenerate"));
    }
    let t_max = default_t_max(a).max(t_hi + 1.0);
    let field = match mode {
        FlowMode::Deterministic => FlowField::deterministic(a, t_max, DEFAULT_FLOW_DT)?,
        FlowMode::Noisy { beta } => FlowField::noisy(a, beta, t_lo, t_max, DEFAULT_FLOW_DT, rng)?,
    };
    let lin = |lo: f64, hi: f64, n: usize, i: usize| {
        if n == 1 {
            lo
        } else {
            lo + (hi - lo) * i as f64 / (n - 1) as f64
        }
    };
    let mut flows = Vec::with_capacity(grid.n_t * grid.n_z);
    for i in 0..grid.n_t {
        for j in 0..grid.n_z {
            let t0 = lin(t_lo, t_hi, grid.n_t, i);
            let z0 = lin(z_lo, z_hi, grid.n_z, j);
            let run = field.run(t0, Some(z0), Some(grid.stride));
            flows.push(Flow {
                id: flows.len(),
                t0,
                z0,
                run,
            });
        }
    }
    let separatrix = separatrix(&field, t_lo, t_hi, 1e-6).ok();
    Ok(FlowTable {
        a,
        mode,
        flows,
        separatrix,
    })
}

pub fn write_flow_csv<W: Write>(mut w: W, table: &FlowTable) -> Result<()> {
    w.write_all(b"flow_id,t,z,exploded_flag\n")?;
    for f in &table.flows {
        let flag = u8::from(f.run.exploded);
        for (t, z) in &f.run.points {
            writeln!(w, "{},{t},{z},{flag}", f.id)?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeparatrixSidecar {
    pub a: f64,
    #[serde(flatten)]
    pub mode: FlowMode,
    pub bracket: Option<SeparatrixBracket>,
    pub n_flows: usize,
}

pub fn write_separatrix_json<W: Write>(w: W, table: &FlowTable) -> Result<()> {
    let side = SeparatrixSidecar {
        a: table.a,
        mode: table.mode,
        bracket: table.separatrix,
        n_flows: table.flows.len(),
    };
    serde_json::to_writer_pretty(w, &side)?;
    Ok(())
}
