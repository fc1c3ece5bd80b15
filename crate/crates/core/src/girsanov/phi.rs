//! Correction drifts added to the reversed diffusion.
//!
//! Both variants are rational on a core interval, written in partial
//! fractions `A/(r - x) + B/(r + x)` with `r = sqrt(a)`, and are blended to
//! zero on a strip at each end by a quintic Hermite polynomial that matches
//! value, slope and curvature at the core edge and vanishes to second order
//! at `+-r`. Everything (value, derivative, antiderivative) is therefore in
//! closed form, including the integral across the strips.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "lowercase")]
pub enum PhiVariant {
    /// `c1 sqrt(a) / (a - x^2)` on `(-r + delta, r - delta)`.
    Phi1 { c1: f64 },
    /// `((8/beta - 2) x - 2 sqrt(a)) / (a - x^2)` on `(-r + delta/2, r - delta)`.
    Phi2,
}

/// One blending strip between a core edge and the support boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Strip {
    edge: f64,
    /// Signed width: `boundary - edge`.
    h: f64,
    f0: f64,
    f1h: f64,
    f2h2: f64,
}

impl Strip {
    fn new(edge: f64, boundary: f64, f0: f64, f1: f64, f2: f64) -> Self {
        let h = boundary - edge;
        Strip {
            edge,
            h,
            f0,
            f1h: f1 * h,
            f2h2: f2 * h * h,
        }
    }

    #[inline]
    fn s(&self, x: f64) -> f64 {
        (x - self.edge) / self.h
    }

    fn value(&self, x: f64) -> f64 {
        let s = self.s(x);
        let (h0, h1, h2) = hermite(s);
        self.f0 * h0 + self.f1h * h1 + self.f2h2 * h2
    }

    fn slope(&self, x: f64) -> f64 {
        let s = self.s(x);
        let (d0, d1, d2) = hermite_d(s);
        (self.f0 * d0 + self.f1h * d1 + self.f2h2 * d2) / self.h
    }

    /// `int_edge^x value`, exact.
    fn integral_from_edge(&self, x: f64) -> f64 {
        let s = self.s(x);
        let (i0, i1, i2) = hermite_int(s);
        self.h * (self.f0 * i0 + self.f1h * i1 + self.f2h2 * i2)
    }
}

// Quintic basis on [0, 1]: at s = 0 the three functions carry (value, slope,
// curvature) = e_1, e_2, e_3; at s = 1 all vanish to second order.
#[inline]
fn hermite(s: f64) -> (f64, f64, f64) {
    let s2 = s * s;
    let s3 = s2 * s;
    let s4 = s3 * s;
    let s5 = s4 * s;
    (
        1.0 - 10.0 * s3 + 15.0 * s4 - 6.0 * s5,
        s - 6.0 * s3 + 8.0 * s4 - 3.0 * s5,
        0.5 * s2 - 1.5 * s3 + 1.5 * s4 - 0.5 * s5,
    )
}

#[inline]
fn hermite_d(s: f64) -> (f64, f64, f64) {
    let s2 = s * s;
    let s3 = s2 * s;
    let s4 = s3 * s;
    (
        -30.0 * s2 + 60.0 * s3 - 30.0 * s4,
        1.0 - 18.0 * s2 + 32.0 * s3 - 15.0 * s4,
        s - 4.5 * s2 + 6.0 * s3 - 2.5 * s4,
    )
}

#[inline]
fn hermite_int(s: f64) -> (f64, f64, f64) {
    let s2 = s * s;
    let s3 = s2 * s;
    let s4 = s3 * s;
    let s5 = s4 * s;
    let s6 = s5 * s;
    (
        s - 2.5 * s4 + 3.0 * s5 - s6,
        0.5 * s2 - 1.5 * s4 + 1.6 * s5 - 0.5 * s6,
        s3 / 6.0 - 0.375 * s4 + 0.3 * s5 - s6 / 12.0,
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhiSpec {
    pub variant: PhiVariant,
    pub a: f64,
    pub beta: f64,
    pub delta: f64,
    r: f64,
    pf_a: f64,
    pf_b: f64,
    lower: Strip,
    upper: Strip,
    /// Antiderivative at the lower core edge (normalised to zero at `-r`).
    at_lower_edge: f64,
    /// Antiderivative at the upper core edge.
    at_upper_edge: f64,
    total: f64,
}

impl PhiSpec {
    pub fn phi1(a: f64, beta: f64, c1: f64, delta: f64) -> Result<Self> {
        if !(c1 > 0.0) || !c1.is_finite() {
            return Err(Error::param(format!("c1 must be positive, got {c1}")));
        }
        let floor = c1_floor(beta)?;
        if c1 <= floor {
            return Err(Error::param(format!(
                "c1 = {c1} is not admissible for beta = {beta}; it must exceed {floor}"
            )));
        }
        Self::build(PhiVariant::Phi1 { c1 }, a, beta, delta)
    }

    pub fn phi2(a: f64, beta: f64, delta: f64) -> Result<Self> {
        Self::build(PhiVariant::Phi2, a, beta, delta)
    }

    fn build(variant: PhiVariant, a: f64, beta: f64, delta: f64) -> Result<Self> {
        if !(a > 0.0) || !a.is_finite() {
            return Err(Error::param(format!("correction drift needs a > 0, got {a}")));
        }
        if !(beta > 0.0) {
            return Err(Error::param(format!("beta must be positive, got {beta}")));
        }
        let r = a.sqrt();
        let (pf_a, pf_b, lower_width) = match variant {
            PhiVariant::Phi1 { c1 } => (0.5 * c1, 0.5 * c1, delta),
            PhiVariant::Phi2 => (4.0 / beta - 2.0, -4.0 / beta, 0.5 * delta),
        };
        if !(delta > 0.0) || delta + lower_width >= 2.0 * r {
            return Err(Error::param(format!(
                "delta = {delta} leaves no core interval inside (-{r}, {r})"
            )));
        }
        let lo_edge = -r + lower_width;
        let hi_edge = r - delta;
        let mut spec = PhiSpec {
            variant,
            a,
            beta,
            delta,
            r,
            pf_a,
            pf_b,
            lower: Strip::new(lo_edge, lo_edge, 0.0, 0.0, 0.0),
            upper: Strip::new(hi_edge, hi_edge, 0.0, 0.0, 0.0),
            at_lower_edge: 0.0,
            at_upper_edge: 0.0,
            total: 0.0,
        };
        spec.lower = Strip::new(
            lo_edge,
            -r,
            spec.core_value(lo_edge),
            spec.core_slope(lo_edge),
            spec.core_curvature(lo_edge),
        );
        spec.upper = Strip::new(
            hi_edge,
            r,
            spec.core_value(hi_edge),
            spec.core_slope(hi_edge),
            spec.core_curvature(hi_edge),
        );
        spec.at_lower_edge = -spec.lower.integral_from_edge(-r);
        spec.at_upper_edge = spec.at_lower_edge + spec.core_primitive(hi_edge) - spec.core_primitive(lo_edge);
        spec.total = spec.at_upper_edge + spec.upper.integral_from_edge(r);
        Ok(spec)
    }

    /// The core interval on which the rational formula holds exactly.
    pub fn core(&self) -> (f64, f64) {
        (self.lower.edge, self.upper.edge)
    }

    /// Support `(-sqrt(a), sqrt(a))`.
    pub fn support(&self) -> (f64, f64) {
        (-self.r, self.r)
    }

    /// Partial-fraction coefficients `(A, B)` of the core formula.
    pub fn partial_fractions(&self) -> (f64, f64) {
        (self.pf_a, self.pf_b)
    }

    #[inline]
    fn core_value(&self, x: f64) -> f64 {
        self.pf_a / (self.r - x) + self.pf_b / (self.r + x)
    }

    #[inline]
    fn core_slope(&self, x: f64) -> f64 {
        let u = self.r - x;
        let v = self.r + x;
        self.pf_a / (u * u) - self.pf_b / (v * v)
    }

    #[inline]
    fn core_curvature(&self, x: f64) -> f64 {
        let u = self.r - x;
        let v = self.r + x;
        2.0 * self.pf_a / (u * u * u) + 2.0 * self.pf_b / (v * v * v)
    }

    #[inline]
    fn core_primitive(&self, x: f64) -> f64 {
        -self.pf_a * (self.r - x).ln() + self.pf_b * (self.r + x).ln()
    }

    /// The rational formula itself, without blending; meaningful on the core.
    pub fn core_formula(&self, x: f64) -> f64 {
        match self.variant {
            PhiVariant::Phi1 { c1 } => c1 * self.r / (self.a - x * x),
            PhiVariant::Phi2 => ((8.0 / self.beta - 2.0) * x - 2.0 * self.r) / (self.a - x * x),
        }
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        if x <= -self.r || x >= self.r {
            0.0
        } else if x < self.lower.edge {
            self.lower.value(x)
        } else if x > self.upper.edge {
            self.upper.value(x)
        } else {
            self.core_value(x)
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        if x <= -self.r || x >= self.r {
            0.0
        } else if x < self.lower.edge {
            self.lower.slope(x)
        } else if x > self.upper.edge {
            self.upper.slope(x)
        } else {
            self.core_slope(x)
        }
    }

    /// Antiderivative normalised to vanish at `-sqrt(a)`; constant outside
    /// the support.
    pub fn antiderivative(&self, x: f64) -> f64 {
        if x <= -self.r {
            0.0
        } else if x >= self.r {
            self.total
        } else if x < self.lower.edge {
            self.at_lower_edge + self.lower.integral_from_edge(x)
        } else if x > self.upper.edge {
            self.at_upper_edge + self.upper.integral_from_edge(x)
        } else {
            self.at_lower_edge + self.core_primitive(x) - self.core_primitive(self.lower.edge)
        }
    }

    /// The integrand of the time integral in the log-weight,
    /// `(2/beta) phi' + phi^2 / 2 + phi (y^2 - a - t)`.
    #[inline]
    pub fn weight_integrand(&self, t: f64, y: f64) -> f64 {
        let p = self.eval(y);
        if p == 0.0 && (y <= -self.r || y >= self.r) {
            return 0.0;
        }
        (2.0 / self.beta) * self.derivative(y) + 0.5 * p * p + p * (y * y - self.a - t)
    }
}

/// Lower bound that `c1` must strictly exceed: `(|8/beta - 2| - 2) v 0`.
pub fn c1_floor(beta: f64) -> Result<f64> {
    if !(beta > 0.0) {
        return Err(Error::param(format!("beta must be positive, got {beta}")));
    }
    Ok(((8.0 / beta - 2.0).abs() - 2.0).max(0.0))
}

pub fn default_c1(beta: f64) -> Result<f64> {
    Ok(c1_floor(beta)? + 1.0)
}
