//! Seeded, stream-splittable randomness and the elementary samplers.
//!
//! Every stochastic routine in the crate draws from an [`RngStream`] keyed by
//! `(master_seed, stream_index)`. The generator is ChaCha8 with the stream
//! index mapped onto the cipher's 64-bit stream id, so deriving stream `i`
//! costs the same as deriving stream `0` and streams never overlap.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Disjoint stream-index ranges for the different consumers of one master seed.
///
/// A path index is combined with its domain as `domain << 40 | index`, which
/// leaves room for 2^40 paths per domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum StreamDomain {
    NaivePaths = 1,
    InnerImportance = 2,
    ComposedMain = 3,
    ComposedBranch = 4,
    StretchFactors = 5,
    Ensemble = 6,
    Flowlines = 7,
    Diagnostics = 8,
}

impl StreamDomain {
    pub fn index(self, i: u64) -> u64 {
        debug_assert!(i < (1 << 40));
        ((self as u64) << 40) | i
    }
}

/// One independent random stream.
#[derive(Debug, Clone)]
pub struct RngStream {
    master_seed: u64,
    stream_index: u64,
    inner: ChaCha8Rng,
}

/// Derive the stream `stream_index` of `master_seed`.
pub fn derive_stream(master_seed: u64, stream_index: u64) -> RngStream {
    let mut inner = ChaCha8Rng::seed_from_u64(master_seed);
    inner.set_stream(stream_index);
    RngStream {
        master_seed,
        stream_index,
        inner,
    }
}

impl RngStream {
    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn stream_index(&self) -> u64 {
        self.stream_index
    }

    /// Child stream `i` of `domain`. Children of streams with different keys
    /// come from different seeds, so two estimators handed distinct parent
    /// streams never share paths, while the same parent always yields the
    /// same children (common random numbers).
    pub fn split(&self, domain: StreamDomain, i: u64) -> RngStream {
        let seed = splitmix64(self.master_seed ^ splitmix64(self.stream_index));
        derive_stream(seed, domain.index(i))
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform on [0, 1).
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    /// Uniform on (0, 1), never exactly zero.
    #[inline]
    pub fn uniform_open(&mut self) -> f64 {
        loop {
            let u = self.uniform();
            if u > 0.0 {
                return u;
            }
        }
    }

    #[inline]
    pub fn standard_normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    /// Gamma(shape, 1) by Marsaglia-Tsang squeeze/rejection; shapes below one
    /// are boosted through `Gamma(k) = Gamma(k + 1) * U^(1/k)`.
    pub fn gamma(&mut self, shape: f64) -> Result<f64> {
        if !(shape > 0.0) || !shape.is_finite() {
            return Err(Error::param(format!("gamma shape must be positive, got {shape}")));
        }
        if shape < 1.0 {
            let boosted = self.gamma_ge_one(shape + 1.0);
            let u = self.uniform_open();
            return Ok(boosted * u.powf(1.0 / shape));
        }
        Ok(self.gamma_ge_one(shape))
    }

    fn gamma_ge_one(&mut self, shape: f64) -> f64 {
        let d = shape - 1.0 / 3.0;
        let c = 1.0 / (9.0 * d).sqrt();
        loop {
            let x = self.standard_normal();
            let v = 1.0 + c * x;
            if v <= 0.0 {
                continue;
            }
            let v = v * v * v;
            let u = self.uniform_open();
            let x2 = x * x;
            if u < 1.0 - 0.0331 * x2 * x2 {
                return d * v;
            }
            if u.ln() < 0.5 * x2 + d * (1.0 - v + v.ln()) {
                return d * v;
            }
        }
    }
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Draw from N(mean, variance).
pub fn sample_gaussian(rng: &mut RngStream, mean: f64, variance: f64) -> Result<f64> {
    if !(variance > 0.0) || !variance.is_finite() {
        return Err(Error::param(format!("variance must be positive, got {variance}")));
    }
    Ok(mean + variance.sqrt() * rng.standard_normal())
}

/// Draw from the chi distribution with `shape` degrees of freedom (any positive
/// real), as `sqrt(2 * Gamma(shape / 2))`.
pub fn sample_chi(rng: &mut RngStream, shape: f64) -> Result<f64> {
    if !(shape > 0.0) || !shape.is_finite() {
        return Err(Error::param(format!("chi shape must be positive, got {shape}")));
    }
    Ok((2.0 * rng.gamma(0.5 * shape)?).sqrt())
}

/// Brownian increments on a uniform grid.
#[derive(Debug, Clone)]
pub struct BrownianGrid {
    pub dt: f64,
    pub increments: Vec<f64>,
}

impl BrownianGrid {
    pub fn sample(rng: &mut RngStream, dt: f64, steps: usize) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::param(format!("grid step must be positive, got {dt}")));
        }
        let sd = dt.sqrt();
        let increments = (0..steps).map(|_| sd * rng.standard_normal()).collect();
        Ok(BrownianGrid { dt, increments })
    }

    pub fn horizon(&self) -> f64 {
        self.dt * self.increments.len() as f64
    }

    pub fn quadratic_variation(&self) -> f64 {
        self.increments.iter().map(|d| d * d).sum()
    }

    /// Cumulative path values `B(k dt)`, starting with `B(0) = 0`.
    pub fn path(&self) -> Vec<f64> {
        let mut b = Vec::with_capacity(self.increments.len() + 1);
        let mut acc = 0.0;
        b.push(acc);
        for d in &self.increments {
            acc += d;
            b.push(acc);
        }
        b
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn moments(xs: impl Iterator<Item = f64>) -> (f64, f64, usize) {
        let mut n = 0usize;
        let mut s = 0.0;
        let mut s2 = 0.0;
        for x in xs {
            n += 1;
            s += x;
            s2 += x * x;
        }
        let m = s / n as f64;
        (m, s2 / n as f64 - m * m, n)
    }

    #[test]
    fn same_key_same_sequence() {
        let mut a = derive_stream(42, 0);
        let mut b = derive_stream(42, 0);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn distinct_index_distinct_sequence() {
        let mut a = derive_stream(42, 0);
        let mut b = derive_stream(42, 1);
        assert_ne!(a.next_u64(), b.next_u64());
    }

    #[test]
    fn uniform_mean_of_stream_seven() {
        let mut r = derive_stream(42, 7);
        let (m, _, _) = moments((0..100_000).map(|_| r.uniform()));
        // sd of the mean is sqrt(1/12/1e5) ~ 9.1e-4; 0.005 is > 5 sigma
        assert!((m - 0.5).abs() < 0.005, "mean {m}");
    }

    #[test]
    fn gaussian_variance_two() {
        let mut r = derive_stream(3, 11);
        let (m, v, n) = moments((0..1_000_000).map(|_| sample_gaussian(&mut r, 0.0, 2.0).unwrap()));
        assert_eq!(n, 1_000_000);
        assert!(m.abs() < 0.006, "mean {m}");
        assert!((1.99..=2.01).contains(&v), "variance {v}");
    }

    #[test]
    fn gaussian_degenerate_variance_concentrates() {
        let mut r = derive_stream(3, 12);
        for _ in 0..1000 {
            let x = sample_gaussian(&mut r, 5.0, 1e-12).unwrap();
            assert!((x - 5.0).abs() < 1e-5);
        }
    }

    #[test]
    fn gaussian_rejects_nonpositive_variance() {
        let mut r = derive_stream(3, 13);
        assert!(sample_gaussian(&mut r, 0.0, 0.0).is_err());
        assert!(sample_gaussian(&mut r, 0.0, -1.0).is_err());
    }

    #[test]
    fn disjoint_streams_uncorrelated() {
        let mut a = derive_stream(9, 100);
        let mut b = derive_stream(9, 101);
        let n = 100_000;
        let pairs: Vec<(f64, f64)> = (0..n).map(|_| (a.standard_normal(), b.standard_normal())).collect();
        let (mx, vx, _) = moments(pairs.iter().map(|p| p.0));
        let (my, vy, _) = moments(pairs.iter().map(|p| p.1));
        let cov = pairs.iter().map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / n as f64;
        let rho = cov / (vx * vy).sqrt();
        assert!(rho.abs() < 0.01, "rho {rho}");
    }

    #[test]
    fn gamma_moments_match_for_all_shapes() {
        for (i, &k) in [0.5, 1.0, 2.5, 10.0].iter().enumerate() {
            let mut r = derive_stream(77, i as u64);
            let n = 1_000_000;
            let (m, v, _) = moments((0..n).map(|_| r.gamma(k).unwrap()));
            // Gamma(k,1): mean k, var k, 4th central moment 3k^2 + 6k
            let se_mean = (k / n as f64).sqrt();
            let se_var = ((3.0 * k * k + 6.0 * k - k * k) / n as f64).sqrt();
            assert!((m - k).abs() < 4.0 * se_mean, "shape {k}: mean {m}");
            assert!((v - k).abs() < 4.0 * se_var, "shape {k}: var {v}");
        }
    }

    #[test]
    fn chi_second_moment_is_shape() {
        for (i, &k) in [1.0, 3.5, 8.0].iter().enumerate() {
            let mut r = derive_stream(5, i as u64);
            let n = 1_000_000;
            let ms = (0..n).map(|_| sample_chi(&mut r, k).unwrap().powi(2)).sum::<f64>() / n as f64;
            assert!((ms - k).abs() < 4.0 * (2.0 * k).sqrt() / 1e3, "shape {k}: {ms}");
        }
    }

    #[test]
    fn chi_one_is_half_normal() {
        let mut r = derive_stream(5, 99);
        let n = 100_000;
        // median of |N(0,1)| is the 0.75 normal quantile, 0.6744897...
        let below = (0..n)
            .filter(|_| sample_chi(&mut r, 1.0).unwrap() < 0.674_489_75)
            .count();
        let frac = below as f64 / n as f64;
        assert!((frac - 0.5).abs() < 0.005, "{frac}");
    }

    #[test]
    fn chi_non_integer_shape_support() {
        let mut r = derive_stream(5, 100);
        for _ in 0..10_000 {
            assert!(sample_chi(&mut r, 3.5).unwrap() >= 0.0);
        }
        assert!(sample_chi(&mut r, 0.0).is_err());
    }

    #[test]
    fn brownian_quadratic_variation() {
        // Sum of squares over [0, T] has mean T and variance 2 T dt.
        let dt = 1e-3;
        let steps = 1000;
        let reps = 2000;
        let mut total = 0.0;
        for i in 0..reps {
            let mut r = derive_stream(8, i);
            total += BrownianGrid::sample(&mut r, dt, steps).unwrap().quadratic_variation();
        }
        let mean = total / reps as f64;
        let se = (2.0 * 1.0 * dt / reps as f64).sqrt();
        assert!((mean - 1.0).abs() < 4.0 * se, "{mean}");
    }
}
