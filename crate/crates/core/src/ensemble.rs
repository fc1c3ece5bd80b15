//! Finite-n ground truth from the tridiagonal beta ensemble.
//!
//! The matrix has diagonal `N(0, 2/beta)` and the entry between rows `j` and
//! `j + 1` (1-based) distributed as `chi_{(n - j) beta} / sqrt(beta)`; its top
//! eigenvalue rescaled as `n^{1/6} (lambda_1 - 2 sqrt(n))` converges to
//! `TW_beta`.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::TailEstimate;
use crate::parallel::try_map_paths;
use crate::rng::{sample_chi, sample_gaussian, RngStream, StreamDomain};

/// Default matrix size for oracle duty.
pub const DEFAULT_N: usize = 400;

#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalMatrix {
    pub diag: Vec<f64>,
    pub offdiag: Vec<f64>,
}

impl TridiagonalMatrix {
    pub fn new(diag: Vec<f64>, offdiag: Vec<f64>) -> Result<Self> {
        if diag.is_empty() {
            return Err(Error::param("matrix must have at least one row"));
        }
        if offdiag.len() + 1 != diag.len() {
            return Err(Error::param(format!(
                "{} diagonal entries need {} off-diagonal ones, got {}",
                diag.len(),
                diag.len() - 1,
                offdiag.len()
            )));
        }
        if diag.iter().chain(&offdiag).any(|v| !v.is_finite()) {
            return Err(Error::param("matrix entries must be finite"));
        }
        Ok(TridiagonalMatrix { diag, offdiag })
    }

    pub fn n(&self) -> usize {
        self.diag.len()
    }

    /// Gershgorin interval containing the spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.n();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let left = if i > 0 { self.offdiag[i - 1].abs() } else { 0.0 };
            let right = if i + 1 < n { self.offdiag[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - left - right);
            hi = hi.max(self.diag[i] + left + right);
        }
        (lo, hi)
    }

    /// Number of eigenvalues strictly below `x`, from the signs of the
    /// pivots of `T - x I = L D L^T`.
    pub fn count_below(&self, x: f64) -> usize {
        let tiny = f64::MIN_POSITIVE.sqrt();
        let mut count = 0;
        let mut d = 1.0;
        for i in 0..self.n() {
            let b2 = if i > 0 {
                self.offdiag[i - 1] * self.offdiag[i - 1]
            } else {
                0.0
            };
            d = self.diag[i] - x - if i > 0 { b2 / d } else { 0.0 };
            if d == 0.0 {
                d = -tiny;
            }
            if d < 0.0 {
                count += 1;
            }
        }
        count
    }
}

pub fn sample_tridiagonal(n: usize, beta: f64, rng: &mut RngStream) -> Result<TridiagonalMatrix> {
    if n == 0 {
        return Err(Error::param("n must be at least 1"));
    }
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::param(format!("beta must be positive and finite, got {beta}")));
    }
    let var = 2.0 / beta;
    let scale = 1.0 / beta.sqrt();
    let mut diag = Vec::with_capacity(n);
    for _ in 0..n {
        diag.push(sample_gaussian(rng, 0.0, var)?);
    }
    let mut offdiag = Vec::with_capacity(n - 1);
    for j in 1..n {
        offdiag.push(sample_chi(rng, (n - j) as f64 * beta)? * scale);
    }
    Ok(TridiagonalMatrix { diag, offdiag })
}

/// Top eigenvalue by bisection on the Sturm count, to absolute tolerance
/// `1e-10 max(1, |T|)`.
pub fn largest_eigenvalue(m: &TridiagonalMatrix) -> f64 {
    let n = m.n();
    let (g_lo, g_hi) = m.gershgorin();
    let norm = g_lo.abs().max(g_hi.abs());
    let tol = 1e-10 * norm.max(1.0);
    let mut lo = m.diag.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut hi = g_hi;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if m.count_below(mid) == n {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `n^{1/6} (lambda - 2 sqrt(n))`.
pub fn tw_rescale(lambda: f64, n: usize) -> f64 {
    let nf = n as f64;
    nf.powf(1.0 / 6.0) * (lambda - 2.0 * nf.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwSampleBatch {
    pub beta: f64,
    pub n: usize,
    pub master_seed: u64,
    pub samples: Vec<f64>,
}

impl TwSampleBatch {
    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        let m = self.mean();
        let k = self.samples.len() as f64;
        self.samples.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (k - 1.0)
    }

    pub fn stderr_of_mean(&self) -> f64 {
        (self.variance() / self.samples.len() as f64).sqrt()
    }
}

pub fn tw_sample_batch(n: usize, beta: f64, n_samples: u64, rng: &RngStream) -> Result<TwSampleBatch> {
    if n < 2 {
        return Err(Error::param("edge rescaling needs n >= 2"));
    }
    if n_samples == 0 {
        return Err(Error::param("n_samples must be at least 1"));
    }
    let samples = try_map_paths(n_samples, |i| {
        let mut r = rng.split(StreamDomain::Ensemble, i);
        let m = sample_tridiagonal(n, beta, &mut r)?;
        Ok(tw_rescale(largest_eigenvalue(&m), n))
    })?;
    Ok(TwSampleBatch {
        beta,
        n,
        master_seed: rng.master_seed(),
        samples,
    })
}

/// Fraction of the batch above `a`, with the Clopper-Pearson interval.
pub fn empirical_tail(batch: &TwSampleBatch, a: f64) -> Result<TailEstimate> {
    if batch.samples.is_empty() {
        return Err(Error::param("empty sample batch"));
    }
    let k = batch.samples.iter().filter(|&&x| x > a).count() as u64;
    TailEstimate::from_binomial(k, batch.samples.len() as u64, 0)
}

const BATCH_HEADER: &str = "beta,n,master_seed";

pub fn write_batch_csv<W: Write>(mut w: W, batch: &TwSampleBatch) -> Result<()> {
    writeln!(w, "{BATCH_HEADER}")?;
    writeln!(w, "{},{},{}", batch.beta, batch.n, batch.master_seed)?;
    writeln!(w, "sample")?;
    for x in &batch.samples {
        writeln!(w, "{x}")?;
    }
    Ok(())
}

pub fn read_batch_csv<R: BufRead>(r: R) -> Result<TwSampleBatch> {
    let mut lines = r.lines().enumerate();
    let mut next = |what: &str| -> Result<(usize, String)> {
        match lines.next() {
            Some((i, l)) => Ok((i + 1, l?)),
            None => Err(Error::Parse {
                line: 0,
                detail: format!("missing {what}"),
            }),
        }
    };
    let (ln, header) = next("header")?;
    if header.trim_end_matches('\r') != BATCH_HEADER {
        return Err(Error::Parse {
            line: ln,
            detail: format!("expected header '{BATCH_HEADER}'"),
        });
    }
    let (ln, meta) = next("provenance row")?;
    let fields: Vec<&str> = meta.trim_end_matches('\r').split(',').collect();
    if fields.len() != 3 {
        return Err(Error::Parse {
            line: ln,
            detail: format!("expected 3 fields, got {}", fields.len()),
        });
    }
    let bad = |detail: String| Error::Parse { line: ln, detail };
    let beta: f64 = fields[0]
        .parse()
        .map_err(|_| bad(format!("bad beta '{}'", fields[0])))?;
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(bad(format!("beta must be positive, got {beta}")));
    }
    let n: usize = fields[1].parse().map_err(|_| bad(format!("bad n '{}'", fields[1])))?;
    let master_seed: u64 = fields[2]
        .parse()
        .map_err(|_| bad(format!("bad seed '{}'", fields[2])))?;
    let (ln, col) = next("sample header")?;
    if col.trim_end_matches('\r') != "sample" {
        return Err(Error::Parse {
            line: ln,
            detail: "expected 'sample' column header".into(),
        });
    }
    let mut samples = Vec::new();
    for (i, l) in lines {
        let l = l?;
        let l = l.trim_end_matches('\r');
        if l.is_empty() {
            continue;
        }
        let x: f64 = l.parse().map_err(|_| Error::Parse {
            line: i + 1,
            detail: format!("bad sample '{l}'"),
        })?;
        if !x.is_finite() {
            return Err(Error::Parse {
                line: i + 1,
                detail: "sample is not finite".into(),
            });
        }
        samples.push(x);
    }
    Ok(TwSampleBatch {
        beta,
        n,
        master_seed,
        samples,
    })
}
