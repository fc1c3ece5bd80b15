//! Probability estimates with their uncertainty, shared by every estimator.

use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, ContinuousCDF};

use crate::error::{Error, Result};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub p_hat: f64,
    pub log_p_hat: f64,
    pub stderr: f64,
    /// `stderr / p_hat`, kept separately because `stderr` underflows deep in the tail.
    pub rel_stderr: f64,
    /// `(sum w)^2 / sum w^2` over per-path contributions.
    pub ess: f64,
    pub n_paths: u64,
    pub n_hit: u64,
    pub n_censored: u64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl TailEstimate {
    /// Fraction `n_hit / n_paths` with the exact Clopper-Pearson 95% interval.
    pub fn from_binomial(n_hit: u64, n_paths: u64, n_censored: u64) -> Result<Self> {
        if n_paths == 0 {
            return Err(Error::param("binomial estimate needs at least one trial"));
        }
        if n_hit > n_paths {
            return Err(Error::param("more hits than trials"));
        }
        let n = n_paths as f64;
        let k = n_hit as f64;
        let p = k / n;
        let stderr = (p * (1.0 - p) / n).sqrt();
        let (ci_low, ci_high) = clopper_pearson(n_hit, n_paths, 0.05);
        Ok(TailEstimate {
            p_hat: p,
            log_p_hat: p.ln(),
            stderr,
            rel_stderr: if p > 0.0 { stderr / p } else { f64::INFINITY },
            ess: k,
            n_paths,
            n_hit,
            n_censored,
            ci_low,
            ci_high,
        })
    }

    /// Mean of per-path weights given by their logarithms (`-inf` for a zero
    /// contribution). Reduction is sequential in slice order.
    pub fn from_log_weights(log_w: &[f64], n_censored: u64) -> Result<Self> {
        if log_w.is_empty() {
            return Err(Error::param("weighted estimate needs at least one path"));
        }
        let n = log_w.len() as f64;
        let n_hit = log_w.iter().filter(|w| w.is_finite()).count() as u64;
        let m = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !m.is_finite() {
            return Ok(TailEstimate {
                p_hat: 0.0,
                log_p_hat: f64::NEG_INFINITY,
                stderr: 0.0,
                rel_stderr: f64::INFINITY,
                ess: 0.0,
                n_paths: log_w.len() as u64,
                n_hit: 0,
                n_censored,
                ci_low: 0.0,
                ci_high: 0.0,
            });
        }
        let mut s1 = 0.0;
        let mut s2 = 0.0;
        for &lw in log_w {
            let e = (lw - m).exp();
            s1 += e;
            s2 += e * e;
        }
        let mean_scaled = s1 / n;
        let var_scaled = if log_w.len() > 1 {
            ((s2 / n - mean_scaled * mean_scaled) * n / (n - 1.0)).max(0.0)
        } else {
            0.0
        };
        let se_scaled = (var_scaled / n).sqrt();
        let scale = m.exp();
        let p_hat = scale * mean_scaled;
        let stderr = scale * se_scaled;
        Ok(TailEstimate {
            p_hat,
            log_p_hat: m + mean_scaled.ln(),
            stderr,
            rel_stderr: se_scaled / mean_scaled,
            ess: s1 * s1 / s2,
            n_paths: log_w.len() as u64,
            n_hit,
            n_censored,
            ci_low: (p_hat - Z95 * stderr).max(0.0),
            ci_high: p_hat + Z95 * stderr,
        })
    }

    /// Standard error of `log_p_hat` by the delta method.
    pub fn log_stderr(&self) -> f64 {
        self.rel_stderr
    }

    /// 95% interval for `log_p_hat`, delta method.
    pub fn log_ci(&self) -> (f64, f64) {
        let lo = if self.rel_stderr * Z95 < 1.0 {
            self.log_p_hat + (1.0 - Z95 * self.rel_stderr).ln()
        } else {
            f64::NEG_INFINITY
        };
        (lo, self.log_p_hat + (1.0 + Z95 * self.rel_stderr).ln())
    }

    pub fn censored_fraction(&self) -> f64 {
        self.n_censored as f64 / self.n_paths as f64
    }

    pub fn overlaps(&self, other: &TailEstimate) -> bool {
        self.ci_low <= other.ci_high && other.ci_low <= self.ci_high
    }
}

/// Exact binomial interval at level `1 - alpha`.
pub fn clopper_pearson(k: u64, n: u64, alpha: f64) -> (f64, f64) {
    let kf = k as f64;
    let nf = n as f64;
    let lo = if k == 0 {
        0.0
    } else {
        Beta::new(kf, nf - kf + 1.0)
            .map(|b| b.inverse_cdf(alpha / 2.0))
            .unwrap_or(0.0)
    };
    let hi = if k == n {
        1.0
    } else {
        Beta::new(kf + 1.0, nf - kf)
            .map(|b| b.inverse_cdf(1.0 - alpha / 2.0))
            .unwrap_or(1.0)
    };
    (lo, hi)
}

/// `ln(sum exp(x_i))`, `-inf` for an empty or all-`-inf` input.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}
