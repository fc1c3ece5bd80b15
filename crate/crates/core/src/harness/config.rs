//! Experiment configuration: a flat TOML file of scalar and array keys.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::asymptotics::DEFAULT_KAPPA;
use crate::error::{Error, Result};
use crate::girsanov::c1_floor;

/// Environment variable overriding the configured worker count.
pub const WORKERS_ENV: &str = "TWTAIL_WORKERS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Naive,
    Is,
    Oracle,
    Asymptotic,
    Flowlines,
    Compare,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Naive => "naive",
            Mode::Is => "is",
            Mode::Oracle => "oracle",
            Mode::Asymptotic => "asymptotic",
            Mode::Flowlines => "flowlines",
            Mode::Compare => "compare",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "naive" => Mode::Naive,
            "is" => Mode::Is,
            "oracle" => Mode::Oracle,
            "asymptotic" => Mode::Asymptotic,
            "flowlines" => Mode::Flowlines,
            "compare" => Mode::Compare,
            other => return Err(Error::Config(format!("unknown mode '{other}'"))),
        })
    }
}

fn default_paths() -> u64 {
    10_000
}
fn default_oracle_n() -> usize {
    crate::ensemble::DEFAULT_N
}
fn default_one() -> f64 {
    1.0
}
fn default_c3() -> f64 {
    5.0
}
fn default_kappa() -> f64 {
    DEFAULT_KAPPA
}
fn default_replicates() -> u32 {
    8
}
fn default_nats() -> f64 {
    12.0
}
fn default_out() -> PathBuf {
    PathBuf::from("out")
}
fn default_flow_t() -> [f64; 2] {
    [-6.0, 2.0]
}
fn default_flow_z() -> [f64; 2] {
    [-3.0, 3.0]
}
fn default_flow_count() -> usize {
    9
}
fn default_stride() -> usize {
    20
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    /// Tail levels, one report row each.
    pub a: Vec<f64>,
    pub beta: f64,
    #[serde(default = "default_paths")]
    pub n_paths: u64,
    /// Ensemble samples; defaults to `n_paths`.
    #[serde(default)]
    pub oracle_samples: Option<u64>,
    #[serde(default = "default_oracle_n")]
    pub oracle_n: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub worker_count: Option<usize>,

    /// Multiplies the default `dt_max` of every diffusion run.
    #[serde(default = "default_one")]
    pub dt_scale: f64,
    /// Time budget of naive runs; defaults to the policy's own.
    #[serde(default)]
    pub t_budget: Option<f64>,

    #[serde(default)]
    pub c1: Option<f64>,
    #[serde(default)]
    pub c2: Option<f64>,
    #[serde(default = "default_c3")]
    pub c3: f64,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default = "default_replicates")]
    pub stretch3_replicates: u32,
    #[serde(default = "default_nats")]
    pub horizon_nats: f64,

    #[serde(default = "default_flow_t")]
    pub flow_t_range: [f64; 2],
    #[serde(default = "default_flow_z")]
    pub flow_z_range: [f64; 2],
    #[serde(default = "default_flow_count")]
    pub flow_n_t: usize,
    #[serde(default = "default_flow_count")]
    pub flow_n_z: usize,
    #[serde(default = "default_stride")]
    pub flow_stride: usize,
    #[serde(default)]
    pub flow_noisy: bool,

    #[serde(default = "default_out")]
    pub out_dir: PathBuf,
}

impl ExperimentConfig {
    /// Minimal config with every optional key at its default.
    pub fn new(mode: Mode, a: Vec<f64>, beta: f64) -> Self {
        ExperimentConfig {
            mode,
            a,
            beta,
            n_paths: default_paths(),
            oracle_samples: None,
            oracle_n: default_oracle_n(),
            master_seed: 0,
            worker_count: None,
            dt_scale: 1.0,
            t_budget: None,
            c1: None,
            c2: None,
            c3: default_c3(),
            kappa: DEFAULT_KAPPA,
            delta: None,
            stretch3_replicates: default_replicates(),
            horizon_nats: default_nats(),
            flow_t_range: default_flow_t(),
            flow_z_range: default_flow_z(),
            flow_n_t: default_flow_count(),
            flow_n_z: default_flow_count(),
            flow_stride: default_stride(),
            flow_noisy: false,
            out_dir: default_out(),
        }
    }

    /// Parse and validate. Nested tables are rejected: the format is flat.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        for (key, value) in &table {
            let nested = match value {
                toml::Value::Table(_) => true,
                toml::Value::Array(items) => items.iter().any(|v| v.is_table() || v.is_array()),
                _ => false,
            };
            if nested {
                return Err(Error::Config(format!("key '{key}' is not a flat value")));
            }
        }
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.a.is_empty() {
            return bad("a must list at least one level".into());
        }
        if self.a.iter().any(|a| !a.is_finite()) {
            return bad("every a must be finite".into());
        }
        if !(self.beta > 0.0) {
            return bad(format!("beta must be positive, got {}", self.beta));
        }
        if self.n_paths == 0 || self.oracle_samples == Some(0) {
            return bad("path and sample counts must be positive".into());
        }
        if self.oracle_n < 2 {
            return bad("oracle_n must be at least 2".into());
        }
        if self.worker_count == Some(0) {
            return bad("worker_count must be positive".into());
        }
        if !(self.dt_scale > 0.0) || !self.dt_scale.is_finite() {
            return bad("dt_scale must be positive".into());
        }
        if let Some(t) = self.t_budget {
            if !(t > 0.0) || !t.is_finite() {
                return bad("t_budget must be positive".into());
            }
        }
        if let Some(c1) = self.c1 {
            let floor = c1_floor(self.beta)?;
            if !(c1 > floor) {
                return bad(format!("c1 = {c1} must exceed {floor}"));
            }
        }
        if let Some(c2) = self.c2 {
            let floor = 2.0 * self.beta.sqrt() / 3f64.sqrt() + 2.0;
            if !(c2 > floor) {
                return bad(format!("c2 = {c2} must exceed {floor}"));
            }
        }
        if !(self.c3 > 0.0) || !(self.kappa >= 0.0) || !(self.horizon_nats > 0.0) {
            return bad("c3 and horizon_nats must be positive, kappa non-negative".into());
        }
        if self.stretch3_replicates == 0 {
            return bad("stretch3_replicates must be positive".into());
        }
        if let Some(d) = self.delta {
            if !(d > 0.0) {
                return bad("delta must be positive".into());
            }
        }
        let [t0, t1] = self.flow_t_range;
        let [z0, z1] = self.flow_z_range;
        if !(t0 < t1) || !(z0 < z1) || self.flow_n_t == 0 || self.flow_n_z == 0 || self.flow_stride == 0 {
            return bad("flow grid must be non-degenerate".into());
        }
        Ok(())
    }

    /// Worker count after the environment override; `None` keeps rayon's default.
    pub fn resolved_workers(&self) -> Result<Option<usize>> {
        match std::env::var(WORKERS_ENV) {
            Ok(v) => match v.trim().parse::<usize>() {
                Ok(n) if n > 0 => Ok(Some(n)),
                _ => Err(Error::Config(format!(
                    "{WORKERS_ENV} must be a positive integer, got '{v}'"
                ))),
            },
            Err(_) => Ok(self.worker_count),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_file() {
        let c = ExperimentConfig::from_toml_str("mode = \"asymptotic\"\na = [1.0]\nbeta = 2.0\n").unwrap();
        assert_eq!(c, ExperimentConfig::new(Mode::Asymptotic, vec![1.0], 2.0));
    }

    #[test]
    fn round_trip() {
        let mut c = ExperimentConfig::new(Mode::Compare, vec![0.5, 1.0], 2.0);
        c.delta = Some(0.3);
        c.worker_count = Some(3);
        c.flow_noisy = true;
        let text = c.to_toml_string().unwrap();
        assert_eq!(ExperimentConfig::from_toml_str(&text).unwrap(), c);
    }

    #[test]
    fn rejections() {
        let base = "a = [1.0]\nbeta = 2.0\n";
        for extra in [
            "mode = \"bogus\"",
            "mode = \"naive\"\nunknown_key = 1",
            "mode = \"naive\"\n[section]\nx = 1",
            "mode = \"naive\"\nn_paths = 0",
            "mode = \"naive\"\nc1 = 0.0",
            "mode = \"naive\"\nc2 = 1.0",
        ] {
            let text = format!("{base}{extra}\n");
            assert!(
                matches!(ExperimentConfig::from_toml_str(&text), Err(Error::Config(_))),
                "{extra}"
            );
        }
        assert!(ExperimentConfig::from_toml_str("mode = \"naive\"\nbeta = 2.0\n").is_err());
        assert!(ExperimentConfig::from_toml_str("mode = \"naive\"\na = []\nbeta = 2.0\n").is_err());
        assert!(ExperimentConfig::from_toml_str("mode = \"naive\"\na = [[1.0]]\nbeta = 2.0\n").is_err());
    }

    #[test]
    fn mode_names() {
        for m in ["naive", "is", "oracle", "asymptotic", "flowlines", "compare"] {
            assert_eq!(m.parse::<Mode>().unwrap().name(), m);
        }
        assert!("nope".parse::<Mode>().is_err());
    }
}
