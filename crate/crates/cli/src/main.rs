use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use tw_tail::harness::{exit_code, run_experiment, ExperimentConfig, Mode, WORKERS_ENV};

#[derive(Parser)]
#[command(name = "twtail", version, about = "Tracy-Widom right-tail estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Flat TOML experiment file; flags below override its keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (the environment variable wins if set).
    #[arg(long, global = true, env = WORKERS_ENV)]
    workers: Option<usize>,
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Comma-separated tail levels.
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    a: Vec<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    beta: Option<f64>,
    #[arg(long, global = true)]
    paths: Option<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Naive,
    Is,
}

#[derive(Subcommand)]
enum Command {
    /// Diffusion estimate of P(TW > a).
    Estimate {
        #[arg(long, value_enum, default_value = "is")]
        method: Method,
    },
    /// Tridiagonal-ensemble estimate.
    Oracle,
    /// Closed-form tail exponents.
    Asymptotic,
    /// Flowline grid and separatrix.
    Flowlines {
        /// Drive the flows with a Brownian path.
        #[arg(long)]
        noisy: bool,
    },
    /// Every estimator side by side.
    Compare,
}

fn build_config(cli: &Cli) -> anyhow::Result<ExperimentConfig> {
    let mode = match &cli.command {
        Command::Estimate { method: Method::Naive } => Mode::Naive,
        Command::Estimate { method: Method::Is } => Mode::Is,
        Command::Oracle => Mode::Oracle,
        Command::Asymptotic => Mode::Asymptotic,
        Command::Flowlines { .. } => Mode::Flowlines,
        Command::Compare => Mode::Compare,
    };
    let c = &cli.common;
    let mut cfg = match &c.config {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            ExperimentConfig::from_toml_str(&text)?
        }
        None => {
            if c.a.is_empty() {
                anyhow::bail!(tw_tail::Error::Config("give --a or --config".into()));
            }
            ExperimentConfig::new(mode, c.a.clone(), c.beta.unwrap_or(2.0))
        }
    };
    cfg.mode = mode;
    if !c.a.is_empty() {
        cfg.a = c.a.clone();
    }
    if let Some(b) = c.beta {
        cfg.beta = b;
    }
    if let Some(n) = c.paths {
        cfg.n_paths = n;
    }
    if let Some(s) = c.seed {
        cfg.master_seed = s;
    }
    if let Some(w) = c.workers {
        cfg.worker_count = Some(w);
    }
    if let Some(d) = &c.out_dir {
        cfg.out_dir = d.clone();
    }
    if let Command::Flowlines { noisy: true } = cli.command {
        cfg.flow_noisy = true;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    // usage errors are configuration errors; 2 is kept for estimator failure
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = build_config(&cli).and_then(|cfg| Ok(run_experiment(&cfg)?));
    match result {
        Ok(report) => {
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            for f in &report.files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = e.downcast_ref::<tw_tail::Error>().map_or(1, exit_code);
            ExitCode::from(code as u8)
        }
    }
}
