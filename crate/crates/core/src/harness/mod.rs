//! Experiment configuration, estimator composition and reports.

mod compose;
mod config;
mod experiment;

pub use compose::{
    attempt_horizon, compose_full_tail, estimate_tail_composed, ComposeSettings, ComposedDiagnostics, ComposedEstimate,
    ComposedTail,
};
pub use config::{ExperimentConfig, Mode, WORKERS_ENV};
pub use experiment::{
    exit_code, experiment_stream, run_experiment, write_report_csv, ComparisonReport, ReportRow, ORACLE_CSV,
    REPORT_CSV, SUMMARY_JSON, SURROGATE_LABEL,
};
