//! Experiment harness: configs, presets, runs and reports.

pub mod compare;
pub mod config;
pub mod experiment;
pub mod presets;

pub use compare::{compare_estimators, Comparison};
pub use config::{Experiment, RunConfig};
pub use experiment::{audit_log, run_experiment, run_validated, LogRow, RunSummary, TrajectoryLog, Truncation};
