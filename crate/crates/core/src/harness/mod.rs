//! Experiment orchestration: configuration, running, bookkeeping and export.

pub mod config;
pub mod experiment;
pub mod export;
pub mod records;
pub mod summary;

pub use config::{Architecture, ExperimentConfig, Profile};
pub use experiment::run_experiment;
pub use records::{ExperimentOutcome, PhaseReport, TerminalReason, TrialRecord};
pub use summary::{run_batch, smooth_series, BatchResult, RunSummary, SmoothedSeries};
