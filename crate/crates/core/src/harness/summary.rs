//! Multi-seed batches and their aggregate statistics.

use rayon::prelude::*;

use crate::error::Result;
use crate::harness::config::{Architecture, ExperimentConfig};
use crate::harness::experiment::run_experiment;
use crate::harness::records::{steps_before_success, success_trial, ExperimentOutcome, TrialRecord};
use crate::hierarchy::LlMode;

/// Trials per bin when smoothing learning curves.
pub const BIN_SIZE: usize = 50;

/// Aggregate over the experiments of one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub architecture: Architecture,
    pub servo_rate_hz: f64,
    /// `None` for single-level architectures.
    pub ll_mode: Option<LlMode>,
    pub experiments: usize,
    pub successes: usize,
    /// Mean trial index of the first success, over successful experiments.
    pub n_ave: Option<f64>,
    /// Mean steps spent before the successful trial, over successful experiments.
    pub m_ave: Option<f64>,
    /// Sample standard deviations of the two averages (extension).
    pub n_std: Option<f64>,
    pub m_std: Option<f64>,
}

impl RunSummary {
    pub fn success_ratio(&self) -> f64 {
        if self.experiments == 0 {
            0.0
        } else {
            self.successes as f64 / self.experiments as f64
        }
    }
}

fn mean_std(v: &[f64]) -> (Option<f64>, Option<f64>) {
    if v.is_empty() {
        return (None, None);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let std = if v.len() > 1 {
        Some((v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt())
    } else {
        None
    };
    (Some(mean), std)
}

/// Summary over per-experiment trial lists, one per seed in the batch.
pub fn summarize<'a>(cfg: &ExperimentConfig, per_seed: impl IntoIterator<Item = &'a [TrialRecord]>) -> RunSummary {
    let mut experiments = 0;
    let mut n = Vec::new();
    let mut m = Vec::new();
    for trials in per_seed {
        experiments += 1;
        if let (Some(t), Some(s)) = (success_trial(trials), steps_before_success(trials)) {
            n.push(t as f64);
            m.push(s as f64);
        }
    }
    // fixed summation order, so the result does not depend on seed order
    n.sort_by(f64::total_cmp);
    m.sort_by(f64::total_cmp);
    let (n_ave, n_std) = mean_std(&n);
    let (m_ave, m_std) = mean_std(&m);
    RunSummary {
        architecture: cfg.architecture,
        servo_rate_hz: cfg.servo_rate_hz,
        ll_mode: cfg.architecture.is_two_level().then_some(cfg.ll_mode),
        experiments,
        successes: n.len(),
        n_ave,
        m_ave,
        n_std,
        m_std,
    }
}

/// Every seed's outcome, in seed-list order, plus the summary.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchResult {
    pub outcomes: Vec<ExperimentOutcome>,
    pub summary: RunSummary,
}

impl BatchResult {
    pub fn faults(&self) -> impl Iterator<Item = &ExperimentOutcome> {
        self.outcomes.iter().filter(|o| o.fault.is_some())
    }
}

/// Run all of `cfg.seeds` in parallel.
pub fn run_batch(cfg: &ExperimentConfig) -> Result<BatchResult> {
    cfg.validate()?;
    let outcomes = cfg
        .seeds
        .par_iter()
        .map(|&seed| run_experiment(cfg, seed))
        .collect::<Result<Vec<_>>>()?;
    let summary = summarize(cfg, outcomes.iter().map(|o| o.trials.as_slice()));
    Ok(BatchResult { outcomes, summary })
}

/// One bin of a smoothed learning curve.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesBin {
    pub bin_index: usize,
    pub trials: usize,
    pub mean_steps: f64,
    /// Mean of the per-trial `|δ|` values present in the bin.
    pub mean_delta: Option<f64>,
    pub partial: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmoothedSeries {
    pub bin_size: usize,
    pub bins: Vec<SeriesBin>,
}

/// Average steps per trial, and `|δ|`, over consecutive bins of trials.
pub fn smooth_series(records: &[TrialRecord], bin_size: usize) -> SmoothedSeries {
    let bin_size = bin_size.max(1);
    let bins = records
        .chunks(bin_size)
        .enumerate()
        .map(|(bin_index, c)| {
            let deltas: Vec<f64> = c.iter().filter_map(|t| t.mean_delta_plan).collect();
            SeriesBin {
                bin_index,
                trials: c.len(),
                mean_steps: c.iter().map(|t| t.steps as f64).sum::<f64>() / c.len() as f64,
                mean_delta: (!deltas.is_empty()).then(|| deltas.iter().sum::<f64>() / deltas.len() as f64),
                partial: c.len() < bin_size,
            }
        })
        .collect();
    SmoothedSeries { bin_size, bins }
}
