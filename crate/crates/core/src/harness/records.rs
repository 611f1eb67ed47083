//! Per-trial records and per-experiment outcomes.

use crate::cartpole::Failure;
use crate::hierarchy::PhaseId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TerminalReason {
    FailureX,
    FailureTheta,
    Success,
    /// Cut short by a phase step budget.
    Budget,
}

impl TerminalReason {
    pub fn name(self) -> &'static str {
        match self {
            TerminalReason::FailureX => "failure-x",
            TerminalReason::FailureTheta => "failure-theta",
            TerminalReason::Success => "success",
            TerminalReason::Budget => "budget",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "failure-x" => Some(TerminalReason::FailureX),
            "failure-theta" => Some(TerminalReason::FailureTheta),
            "success" => Some(TerminalReason::Success),
            "budget" => Some(TerminalReason::Budget),
            _ => None,
        }
    }
}

impl From<Failure> for TerminalReason {
    fn from(f: Failure) -> Self {
        match f {
            Failure::CartPosition => TerminalReason::FailureX,
            Failure::PoleAngle => TerminalReason::FailureTheta,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    /// 1-based.
    pub trial: usize,
    pub steps: usize,
    pub terminal_reason: TerminalReason,
    /// Trial mean of `|δ|` at the plan inputs (response induction only).
    pub mean_delta_plan: Option<f64>,
}

/// Outcome of one training phase.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseReport {
    pub phase: PhaseId,
    pub trials: usize,
    pub steps: usize,
    pub converged: bool,
    /// Phase-specific figure of merit at the end of the phase (windowed
    /// model error, tracking error in degrees, or mean `|δ|`).
    pub metric: f64,
}

/// Everything one `(config, seed)` run produces.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutcome {
    pub seed: u64,
    /// Trials of the scored phase.
    pub trials: Vec<TrialRecord>,
    pub phases: Vec<PhaseReport>,
    /// Set when a numeric fault ended the run.
    pub fault: Option<String>,
}

impl ExperimentOutcome {
    /// 1-based index of the first successful trial.
    pub fn success_trial(&self) -> Option<usize> {
        success_trial(&self.trials)
    }

    /// Time steps spent in trials before the successful one.
    pub fn steps_before_success(&self) -> Option<u64> {
        steps_before_success(&self.trials)
    }

    pub fn succeeded(&self) -> bool {
        self.fault.is_none() && self.success_trial().is_some()
    }
}

pub fn success_trial(trials: &[TrialRecord]) -> Option<usize> {
    trials
        .iter()
        .find(|t| t.terminal_reason == TerminalReason::Success)
        .map(|t| t.trial)
}

pub fn steps_before_success(trials: &[TrialRecord]) -> Option<u64> {
    let idx = trials.iter().position(|t| t.terminal_reason == TerminalReason::Success)?;
    Some(trials[..idx].iter().map(|t| t.steps as u64).sum())
}
