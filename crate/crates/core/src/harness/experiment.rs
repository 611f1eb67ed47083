//! Single-level experiments and the pieces shared with the two-level driver.

use std::collections::VecDeque;

use rand::RngCore;

use crate::agent::{AgentShape, AgentSpec, BacAgent, BacVariant, ModelTrainer, Transition};
use crate::cartpole::{self, CartPoleState, STATE_DIM};
use crate::error::{Error, Result};
use crate::harness::config::{Architecture, ExperimentConfig};
use crate::harness::records::{ExperimentOutcome, PhaseReport, TerminalReason, TrialRecord};
use crate::hierarchy::{self, PhaseId};
use crate::rng::{self, Streams};

/// Build the agent description for one level.
pub fn agent_spec(cfg: &ExperimentConfig, variant: BacVariant, shape: AgentShape, gamma: f64) -> AgentSpec<f64> {
    let mut td = cfg.td;
    td.gamma = gamma;
    AgentSpec {
        variant,
        shape,
        td,
        noise: cfg.noise,
        reward_sign: cfg.effective_reward_sign(),
        reward_scale: cfg.reward_scale,
        terminal: cfg.terminal,
        init_scale: cfg.init_scale,
        model_lr: cfg.model_lr,
        k_m: cfg.k_m,
    }
}

/// One random-action transition in normalized coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSample {
    pub state: [f64; STATE_DIM],
    pub action: f64,
    pub delta: [f64; STATE_DIM],
}

/// Random-action rollouts from random starts, restarting on failure.
pub fn random_transitions<R: RngCore + ?Sized>(cfg: &ExperimentConfig, n: usize, rng: &mut R) -> Vec<ModelSample> {
    let mut out = Vec::with_capacity(n);
    let mut s = cartpole::random_initial_state(rng, &cfg.bounds, cfg.init_fraction);
    while out.len() < n {
        let a: f64 = rng::symmetric(rng, 1.0);
        let next = cartpole::step(&s, a, &cfg.physics);
        out.push(ModelSample {
            state: s.normalized(&cfg.bounds),
            action: a,
            delta: s.normalized_delta(&next, &cfg.bounds),
        });
        s = if cartpole::is_failure(&next, &cfg.bounds) {
            cartpole::random_initial_state(rng, &cfg.bounds, cfg.init_fraction)
        } else {
            next
        };
    }
    out
}

/// Mean absolute normalized prediction error over a sample set.
pub fn model_error(model: &ModelTrainer<f64>, samples: &[ModelSample]) -> Result<f64> {
    let mut total = 0.0;
    for s in samples {
        total += model.error(&s.state, &[s.action], &s.delta)?;
    }
    Ok(total / samples.len().max(1) as f64)
}

/// Sliding mean over the last `cap` values.
#[derive(Debug, Clone)]
pub struct Window {
    cap: usize,
    buf: VecDeque<f64>,
    sum: f64,
}

impl Window {
    pub fn new(cap: usize) -> Self {
        Self {
            cap: cap.max(1),
            buf: VecDeque::new(),
            sum: 0.0,
        }
    }

    pub fn push(&mut self, v: f64) {
        self.buf.push_back(v);
        self.sum += v;
        if self.buf.len() > self.cap {
            self.sum -= self.buf.pop_front().unwrap_or(0.0);
        }
    }

    pub fn is_full(&self) -> bool {
        self.buf.len() == self.cap
    }

    pub fn mean(&self) -> f64 {
        if self.buf.is_empty() {
            f64::NAN
        } else {
            // recomputed to avoid drift in the running sum
            self.buf.iter().sum::<f64>() / self.buf.len() as f64
        }
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }
}

/// Outcome of model identification.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFit {
    pub steps: usize,
    pub trials: usize,
    pub windowed_error: f64,
    pub converged: bool,
}

/// Train a one-step model on random actions.
///
/// Runs until `max_steps` or `max_trials` are used, or, when `early_stop`
/// is set, until the windowed training error drops below the tolerance.
pub fn identify_model<R: RngCore + ?Sized>(
    model: &mut ModelTrainer<f64>,
    cfg: &ExperimentConfig,
    max_steps: usize,
    max_trials: usize,
    early_stop: bool,
    rng: &mut R,
) -> Result<ModelFit> {
    let tol = cfg.convergence.model_tolerance;
    let mut window = Window::new(cfg.convergence.model_window);
    let mut steps = 0;
    let mut trials = 0;
    while steps < max_steps && trials < max_trials {
        trials += 1;
        let mut s = cartpole::random_initial_state(rng, &cfg.bounds, cfg.init_fraction);
        while steps < max_steps {
            let a: f64 = rng::symmetric(rng, 1.0);
            let next = cartpole::step(&s, a, &cfg.physics);
            let err = model.train_step(&s.normalized(&cfg.bounds), &[a], &s.normalized_delta(&next, &cfg.bounds))?;
            window.push(err);
            steps += 1;
            if early_stop && window.is_full() && window.mean() < tol {
                return Ok(ModelFit {
                    steps,
                    trials,
                    windowed_error: window.mean(),
                    converged: true,
                });
            }
            if cartpole::is_failure(&next, &cfg.bounds) {
                break;
            }
            s = next;
        }
    }
    let windowed_error = window.mean();
    Ok(ModelFit {
        steps,
        trials,
        windowed_error,
        converged: windowed_error < tol,
    })
}

/// Run trials with a single-level agent until success or `trial_limit`.
pub fn single_level_trials(
    agent: &mut BacAgent<f64>,
    cfg: &ExperimentConfig,
    streams: &mut Streams,
) -> Result<Vec<TrialRecord>> {
    let mut records = Vec::new();
    for trial in 1..=cfg.trial_limit {
        let mut s = cartpole::random_initial_state(&mut streams.state, &cfg.bounds, cfg.init_fraction);
        let mut steps = 0;
        let reason = loop {
            let obs = s.normalized(&cfg.bounds);
            let d = agent.decide(&obs, &[], &mut streams.noise)?;
            let next = cartpole::step(&s, d.action[0], &cfg.physics);
            let fail = cartpole::failure(&next, &cfg.bounds);
            let r = cartpole::reinforcement(&next, &cfg.bounds, cfg.reinforcement);
            agent.learn(&Transition {
                state: &obs,
                context: &[],
                decision: &d,
                reward: r,
                next_state: &next.normalized(&cfg.bounds),
                next_context: &[],
                terminal: fail.is_some(),
            })?;
            steps += 1;
            s = next;
            if let Some(f) = fail {
                break TerminalReason::from(f);
            }
            if steps >= cfg.success_steps {
                break TerminalReason::Success;
            }
        };
        records.push(TrialRecord {
            trial,
            steps,
            terminal_reason: reason,
            mean_delta_plan: None,
        });
        if reason == TerminalReason::Success {
            break;
        }
    }
    Ok(records)
}

/// Single-level shape: 4 state inputs, no context, one action.
pub fn single_shape(cfg: &ExperimentConfig) -> AgentShape {
    AgentShape {
        state_dim: STATE_DIM,
        context_dim: 0,
        action_dim: 1,
        n_hidden: cfg.n_hidden,
    }
}

/// One single-level experiment: model identification (indirect only), then
/// controller learning.
pub fn run_single(cfg: &ExperimentConfig, seed: u64) -> Result<ExperimentOutcome> {
    let mut streams = Streams::new(seed);
    let variant = cfg.architecture.variant();
    let spec = agent_spec(cfg, variant, single_shape(cfg), cfg.td.gamma);
    let mut agent = BacAgent::new(&spec, &mut streams.init)?;
    let mut phases = Vec::new();
    if let Some(model) = agent.model.as_mut() {
        let fit = identify_model(model, cfg, cfg.model_steps, usize::MAX, false, &mut streams.explore)?;
        phases.push(PhaseReport {
            phase: PhaseId::I,
            trials: fit.trials,
            steps: fit.steps,
            converged: true,
            metric: fit.windowed_error,
        });
    }
    let mut outcome = ExperimentOutcome {
        seed,
        trials: Vec::new(),
        phases,
        fault: None,
    };
    match single_level_trials(&mut agent, cfg, &mut streams) {
        Ok(t) => outcome.trials = t,
        Err(e) if e.is_numeric_fault() => outcome.fault = Some(e.to_string()),
        Err(e) => return Err(e),
    }
    let last = outcome.trials.last();
    outcome.phases.push(PhaseReport {
        phase: PhaseId::II,
        trials: outcome.trials.len(),
        steps: outcome.trials.iter().map(|t| t.steps).sum(),
        converged: outcome.success_trial().is_some(),
        metric: last.map_or(0.0, |t| t.steps as f64),
    });
    Ok(outcome)
}

/// Run one `(config, seed)` experiment of any architecture.
pub fn run_experiment(cfg: &ExperimentConfig, seed: u64) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    match cfg.architecture {
        Architecture::SingleIndirect | Architecture::SingleDirect => run_single(cfg, seed),
        Architecture::TwoLevelIndirect | Architecture::TwoLevelDirect => hierarchy::run_two_level(cfg, seed),
    }
}

/// Used by tests and callers that need a state-only check.
pub fn ensure_finite(s: &CartPoleState<f64>) -> Result<()> {
    if s.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite("plant state".into()))
    }
}
