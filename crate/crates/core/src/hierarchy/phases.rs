//! Phase-by-phase training of a two-level controller.
//!
//! Indirect: I low-level model, II low-level action and critic, III
//! high-level model, IV high-level action and critic. Direct: I low-level
//! action and critic, II high-level action and critic. Every finished phase
//! freezes what it trained.

use rand::RngCore;

use crate::agent::{ActionRule, AgentShape, BacAgent, BacVariant, Transition};
use crate::cartpole::{self, Bounds, CartPoleState, Failure, STATE_DIM};
use crate::error::{Error, Result};
use crate::harness::config::{ExperimentConfig, PhaseBudget};
use crate::harness::experiment::{agent_spec, identify_model, Window};
use crate::harness::records::{ExperimentOutcome, PhaseReport, TerminalReason, TrialRecord};
use crate::induction::{InfluenceState, RiParams};
use crate::rng::{self, Streams};

use super::{hl_schedule, ll_reinforcement_explicit, LlMode, PhaseId, PlanSignal, HlReward};

/// Both levels of a two-level controller.
#[derive(Debug, Clone)]
pub struct TwoLevel {
    pub ll: BacAgent<f64>,
    pub hl: BacAgent<f64>,
}

impl TwoLevel {
    pub fn new<R: RngCore + ?Sized>(cfg: &ExperimentConfig, rng: &mut R) -> Result<Self> {
        let variant = cfg.architecture.variant();
        let h = &cfg.hierarchy;
        let ll_shape = AgentShape {
            state_dim: STATE_DIM,
            context_dim: h.plan_dim,
            action_dim: 1,
            n_hidden: cfg.n_hidden,
        };
        let hl_shape = AgentShape {
            state_dim: STATE_DIM,
            context_dim: 0,
            action_dim: h.plan_dim,
            n_hidden: cfg.n_hidden,
        };
        let mut ll = BacAgent::new(&agent_spec(cfg, variant, ll_shape, cfg.td.gamma), rng)?;
        let hl = BacAgent::new(&agent_spec(cfg, variant, hl_shape, h.hl_gamma), rng)?;
        ll.critic_sees_context = h.ll_critic_sees_plan;
        if cfg.ll_mode == LlMode::ResponseInduction {
            let mut ri = RiParams::new(cfg.ri.k1, cfg.ri.k2, (STATE_DIM..STATE_DIM + h.plan_dim).collect())?;
            ri.rule = cfg.ri.rule;
            ri.source = cfg.ri.source;
            ri.validate_for(&ll.action.net)?;
            ll.rule = ActionRule::Induction(ri);
        }
        Ok(Self { ll, hl })
    }

    /// Low-level action for a state and plan, without noise.
    pub fn ll_act(&self, obs: &[f64; STATE_DIM], plan: &PlanSignal<f64>) -> Result<f64> {
        Ok(self.ll.act_clean(obs, &plan.y)?[0])
    }
}

/// Trials and report of one phase.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseRun {
    pub report: PhaseReport,
    pub trials: Vec<TrialRecord>,
}

/// The phases a variant goes through, in order.
pub fn phase_sequence(variant: BacVariant) -> &'static [PhaseId] {
    match variant {
        BacVariant::Indirect => &[PhaseId::I, PhaseId::II, PhaseId::III, PhaseId::IV],
        BacVariant::Direct => &[PhaseId::I, PhaseId::II],
    }
}

/// What a phase does, independent of its label.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseKind {
    LlModel,
    LlController,
    HlModel,
    HlController,
}

pub fn phase_kind(variant: BacVariant, phase: PhaseId) -> Option<PhaseKind> {
    match (variant, phase) {
        (BacVariant::Indirect, PhaseId::I) => Some(PhaseKind::LlModel),
        (BacVariant::Indirect, PhaseId::II) | (BacVariant::Direct, PhaseId::I) => Some(PhaseKind::LlController),
        (BacVariant::Indirect, PhaseId::III) => Some(PhaseKind::HlModel),
        (BacVariant::Indirect, PhaseId::IV) | (BacVariant::Direct, PhaseId::II) => Some(PhaseKind::HlController),
        _ => None,
    }
}

fn budget_for(cfg: &ExperimentConfig, kind: PhaseKind) -> PhaseBudget {
    let b = &cfg.budgets;
    match (cfg.architecture.variant(), kind) {
        (BacVariant::Indirect, PhaseKind::LlModel) => b.phase1,
        (BacVariant::Indirect, PhaseKind::LlController) => b.phase2,
        (BacVariant::Direct, PhaseKind::LlController) => b.phase1,
        (_, PhaseKind::HlModel) => b.phase3,
        (_, PhaseKind::HlController) => PhaseBudget {
            trials: cfg.trial_limit,
            steps: usize::MAX,
        },
        (BacVariant::Direct, PhaseKind::LlModel) => PhaseBudget { trials: 0, steps: 0 },
    }
}

/// Failure bounds in force while the low level learns.
fn ll_bounds(cfg: &ExperimentConfig) -> Bounds<f64> {
    match cfg.ll_mode {
        LlMode::ExplicitRole => Bounds {
            theta_range: cfg.hierarchy.ll_theta_range,
            ..cfg.bounds
        },
        LlMode::ResponseInduction => cfg.bounds,
    }
}

fn draw_plan<R: RngCore + ?Sized>(rng: &mut R, dim: usize, half_width: f64, step: usize) -> PlanSignal<f64> {
    PlanSignal::new((0..dim).map(|_| rng::symmetric(rng, half_width)).collect(), step)
}

/// Phase I (indirect): identify the low-level model from random actions.
pub fn run_ll_model_phase(sys: &mut TwoLevel, cfg: &ExperimentConfig, phase: PhaseId, streams: &mut Streams) -> Result<PhaseRun> {
    let budget = budget_for(cfg, PhaseKind::LlModel);
    let model = sys
        .ll
        .model
        .as_mut()
        .ok_or_else(|| Error::Config("low-level model phase needs an indirect agent".into()))?;
    let fit = identify_model(model, cfg, budget.steps, budget.trials, true, &mut streams.explore)?;
    Ok(PhaseRun {
        report: PhaseReport {
            phase,
            trials: fit.trials,
            steps: fit.steps,
            converged: fit.converged,
            metric: fit.windowed_error,
        },
        trials: Vec::new(),
    })
}

/// Low-level learning under random plans: explicit-role tracking or
/// response induction on the shared external reinforcement.
pub fn run_ll_controller_phase(
    sys: &mut TwoLevel,
    cfg: &ExperimentConfig,
    phase: PhaseId,
    streams: &mut Streams,
) -> Result<PhaseRun> {
    let budget = budget_for(cfg, PhaseKind::LlController);
    let h = &cfg.hierarchy;
    let conv = &cfg.convergence;
    let bounds = ll_bounds(cfg);
    let settle = h.n_ratio / 2;
    let mut records = Vec::new();
    let mut tracking = Window::new(conv.tracking_trials);
    let mut lengths = Window::new(conv.tracking_trials);
    let mut deltas = Window::new(conv.tracking_trials);
    let mut influence = InfluenceState::<f64>::default();
    let mut used = 0usize;
    let mut converged = false;
    let mut metric = f64::NAN;

    while records.len() < budget.trials && used < budget.steps && !converged {
        let mut s = cartpole::random_initial_state(&mut streams.state, &cfg.bounds, cfg.init_fraction);
        let mut plan = draw_plan(&mut streams.plan, h.plan_dim, h.plan_range_ll, 0);
        let mut steps = 0usize;
        let (mut err_sum, mut err_n) = (0.0, 0usize);
        let reason = loop {
            let obs = s.normalized(&cfg.bounds);
            let d = sys.ll.decide(&obs, &plan.y, &mut streams.noise)?;
            let next = cartpole::step(&s, d.action[0], &cfg.physics);
            let fail = cartpole::failure(&next, &bounds);
            let r = match cfg.ll_mode {
                LlMode::ExplicitRole => h.ll_reward_scale * ll_reinforcement_explicit(&plan, next.theta),
                LlMode::ResponseInduction => cartpole::reinforcement(&next, &cfg.bounds, cfg.reinforcement),
            };
            if plan.elapsed(steps) >= settle {
                err_sum += (next.theta - plan.y[0]).abs();
                err_n += 1;
            }
            steps += 1;
            used += 1;
            let next_plan = if hl_schedule(steps, h.n_ratio) {
                draw_plan(&mut streams.plan, h.plan_dim, h.plan_range_ll, steps)
            } else {
                plan.clone()
            };
            let report = sys.ll.learn(&Transition {
                state: &obs,
                context: &plan.y,
                decision: &d,
                reward: r,
                next_state: &next.normalized(&cfg.bounds),
                next_context: &next_plan.y,
                terminal: fail.is_some(),
            })?;
            if let Some(delta) = &report.plan_delta {
                influence.record(delta);
            }
            s = next;
            plan = next_plan;
            if let Some(f) = fail {
                break TerminalReason::from(f);
            }
            if steps >= cfg.success_steps {
                break TerminalReason::Success;
            }
            if used >= budget.steps {
                break TerminalReason::Budget;
            }
        };
        let mean_delta = influence.end_trial();
        records.push(TrialRecord {
            trial: records.len() + 1,
            steps,
            terminal_reason: reason,
            mean_delta_plan: mean_delta,
        });
        lengths.push(steps as f64);
        match cfg.ll_mode {
            LlMode::ExplicitRole => {
                let e = if err_n > 0 { err_sum / err_n as f64 } else { bounds.theta_range };
                tracking.push(e.to_degrees());
                metric = tracking.mean();
                converged = tracking.is_full() && metric < conv.tracking_tolerance_deg;
            }
            LlMode::ResponseInduction => {
                deltas.push(mean_delta.unwrap_or(0.0));
                metric = deltas.mean();
                converged = deltas.is_full() && metric >= conv.ri_min_delta && lengths.mean() >= conv.ri_min_steps;
            }
        }
    }
    Ok(PhaseRun {
        report: PhaseReport {
            phase,
            trials: records.len(),
            steps: used,
            converged,
            metric,
        },
        trials: records,
    })
}

/// One high-level window driven by the frozen low level.
#[derive(Debug, Clone, PartialEq)]
pub struct HlTransition {
    pub start: CartPoleState<f64>,
    pub plan: PlanSignal<f64>,
    pub end: CartPoleState<f64>,
    /// Low-level steps actually taken (fewer than `n_ratio` when cut short).
    pub steps: usize,
    pub failure: Option<Failure>,
    /// External reinforcement summed over the window.
    pub accumulated_r: f64,
    /// External reinforcement at the window's last state.
    pub sampled_r: f64,
}

impl HlTransition {
    pub fn truncated(&self, n_ratio: usize) -> bool {
        self.steps < n_ratio
    }

    pub fn reward(&self, mode: HlReward) -> f64 {
        match mode {
            HlReward::Sampled => self.sampled_r,
            HlReward::Accumulated => self.accumulated_r,
        }
    }
}

/// Drive the frozen low level for up to `max_steps` (at most `n_ratio`)
/// steps under one plan, stopping early on failure.
pub fn hl_transition_collect(
    sys: &TwoLevel,
    cfg: &ExperimentConfig,
    start: CartPoleState<f64>,
    plan: PlanSignal<f64>,
    max_steps: usize,
) -> Result<HlTransition> {
    let n = max_steps.min(cfg.hierarchy.n_ratio);
    let mut s = start;
    let mut acc = 0.0;
    let mut r = 0.0;
    let mut failure = None;
    let mut steps = 0;
    while steps < n {
        let a = sys.ll_act(&s.normalized(&cfg.bounds), &plan)?;
        s = cartpole::step(&s, a, &cfg.physics);
        if !s.is_finite() {
            return Err(Error::NonFinite("plant state".into()));
        }
        steps += 1;
        r = cartpole::reinforcement(&s, &cfg.bounds, cfg.reinforcement);
        acc += r;
        failure = cartpole::failure(&s, &cfg.bounds);
        if failure.is_some() {
            break;
        }
    }
    Ok(HlTransition {
        start,
        plan,
        end: s,
        steps,
        failure,
        accumulated_r: acc,
        sampled_r: r,
    })
}

/// Phase III (indirect): identify the high-level model from random plans
/// executed by the frozen low level. Windows cut short by a failure are not
/// used for training.
pub fn run_hl_model_phase(sys: &mut TwoLevel, cfg: &ExperimentConfig, phase: PhaseId, streams: &mut Streams) -> Result<PhaseRun> {
    let budget = budget_for(cfg, PhaseKind::HlModel);
    let h = cfg.hierarchy;
    let mut window = Window::new(cfg.convergence.model_window);
    let mut records = Vec::new();
    let mut used = 0usize;
    let mut converged = false;
    while records.len() < budget.trials && used < budget.steps && !converged {
        let mut s = cartpole::random_initial_state(&mut streams.state, &cfg.bounds, cfg.init_fraction);
        let mut steps = 0usize;
        let reason = loop {
            let plan = draw_plan(&mut streams.plan, h.plan_dim, h.plan_range_hl_model, steps);
            let room = (budget.steps - used).min(cfg.success_steps - steps);
            let t = hl_transition_collect(sys, cfg, s, plan, room)?;
            steps += t.steps;
            used += t.steps;
            if !t.truncated(h.n_ratio) {
                let model = sys
                    .hl
                    .model
                    .as_mut()
                    .ok_or_else(|| Error::Config("high-level model phase needs an indirect agent".into()))?;
                let err = model.train_step(
                    &t.start.normalized(&cfg.bounds),
                    &t.plan.y,
                    &t.start.normalized_delta(&t.end, &cfg.bounds),
                )?;
                window.push(err);
                if window.is_full() && window.mean() < cfg.convergence.hl_model_tolerance {
                    converged = true;
                }
            }
            s = t.end;
            if let Some(f) = t.failure {
                break TerminalReason::from(f);
            }
            if steps >= cfg.success_steps {
                break TerminalReason::Success;
            }
            if used >= budget.steps || converged {
                break TerminalReason::Budget;
            }
        };
        records.push(TrialRecord {
            trial: records.len() + 1,
            steps,
            terminal_reason: reason,
            mean_delta_plan: None,
        });
    }
    Ok(PhaseRun {
        report: PhaseReport {
            phase,
            trials: records.len(),
            steps: used,
            converged,
            metric: window.mean(),
        },
        trials: records,
    })
}

/// Final phase: the high level learns to keep the system up and centered;
/// success is one trial of `success_steps` low-level steps.
pub fn run_hl_controller_phase(
    sys: &mut TwoLevel,
    cfg: &ExperimentConfig,
    phase: PhaseId,
    streams: &mut Streams,
) -> Result<PhaseRun> {
    let budget = budget_for(cfg, PhaseKind::HlController);
    let mut records = Vec::new();
    let mut used = 0usize;
    let mut success = false;
    while records.len() < budget.trials && !success {
        let mut s = cartpole::random_initial_state(&mut streams.state, &cfg.bounds, cfg.init_fraction);
        let mut steps = 0usize;
        let reason = loop {
            let obs = s.normalized(&cfg.bounds);
            let d = sys.hl.decide(&obs, &[], &mut streams.noise)?;
            let plan = PlanSignal::new(d.action.clone(), steps);
            let t = hl_transition_collect(sys, cfg, s, plan, cfg.success_steps - steps)?;
            steps += t.steps;
            used += t.steps;
            sys.hl.learn(&Transition {
                state: &obs,
                context: &[],
                decision: &d,
                reward: t.reward(cfg.hierarchy.hl_reward),
                next_state: &t.end.normalized(&cfg.bounds),
                next_context: &[],
                terminal: t.failure.is_some(),
            })?;
            s = t.end;
            if let Some(f) = t.failure {
                break TerminalReason::from(f);
            }
            if steps >= cfg.success_steps {
                success = true;
                break TerminalReason::Success;
            }
        };
        records.push(TrialRecord {
            trial: records.len() + 1,
            steps,
            terminal_reason: reason,
            mean_delta_plan: None,
        });
    }
    let last = records.last().map_or(0.0, |t| t.steps as f64);
    Ok(PhaseRun {
        report: PhaseReport {
            phase,
            trials: records.len(),
            steps: used,
            converged: success,
            metric: last,
        },
        trials: records,
    })
}

/// Freeze what a finished phase trained.
fn freeze_after(sys: &mut TwoLevel, kind: PhaseKind) {
    match kind {
        // the model is only trained inside its own phase
        PhaseKind::LlModel | PhaseKind::HlModel => {}
        PhaseKind::LlController => {
            sys.ll.frozen.action = true;
            sys.ll.frozen.critic = true;
        }
        PhaseKind::HlController => {
            sys.hl.frozen.action = true;
            sys.hl.frozen.critic = true;
        }
    }
}

pub fn run_phase(sys: &mut TwoLevel, cfg: &ExperimentConfig, phase: PhaseId, streams: &mut Streams) -> Result<PhaseRun> {
    let variant = cfg.architecture.variant();
    let kind = phase_kind(variant, phase)
        .ok_or_else(|| Error::Config(format!("phase {} does not exist for this architecture", phase.name())))?;
    let budget = budget_for(cfg, kind);
    if budget.trials == 0 || budget.steps == 0 {
        return Ok(PhaseRun {
            report: PhaseReport {
                phase,
                trials: 0,
                steps: 0,
                converged: false,
                metric: f64::NAN,
            },
            trials: Vec::new(),
        });
    }
    let run = match kind {
        PhaseKind::LlModel => run_ll_model_phase(sys, cfg, phase, streams)?,
        PhaseKind::LlController => run_ll_controller_phase(sys, cfg, phase, streams)?,
        PhaseKind::HlModel => run_hl_model_phase(sys, cfg, phase, streams)?,
        PhaseKind::HlController => run_hl_controller_phase(sys, cfg, phase, streams)?,
    };
    freeze_after(sys, kind);
    Ok(run)
}

/// Everything a two-level run produced.
#[derive(Debug, Clone)]
pub struct TwoLevelRun {
    pub system: TwoLevel,
    pub phases: Vec<PhaseRun>,
    /// First phase that ran out of budget without converging.
    pub failed_phase: Option<PhaseId>,
    pub fault: Option<String>,
}

/// Run phases in order through `last` (or all of them). A phase that does
/// not converge ends the run, except the last requested one.
pub fn run_phases(cfg: &ExperimentConfig, seed: u64, last: Option<PhaseId>) -> Result<TwoLevelRun> {
    let mut streams = Streams::new(seed);
    let mut system = TwoLevel::new(cfg, &mut streams.init)?;
    let seq = phase_sequence(cfg.architecture.variant());
    let last = last.unwrap_or(*seq.last().unwrap_or(&PhaseId::I));
    if !seq.contains(&last) {
        return Err(Error::Config(format!("phase {} does not exist for this architecture", last.name())));
    }
    let mut phases = Vec::new();
    let mut failed_phase = None;
    let mut fault = None;
    for &p in seq.iter().take_while(|&&p| p <= last) {
        match run_phase(&mut system, cfg, p, &mut streams) {
            Ok(run) => {
                let ok = run.report.converged;
                phases.push(run);
                if !ok {
                    failed_phase = Some(p);
                    break;
                }
            }
            Err(e) if e.is_numeric_fault() => {
                fault = Some(e.to_string());
                failed_phase = Some(p);
                break;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(TwoLevelRun {
        system,
        phases,
        failed_phase,
        fault,
    })
}

/// Outcome of a two-level run, scored on `last` (the final phase by default).
///
/// The scored phase's trials are reported only when it actually ran; a run
/// stopped by an earlier phase reports no trials.
pub fn outcome_of(run: &TwoLevelRun, seed: u64, last: Option<PhaseId>, cfg: &ExperimentConfig) -> ExperimentOutcome {
    let seq = phase_sequence(cfg.architecture.variant());
    let scored = last.unwrap_or(*seq.last().unwrap_or(&PhaseId::I));
    let trials = run
        .phases
        .iter()
        .find(|p| p.report.phase == scored)
        .map(|p| p.trials.clone())
        .unwrap_or_default();
    ExperimentOutcome {
        seed,
        trials,
        phases: run.phases.iter().map(|p| p.report.clone()).collect(),
        fault: run.fault.clone(),
    }
}

pub fn run_two_level(cfg: &ExperimentConfig, seed: u64) -> Result<ExperimentOutcome> {
    let run = run_phases(cfg, seed, None)?;
    Ok(outcome_of(&run, seed, None, cfg))
}

/// Mean `|theta - Y|` (radians) over the last half of a run of the frozen
/// low level holding one plan from a near-center start. Failure bounds are
/// not applied.
pub fn tracking_error(sys: &TwoLevel, cfg: &ExperimentConfig, start: CartPoleState<f64>, plan: &PlanSignal<f64>, steps: usize) -> Result<f64> {
    let mut s = start;
    let (mut sum, mut n) = (0.0, 0usize);
    for k in 0..steps {
        let a = sys.ll_act(&s.normalized(&cfg.bounds), plan)?;
        s = cartpole::step(&s, a, &cfg.physics);
        if !s.is_finite() {
            return Err(Error::NonFinite("plant state".into()));
        }
        if k >= steps / 2 {
            sum += (s.theta - plan.y[0]).abs();
            n += 1;
        }
    }
    Ok(sum / n.max(1) as f64)
}

/// Tracking error averaged over `n_plans` random plans in the low-level
/// training range.
pub fn tracking_evaluation<R: RngCore + ?Sized>(
    sys: &TwoLevel,
    cfg: &ExperimentConfig,
    n_plans: usize,
    steps: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let h = &cfg.hierarchy;
    (0..n_plans)
        .map(|_| {
            let plan = draw_plan(rng, h.plan_dim, h.plan_range_ll, 0);
            let start = cartpole::random_initial_state(rng, &cfg.bounds, 0.1);
            tracking_error(sys, cfg, start, &plan, steps)
        })
        .collect()
}
