//! Experiment configuration and its flat `key = value` text format.
//!
//! Lines are `key = value`; `#` starts a comment; blank lines are ignored.
//! Omitted keys keep their defaults; unknown keys are rejected.

use std::collections::HashSet;

use crate::agent::{BacVariant, NoiseParams, RewardSign, TdParams, TerminalMode};
use crate::cartpole::{Bounds, PhysicsParams, ReinforcementMode};
use crate::error::{Error, Result};
use crate::ffnet::DEFAULT_HIDDEN;
use crate::hierarchy::{HierarchyConfig, HlReward, LlMode};
use crate::induction::{InductionRule, InductionSource};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Architecture {
    SingleIndirect,
    SingleDirect,
    TwoLevelIndirect,
    TwoLevelDirect,
}

impl Architecture {
    pub fn name(self) -> &'static str {
        match self {
            Architecture::SingleIndirect => "single_indirect",
            Architecture::SingleDirect => "single_direct",
            Architecture::TwoLevelIndirect => "two_level_indirect",
            Architecture::TwoLevelDirect => "two_level_direct",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [
            Architecture::SingleIndirect,
            Architecture::SingleDirect,
            Architecture::TwoLevelIndirect,
            Architecture::TwoLevelDirect,
        ]
        .into_iter()
        .find(|a| a.name() == s)
    }

    pub fn variant(self) -> BacVariant {
        match self {
            Architecture::SingleIndirect | Architecture::TwoLevelIndirect => BacVariant::Indirect,
            Architecture::SingleDirect | Architecture::TwoLevelDirect => BacVariant::Direct,
        }
    }

    pub fn is_two_level(self) -> bool {
        matches!(self, Architecture::TwoLevelIndirect | Architecture::TwoLevelDirect)
    }

    /// Default trial cap of the final learning phase.
    pub fn default_trial_limit(self) -> usize {
        match self.variant() {
            BacVariant::Indirect => 1200,
            BacVariant::Direct => 3000,
        }
    }
}

/// Caps on one training phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PhaseBudget {
    pub trials: usize,
    pub steps: usize,
}

/// Budgets for the phases that precede the final controller phase.
///
/// Defaults are twice the typical counts reported for the explicit-role
/// two-level controller.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PhaseBudgets {
    /// Indirect: low-level model. Direct: low-level action and critic.
    pub phase1: PhaseBudget,
    /// Indirect: low-level action and critic.
    pub phase2: PhaseBudget,
    /// Indirect: high-level model.
    pub phase3: PhaseBudget,
}

impl PhaseBudgets {
    pub fn defaults(variant: BacVariant) -> Self {
        match variant {
            BacVariant::Indirect => Self {
                phase1: PhaseBudget {
                    trials: 1600,
                    steps: 20_000,
                },
                phase2: PhaseBudget {
                    trials: 1800,
                    steps: 260_000,
                },
                phase3: PhaseBudget {
                    trials: 800,
                    steps: 300_000,
                },
            },
            BacVariant::Direct => Self {
                phase1: PhaseBudget {
                    trials: 3200,
                    steps: 1_300_000,
                },
                phase2: PhaseBudget { trials: 0, steps: 0 },
                phase3: PhaseBudget { trials: 0, steps: 0 },
            },
        }
    }
}

/// Phase completion tests.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Convergence {
    /// Steps in the sliding window of model prediction errors.
    pub model_window: usize,
    /// Windowed mean absolute normalized prediction error that counts as
    /// identified.
    pub model_tolerance: f64,
    /// Trials in the low-level tracking window.
    pub tracking_trials: usize,
    /// Windowed mean error of the high-level model over its `n_ratio`-step
    /// predictions.
    pub hl_model_tolerance: f64,
    /// Mean `|theta - Y|` over the window, in degrees.
    pub tracking_tolerance_deg: f64,
    /// Response induction: windowed mean `|δ|` required.
    pub ri_min_delta: f64,
    /// Response induction: windowed mean trial length required.
    pub ri_min_steps: f64,
}

impl Default for Convergence {
    fn default() -> Self {
        Self {
            model_window: 1000,
            model_tolerance: 0.01,
            hl_model_tolerance: 0.05,
            tracking_trials: 50,
            tracking_tolerance_deg: 2.0,
            ri_min_delta: 0.175,
            ri_min_steps: 500.0,
        }
    }
}

/// Response-induction settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiSettings {
    pub k1: f64,
    pub k2: f64,
    pub rule: InductionRule,
    pub source: InductionSource,
}

impl Default for RiSettings {
    fn default() -> Self {
        Self {
            k1: 0.35,
            k2: 0.14,
            rule: InductionRule::Printed,
            source: InductionSource::Critic,
        }
    }
}

/// Full description of one experiment; together with a seed it determines
/// the run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub architecture: Architecture,
    pub servo_rate_hz: f64,
    pub ll_mode: LlMode,
    pub seeds: Vec<u64>,
    pub trial_limit: usize,
    pub success_steps: usize,
    pub init_fraction: f64,
    pub physics: PhysicsParams<f64>,
    pub bounds: Bounds<f64>,
    pub reinforcement: ReinforcementMode,
    /// `None` picks the sign from the reinforcement mode.
    pub reward_sign: Option<RewardSign>,
    /// Multiplier on the external reinforcement before learning.
    pub reward_scale: f64,
    pub terminal: TerminalMode,
    pub td: TdParams<f64>,
    pub noise: NoiseParams<f64>,
    pub n_hidden: usize,
    pub init_scale: f64,
    pub model_lr: f64,
    pub k_m: f64,
    /// Random-action steps used to identify the single-level model.
    pub model_steps: usize,
    pub hierarchy: HierarchyConfig,
    pub ri: RiSettings,
    pub budgets: PhaseBudgets,
    pub convergence: Convergence,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::for_architecture(Architecture::SingleIndirect)
    }
}

impl ExperimentConfig {
    pub fn for_architecture(architecture: Architecture) -> Self {
        let servo_rate_hz = 50.0;
        Self {
            architecture,
            servo_rate_hz,
            ll_mode: LlMode::ExplicitRole,
            seeds: (1..=30).collect(),
            trial_limit: architecture.default_trial_limit(),
            success_steps: 20_000,
            init_fraction: 1.0,
            physics: PhysicsParams::default().with_servo_rate(servo_rate_hz),
            bounds: Bounds::default(),
            reinforcement: ReinforcementMode::DistanceCost,
            reward_sign: None,
            reward_scale: 0.2,
            terminal: TerminalMode::Absorbing,
            td: TdParams::default(),
            noise: NoiseParams::default(),
            n_hidden: DEFAULT_HIDDEN,
            init_scale: 0.3,
            model_lr: 0.1,
            k_m: 1.0,
            model_steps: 1000,
            hierarchy: HierarchyConfig::default(),
            ri: RiSettings::default(),
            budgets: PhaseBudgets::defaults(architecture.variant()),
            convergence: Convergence::default(),
        }
    }

    /// Reward sign in effect.
    pub fn effective_reward_sign(&self) -> RewardSign {
        self.reward_sign.unwrap_or(match self.reinforcement {
            ReinforcementMode::DistanceCost => RewardSign::Negative,
            ReinforcementMode::FailureDriven => RewardSign::Positive,
        })
    }

    pub fn dt(&self) -> f64 {
        self.physics.dt
    }

    pub fn set_servo_rate(&mut self, hz: f64) {
        self.servo_rate_hz = hz;
        self.physics = self.physics.with_servo_rate(hz);
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.servo_rate_hz > 0.0) || !self.servo_rate_hz.is_finite() {
            return Err(Error::Config("servo_rate_hz must be > 0".into()));
        }
        if self.trial_limit == 0 {
            return Err(Error::Config("trial_limit must be >= 1".into()));
        }
        if self.success_steps == 0 {
            return Err(Error::Config("success_steps must be >= 1".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("at least one seed is required".into()));
        }
        if !(0.0..=1.0).contains(&self.init_fraction) {
            return Err(Error::Config("init_fraction must be in [0, 1]".into()));
        }
        if !(self.noise.sigma >= 0.0) {
            return Err(Error::Config("noise_sigma must be >= 0".into()));
        }
        if self.hierarchy.n_ratio < 2 {
            return Err(Error::Config("n_ratio must be >= 2".into()));
        }
        if !(self.ri.k1 > 0.0 && self.ri.k2 > 0.0) {
            return Err(Error::Config("ri_k1 and ri_k2 must be > 0".into()));
        }
        if !(self.td.momentum >= 0.0 && self.td.momentum < 1.0) {
            return Err(Error::Config("momentum must be in [0, 1)".into()));
        }
        for (name, v) in [
            ("critic_lr", self.td.critic_lr),
            ("action_lr", self.td.action_lr),
            ("model_lr", self.model_lr),
        ] {
            if !(v > 0.0) {
                return Err(Error::Config(format!("{name} must be > 0")));
            }
        }
        self.td.validate()?;
        if !(self.hierarchy.hl_gamma > 0.0 && self.hierarchy.hl_gamma < 1.0) {
            return Err(Error::Config("hl_gamma must be in (0, 1)".into()));
        }
        self.physics.validate()?;
        self.bounds.validate()
    }

    /// Apply a named override profile.
    pub fn apply_profile(&mut self, profile: Profile) {
        match profile {
            Profile::Desk => {
                self.success_steps = 5_000;
                self.trial_limit = 400;
                self.seeds = (1..=10).collect();
            }
            Profile::Paper => {
                self.success_steps = 20_000;
                self.trial_limit = self.architecture.default_trial_limit();
                let n = if self.architecture.is_two_level() {
                    if self.ll_mode == LlMode::ResponseInduction {
                        15
                    } else {
                        10
                    }
                } else {
                    30
                };
                self.seeds = (1..=n).collect();
                self.budgets = PhaseBudgets::defaults(self.architecture.variant());
            }
        }
    }

    /// Parse the flat text format on top of defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let entries = parse_entries(text)?;
        let arch = match entries.iter().find(|e| e.key == "architecture") {
            Some(e) => Architecture::parse(&e.value).ok_or_else(|| e.err("unknown architecture"))?,
            None => Architecture::SingleIndirect,
        };
        let mut cfg = Self::for_architecture(arch);
        let mut hl_gamma_set = false;
        for e in &entries {
            cfg.set(e, &mut hl_gamma_set)?;
        }
        if !hl_gamma_set {
            cfg.hierarchy.hl_gamma = cfg.td.gamma;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn set(&mut self, e: &Entry, hl_gamma_set: &mut bool) -> Result<()> {
        match e.key.as_str() {
            "architecture" => {}
            "servo_rate_hz" => {
                let hz = e.positive()?;
                self.set_servo_rate(hz);
            }
            "ll_mode" => {
                self.ll_mode = LlMode::parse(&e.value).ok_or_else(|| e.err("expected `explicit` or `ri`"))?
            }
            "seeds" => self.seeds = parse_seeds(&e.value).map_err(|m| e.err(&m))?,
            "trial_limit" => self.trial_limit = e.count_min1()?,
            "success_steps" => self.success_steps = e.count_min1()?,
            "init_fraction" => self.init_fraction = e.fraction()?,
            "mass_cart" => self.physics.mass_cart = e.positive()?,
            "mass_pole" => self.physics.mass_pole = e.positive()?,
            "pole_length" => self.physics.pole_length = e.positive()?,
            "gravity" => self.physics.gravity = e.positive()?,
            "force_scale" => self.physics.force_scale = e.positive()?,
            "x_range" => self.bounds.x_range = e.positive()?,
            "theta_range_deg" => self.bounds.theta_range = e.positive()?.to_radians(),
            "theta_range_rad" => self.bounds.theta_range = e.positive()?,
            "reinforcement" => {
                self.reinforcement = match e.value.as_str() {
                    "distance" => ReinforcementMode::DistanceCost,
                    "failure" => ReinforcementMode::FailureDriven,
                    _ => return Err(e.err("expected `distance` or `failure`")),
                }
            }
            "reward_sign" => {
                self.reward_sign = match e.value.as_str() {
                    "auto" => None,
                    "1" | "+1" => Some(RewardSign::Positive),
                    "-1" => Some(RewardSign::Negative),
                    _ => return Err(e.err("expected `auto`, `+1` or `-1`")),
                }
            }
            "reward_scale" => self.reward_scale = e.positive()?,
            "terminal" => {
                self.terminal = match e.value.as_str() {
                    "absorbing" => TerminalMode::Absorbing,
                    "zero" => TerminalMode::Zero,
                    _ => return Err(e.err("expected `absorbing` or `zero`")),
                }
            }
            "gamma" => self.td.gamma = e.open_unit()?,
            "hl_gamma" => {
                self.hierarchy.hl_gamma = e.open_unit()?;
                *hl_gamma_set = true;
            }
            "critic_lr" => self.td.critic_lr = e.positive()?,
            "action_lr" => self.td.action_lr = e.positive()?,
            "model_lr" => self.model_lr = e.positive()?,
            "momentum" => {
                let m = e.float()?;
                if !(0.0..1.0).contains(&m) {
                    return Err(e.err("must be in [0, 1)"));
                }
                self.td.momentum = m;
            }
            "k_m" => self.k_m = e.positive()?,
            "noise_sigma" => self.noise.sigma = e.non_negative()?,
            "n_hidden" => self.n_hidden = e.count_min1()?,
            "init_scale" => self.init_scale = e.positive()?,
            "model_steps" => self.model_steps = e.count()?,
            "n_ratio" => {
                let n = e.count()?;
                if n < 2 {
                    return Err(e.err("must be >= 2"));
                }
                self.hierarchy.n_ratio = n;
            }
            "plan_range_ll" => self.hierarchy.plan_range_ll = e.positive()?,
            "plan_range_hl_model" => self.hierarchy.plan_range_hl_model = e.positive()?,
            "hl_reward" => {
                self.hierarchy.hl_reward = match e.value.as_str() {
                    "sampled" => HlReward::Sampled,
                    "accumulated" => HlReward::Accumulated,
                    _ => return Err(e.err("expected `sampled` or `accumulated`")),
                }
            }
            "ll_critic_sees_plan" => {
                self.hierarchy.ll_critic_sees_plan = e.boolean()?;
            }
            "ll_theta_range_deg" => self.hierarchy.ll_theta_range = e.positive()?.to_radians(),
            "ll_theta_range_rad" => self.hierarchy.ll_theta_range = e.positive()?,
            "ll_reward_scale" => self.hierarchy.ll_reward_scale = e.positive()?,
            "ri_k1" => self.ri.k1 = e.positive()?,
            "ri_k2" => self.ri.k2 = e.positive()?,
            "ri_rule" => {
                self.ri.rule = match e.value.as_str() {
                    "printed" => InductionRule::Printed,
                    "analytic" => InductionRule::Analytic,
                    _ => return Err(e.err("expected `printed` or `analytic`")),
                }
            }
            "ri_source" => {
                self.ri.source = match e.value.as_str() {
                    "critic" => InductionSource::Critic,
                    "action" => InductionSource::ActionOutput,
                    _ => return Err(e.err("expected `critic` or `action`")),
                }
            }
            "phase1_trials" => self.budgets.phase1.trials = e.count()?,
            "phase1_steps" => self.budgets.phase1.steps = e.count()?,
            "phase2_trials" => self.budgets.phase2.trials = e.count()?,
            "phase2_steps" => self.budgets.phase2.steps = e.count()?,
            "phase3_trials" => self.budgets.phase3.trials = e.count()?,
            "phase3_steps" => self.budgets.phase3.steps = e.count()?,
            "model_window" => self.convergence.model_window = e.count_min1()?,
            "model_tolerance" => self.convergence.model_tolerance = e.positive()?,
            "hl_model_tolerance" => self.convergence.hl_model_tolerance = e.positive()?,
            "tracking_trials" => self.convergence.tracking_trials = e.count_min1()?,
            "tracking_tolerance_deg" => self.convergence.tracking_tolerance_deg = e.positive()?,
            "ri_min_delta" => self.convergence.ri_min_delta = e.non_negative()?,
            "ri_min_steps" => self.convergence.ri_min_steps = e.non_negative()?,
            _ => return Err(e.err("unknown key")),
        }
        Ok(())
    }
}

/// Named override sets selectable from the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    /// Reduced success criterion, trial cap and seed count.
    Desk,
    /// Full-size protocol.
    Paper,
}

impl std::str::FromStr for Profile {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "desk" => Ok(Profile::Desk),
            "paper" => Ok(Profile::Paper),
            _ => Err(format!("unknown profile `{s}` (expected desk or paper)")),
        }
    }
}

pub fn parse_seeds(s: &str) -> std::result::Result<Vec<u64>, String> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((a, b)) = part.split_once("..") {
            let a: u64 = a.trim().parse().map_err(|_| format!("bad seed range `{part}`"))?;
            let b: u64 = b.trim().trim_start_matches('=').parse().map_err(|_| format!("bad seed range `{part}`"))?;
            if b < a {
                return Err(format!("empty seed range `{part}`"));
            }
            out.extend(a..=b);
        } else {
            out.push(part.parse().map_err(|_| format!("bad seed `{part}`"))?);
        }
    }
    if out.is_empty() {
        return Err("no seeds given".into());
    }
    Ok(out)
}

struct Entry {
    key: String,
    value: String,
    line: usize,
}

impl Entry {
    fn err(&self, msg: &str) -> Error {
        Error::Parse {
            key: self.key.clone(),
            line: self.line,
            msg: format!("{msg} (got `{}`)", self.value),
        }
    }

    fn float(&self) -> Result<f64> {
        match self.value.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(self.err("expected a finite number")),
        }
    }

    fn positive(&self) -> Result<f64> {
        let v = self.float()?;
        if v > 0.0 {
            Ok(v)
        } else {
            Err(self.err("must be > 0"))
        }
    }

    fn non_negative(&self) -> Result<f64> {
        let v = self.float()?;
        if v >= 0.0 {
            Ok(v)
        } else {
            Err(self.err("must be >= 0"))
        }
    }

    fn fraction(&self) -> Result<f64> {
        let v = self.float()?;
        if (0.0..=1.0).contains(&v) {
            Ok(v)
        } else {
            Err(self.err("must be in [0, 1]"))
        }
    }

    fn open_unit(&self) -> Result<f64> {
        let v = self.float()?;
        if v > 0.0 && v < 1.0 {
            Ok(v)
        } else {
            Err(self.err("must be in (0, 1)"))
        }
    }

    fn count(&self) -> Result<usize> {
        self.value
            .replace('_', "")
            .parse::<usize>()
            .map_err(|_| self.err("expected a non-negative integer"))
    }

    fn count_min1(&self) -> Result<usize> {
        match self.count()? {
            0 => Err(self.err("must be >= 1")),
            n => Ok(n),
        }
    }

    fn boolean(&self) -> Result<bool> {
        match self.value.as_str() {
            "true" | "yes" | "1" => Ok(true),
            "false" | "no" | "0" => Ok(false),
            _ => Err(self.err("expected true or false")),
        }
    }
}

fn parse_entries(text: &str) -> Result<Vec<Entry>> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((k, v)) = content.split_once('=') else {
            return Err(Error::Parse {
                key: content.to_string(),
                line,
                msg: "expected `key = value`".into(),
            });
        };
        let key = k.trim().to_string();
        if !seen.insert(key.clone()) {
            return Err(Error::Parse {
                key,
                line,
                msg: "duplicate key".into(),
            });
        }
        out.push(Entry {
            key,
            value: v.trim().to_string(),
            line,
        });
    }
    Ok(out)
}

/// Render a config back into the text format (every key, explicit values).
pub fn render(cfg: &ExperimentConfig) -> String {
    let seeds: Vec<String> = cfg.seeds.iter().map(u64::to_string).collect();
    let sign = match cfg.reward_sign {
        None => "auto",
        Some(RewardSign::Positive) => "+1",
        Some(RewardSign::Negative) => "-1",
    };
    let h = &cfg.hierarchy;
    let b = &cfg.budgets;
    let c = &cfg.convergence;
    let mut s = String::new();
    let mut kv = |k: &str, v: String| {
        s.push_str(k);
        s.push_str(" = ");
        s.push_str(&v);
        s.push('\n');
    };
    kv("architecture", cfg.architecture.name().into());
    kv("servo_rate_hz", cfg.servo_rate_hz.to_string());
    kv("ll_mode", cfg.ll_mode.name().into());
    kv("seeds", seeds.join(","));
    kv("trial_limit", cfg.trial_limit.to_string());
    kv("success_steps", cfg.success_steps.to_string());
    kv("init_fraction", cfg.init_fraction.to_string());
    kv("mass_cart", cfg.physics.mass_cart.to_string());
    kv("mass_pole", cfg.physics.mass_pole.to_string());
    kv("pole_length", cfg.physics.pole_length.to_string());
    kv("gravity", cfg.physics.gravity.to_string());
    kv("force_scale", cfg.physics.force_scale.to_string());
    kv("x_range", cfg.bounds.x_range.to_string());
    // radians, so that rendering and parsing back is exact
    kv("theta_range_rad", cfg.bounds.theta_range.to_string());
    kv(
        "reinforcement",
        match cfg.reinforcement {
            ReinforcementMode::DistanceCost => "distance",
            ReinforcementMode::FailureDriven => "failure",
        }
        .into(),
    );
    kv("reward_sign", sign.into());
    kv("reward_scale", cfg.reward_scale.to_string());
    kv(
        "terminal",
        match cfg.terminal {
            TerminalMode::Absorbing => "absorbing",
            TerminalMode::Zero => "zero",
        }
        .into(),
    );
    kv("gamma", cfg.td.gamma.to_string());
    kv("hl_gamma", h.hl_gamma.to_string());
    kv("critic_lr", cfg.td.critic_lr.to_string());
    kv("action_lr", cfg.td.action_lr.to_string());
    kv("model_lr", cfg.model_lr.to_string());
    kv("momentum", cfg.td.momentum.to_string());
    kv("k_m", cfg.k_m.to_string());
    kv("noise_sigma", cfg.noise.sigma.to_string());
    kv("n_hidden", cfg.n_hidden.to_string());
    kv("init_scale", cfg.init_scale.to_string());
    kv("model_steps", cfg.model_steps.to_string());
    kv("n_ratio", h.n_ratio.to_string());
    kv("plan_range_ll", h.plan_range_ll.to_string());
    kv("plan_range_hl_model", h.plan_range_hl_model.to_string());
    kv(
        "hl_reward",
        match h.hl_reward {
            HlReward::Sampled => "sampled",
            HlReward::Accumulated => "accumulated",
        }
        .into(),
    );
    kv("ll_critic_sees_plan", h.ll_critic_sees_plan.to_string());
    kv("ll_theta_range_rad", h.ll_theta_range.to_string());
    kv("ll_reward_scale", h.ll_reward_scale.to_string());
    kv("ri_k1", cfg.ri.k1.to_string());
    kv("ri_k2", cfg.ri.k2.to_string());
    kv(
        "ri_rule",
        match cfg.ri.rule {
            InductionRule::Printed => "printed",
            InductionRule::Analytic => "analytic",
        }
        .into(),
    );
    kv(
        "ri_source",
        match cfg.ri.source {
            InductionSource::Critic => "critic",
            InductionSource::ActionOutput => "action",
        }
        .into(),
    );
    kv("phase1_trials", b.phase1.trials.to_string());
    kv("phase1_steps", b.phase1.steps.to_string());
    kv("phase2_trials", b.phase2.trials.to_string());
    kv("phase2_steps", b.phase2.steps.to_string());
    kv("phase3_trials", b.phase3.trials.to_string());
    kv("phase3_steps", b.phase3.steps.to_string());
    kv("model_window", c.model_window.to_string());
    kv("model_tolerance", c.model_tolerance.to_string());
    kv("hl_model_tolerance", c.hl_model_tolerance.to_string());
    kv("tracking_trials", c.tracking_trials.to_string());
    kv("tracking_tolerance_deg", c.tracking_tolerance_deg.to_string());
    kv("ri_min_delta", c.ri_min_delta.to_string());
    kv("ri_min_steps", c.ri_min_steps.to_string());
    s
}
