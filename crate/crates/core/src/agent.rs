//! Single-level backpropagated adaptive critic.
//!
//! An agent owns an action network, a critic trained by TD(0) and, for the
//! indirect variant, a model network predicting the (normalized) change of
//! state. The action network ascends the critic's estimate of the next
//! state's value, with the gradient chained through the model (indirect) or
//! read straight off a critic that also sees the action (direct).
//!
//! Inputs are split into a `state` part, which the model predicts, and a
//! `context` part (the plan in a two-level controller) that is passed to the
//! action and critic networks unchanged.

use rand::RngCore;

use crate::error::{Error, Result};
use crate::ffnet::{apply_update, Direction, ForwardCache, NetworkConfig, NetworkWeights, TrainingHyper};
use crate::induction::{self, RiParams};
use crate::rng;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BacVariant {
    /// Critic sees the state; action gradients pass through a model network.
    Indirect,
    /// Critic sees state and action; no model network.
    Direct,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TdParams<T> {
    pub gamma: T,
    pub critic_lr: T,
    pub action_lr: T,
    pub momentum: T,
}

impl<T: Scalar> Default for TdParams<T> {
    fn default() -> Self {
        Self {
            gamma: T::lit(0.85),
            critic_lr: T::lit(0.02),
            action_lr: T::lit(0.01),
            momentum: T::lit(0.7),
        }
    }
}

impl<T: Scalar> TdParams<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > T::zero() && self.gamma < T::one()) {
            return Err(Error::Config(format!("gamma must be in (0, 1), got {}", self.gamma)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseParams<T> {
    pub sigma: T,
}

impl<T: Scalar> Default for NoiseParams<T> {
    fn default() -> Self {
        Self { sigma: T::lit(0.05) }
    }
}

/// Sign applied to the raw reinforcement before any learning uses it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RewardSign {
    Positive,
    Negative,
}

impl RewardSign {
    pub fn apply<T: Scalar>(self, r: T) -> T {
        match self {
            RewardSign::Positive => r,
            RewardSign::Negative => -r,
        }
    }

    pub fn as_i8(self) -> i8 {
        match self {
            RewardSign::Positive => 1,
            RewardSign::Negative => -1,
        }
    }
}

/// Value assigned to the state after a failure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TerminalMode {
    /// The failed state repeats its reinforcement forever: `r / (1 - gamma)`.
    Absorbing,
    /// No bootstrap past a failure.
    Zero,
}

/// `r_{t+1} + gamma p_{t+1} - p_t`
#[inline]
pub fn td_error<T: Scalar>(r_next: T, p_next: T, p_now: T, gamma: T) -> T {
    r_next + gamma * p_next - p_now
}

/// A network with its optimizer state.
#[derive(Debug, Clone, PartialEq)]
pub struct Learner<T> {
    pub net: NetworkWeights<T>,
    pub hyper: TrainingHyper<T>,
}

impl<T: Scalar> Learner<T> {
    pub fn new<R: RngCore + ?Sized>(
        config: NetworkConfig,
        learning_rate: T,
        momentum: T,
        init_scale: T,
        rng: &mut R,
    ) -> Result<Self> {
        Ok(Self {
            net: NetworkWeights::random(config, init_scale, rng),
            hyper: TrainingHyper::new(learning_rate, momentum, config)?,
        })
    }
}

/// One TD(0) step on the critic: `w += lr * td * grad p_t` plus momentum.
pub fn train_critic_step<T: Scalar>(critic: &mut Learner<T>, cache_now: &ForwardCache<T>, td_err: T) -> Result<()> {
    if !td_err.is_finite() {
        return Err(Error::NonFinite(format!("td error {td_err}")));
    }
    let grad = critic.net.backprop_weight_grad(cache_now, &[td_err])?;
    apply_update(&mut critic.net, &grad, &mut critic.hyper, Direction::Ascend)
}

/// Model network trained to predict the normalized change of state.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelTrainer<T> {
    pub learner: Learner<T>,
    /// Scale applied to the prediction error.
    pub k_m: T,
    pub state_dim: usize,
    pub action_dim: usize,
}

impl<T: Scalar> ModelTrainer<T> {
    pub fn new(learner: Learner<T>, k_m: T, state_dim: usize, action_dim: usize) -> Result<Self> {
        let c = learner.net.config();
        if c.n_in != state_dim + action_dim {
            return Err(Error::dim("model inputs", state_dim + action_dim, c.n_in));
        }
        if c.n_out != state_dim {
            return Err(Error::dim("model outputs", state_dim, c.n_out));
        }
        Ok(Self {
            learner,
            k_m,
            state_dim,
            action_dim,
        })
    }

    pub fn net(&self) -> &NetworkWeights<T> {
        &self.learner.net
    }

    pub fn predict(&self, state: &[T], action: &[T]) -> Result<ForwardCache<T>> {
        self.learner.net.forward(&concat(state, action))
    }

    /// Mean absolute prediction error over the state components.
    pub fn error(&self, state: &[T], action: &[T], observed_delta: &[T]) -> Result<T> {
        let out = self.predict(state, action)?.output;
        Ok(mean_abs_diff(&out, observed_delta))
    }

    /// One step on `k_m/2 |delta - delta_pred|^2`. Returns the mean absolute
    /// error measured before the update.
    pub fn train_step(&mut self, state: &[T], action: &[T], observed_delta: &[T]) -> Result<T> {
        if observed_delta.len() != self.state_dim {
            return Err(Error::dim("observed delta", self.state_dim, observed_delta.len()));
        }
        let cache = self.predict(state, action)?;
        let err: Vec<T> = observed_delta
            .iter()
            .zip(&cache.output)
            .map(|(d, p)| self.k_m * (*d - *p))
            .collect();
        let grad = self.learner.net.backprop_weight_grad(&cache, &err)?;
        apply_update(&mut self.learner.net, &grad, &mut self.learner.hyper, Direction::Ascend)?;
        Ok(mean_abs_diff(&cache.output, observed_delta))
    }
}

/// Action actually applied, plus the noise-free forward pass used for learning.
#[derive(Debug, Clone, PartialEq)]
pub struct Decision<T> {
    pub action: Vec<T>,
    pub clean: ForwardCache<T>,
}

impl<T: Scalar> Decision<T> {
    pub fn clean_action(&self) -> &[T] {
        &self.clean.output
    }
}

/// Clean forward pass plus independent `N(0, sigma^2)` noise per output.
pub fn select_action<T: Scalar, R: RngCore + ?Sized>(
    action_net: &NetworkWeights<T>,
    input: &[T],
    noise: &NoiseParams<T>,
    rng: &mut R,
) -> Result<Decision<T>> {
    let clean = action_net.forward(input)?;
    let action = clean
        .output
        .iter()
        .map(|&y| {
            if noise.sigma > T::zero() {
                y + noise.sigma * rng::gaussian::<T, R>(rng)
            } else {
                y
            }
        })
        .collect();
    Ok(Decision { action, clean })
}

/// `∂p_{t+1}/∂y` through model and critic, evaluated at the clean action.
///
/// The critic is evaluated at `state + model(state, y)` followed by
/// `context`. Since the next state is the current state plus the predicted
/// change, the critic's state gradient is also its gradient with respect to
/// the model output.
pub fn action_gradient_indirect<T: Scalar>(
    critic: &NetworkWeights<T>,
    model: &NetworkWeights<T>,
    state: &[T],
    context: &[T],
    clean_action: &[T],
) -> Result<Vec<T>> {
    let sd = state.len();
    let mcache = model.forward(&concat(state, clean_action))?;
    if mcache.output.len() != sd {
        return Err(Error::dim("model output", sd, mcache.output.len()));
    }
    let next: Vec<T> = state.iter().zip(&mcache.output).map(|(s, d)| *s + *d).collect();
    let ccache = critic.forward(&concat(&next, context))?;
    let dp_dnext = critic.backprop_input_grad(&ccache, &[T::one()])?;
    let dp_dinput = model.backprop_input_grad(&mcache, &dp_dnext[..sd])?;
    Ok(dp_dinput[sd..].to_vec())
}

/// `∂p/∂y` for a critic whose input is `[state, context, action]`.
pub fn action_gradient_direct<T: Scalar>(
    critic: &NetworkWeights<T>,
    state: &[T],
    context: &[T],
    clean_action: &[T],
) -> Result<Vec<T>> {
    let input = [state, context, clean_action].concat();
    let cache = critic.forward(&input)?;
    let g = critic.backprop_input_grad(&cache, &[T::one()])?;
    Ok(g[state.len() + context.len()..].to_vec())
}

/// Ascend `p` along the action network's weights.
pub fn train_action_step<T: Scalar>(
    action: &mut Learner<T>,
    clean_cache: &ForwardCache<T>,
    action_grad: &[T],
) -> Result<()> {
    let grad = action.net.backprop_weight_grad(clean_cache, action_grad)?;
    apply_update(&mut action.net, &grad, &mut action.hyper, Direction::Ascend)
}

/// How the action network is updated.
#[derive(Debug, Clone, PartialEq)]
pub enum ActionRule<T> {
    Standard,
    /// Response induction on the hidden-to-plan-input connections.
    Induction(RiParams<T>),
}

/// Which networks are still learning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Frozen {
    pub critic: bool,
    pub action: bool,
}

/// Sizes of an agent's input and output blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AgentShape {
    pub state_dim: usize,
    pub context_dim: usize,
    pub action_dim: usize,
    pub n_hidden: usize,
}

impl AgentShape {
    pub fn action_net(&self) -> Result<NetworkConfig> {
        NetworkConfig::new(self.state_dim + self.context_dim, self.n_hidden, self.action_dim)
    }

    pub fn critic_net(&self, variant: BacVariant) -> Result<NetworkConfig> {
        let extra = match variant {
            BacVariant::Indirect => 0,
            BacVariant::Direct => self.action_dim,
        };
        NetworkConfig::new(self.state_dim + self.context_dim + extra, self.n_hidden, 1)
    }

    pub fn model_net(&self) -> Result<NetworkConfig> {
        NetworkConfig::new(self.state_dim + self.action_dim, self.n_hidden, self.state_dim)
    }
}

/// Everything needed to build a fresh agent.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentSpec<T> {
    pub variant: BacVariant,
    pub shape: AgentShape,
    pub td: TdParams<T>,
    pub noise: NoiseParams<T>,
    pub reward_sign: RewardSign,
    /// Positive factor applied to raw reinforcement together with the sign.
    pub reward_scale: T,
    pub terminal: TerminalMode,
    pub init_scale: T,
    pub model_lr: T,
    pub k_m: T,
}

/// One observed transition, as seen by the learner.
#[derive(Debug, Clone, Copy)]
pub struct Transition<'a, T> {
    pub state: &'a [T],
    pub context: &'a [T],
    pub decision: &'a Decision<T>,
    /// Raw reinforcement received on arrival in `next_state`.
    pub reward: T,
    pub next_state: &'a [T],
    pub next_context: &'a [T],
    /// `next_state` is a failure.
    pub terminal: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnReport<T> {
    pub td_error: T,
    pub value: T,
    pub action_grad: Vec<T>,
    /// `∂p/∂Y_i` at each plan input (response induction only).
    pub plan_delta: Option<Vec<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BacAgent<T> {
    pub variant: BacVariant,
    pub shape: AgentShape,
    pub critic: Learner<T>,
    pub action: Learner<T>,
    pub model: Option<ModelTrainer<T>>,
    pub td: TdParams<T>,
    pub noise: NoiseParams<T>,
    pub reward_sign: RewardSign,
    pub reward_scale: T,
    pub terminal: TerminalMode,
    pub rule: ActionRule<T>,
    pub frozen: Frozen,
    /// When false the critic gets zeros in place of the context block.
    pub critic_sees_context: bool,
}

impl<T: Scalar> BacAgent<T> {
    pub fn new<R: RngCore + ?Sized>(spec: &AgentSpec<T>, rng: &mut R) -> Result<Self> {
        spec.td.validate()?;
        if !(spec.reward_scale > T::zero()) {
            return Err(Error::Config("reward scale must be > 0".into()));
        }
        if !(spec.noise.sigma >= T::zero()) {
            return Err(Error::Config("noise sigma must be >= 0".into()));
        }
        let s = spec.shape;
        let action = Learner::new(s.action_net()?, spec.td.action_lr, spec.td.momentum, spec.init_scale, rng)?;
        let critic = Learner::new(
            s.critic_net(spec.variant)?,
            spec.td.critic_lr,
            spec.td.momentum,
            spec.init_scale,
            rng,
        )?;
        let model = match spec.variant {
            BacVariant::Indirect => {
                let l = Learner::new(s.model_net()?, spec.model_lr, spec.td.momentum, spec.init_scale, rng)?;
                Some(ModelTrainer::new(l, spec.k_m, s.state_dim, s.action_dim)?)
            }
            BacVariant::Direct => None,
        };
        Ok(Self {
            variant: spec.variant,
            shape: s,
            critic,
            action,
            model,
            td: spec.td,
            noise: spec.noise,
            reward_sign: spec.reward_sign,
            reward_scale: spec.reward_scale,
            terminal: spec.terminal,
            rule: ActionRule::Standard,
            frozen: Frozen::default(),
            critic_sees_context: true,
        })
    }

    pub fn decide<R: RngCore + ?Sized>(&self, state: &[T], context: &[T], rng: &mut R) -> Result<Decision<T>> {
        select_action(&self.action.net, &concat(state, context), &self.noise, rng)
    }

    /// Noise-free action.
    pub fn act_clean(&self, state: &[T], context: &[T]) -> Result<Vec<T>> {
        self.action.net.eval(&concat(state, context))
    }

    fn critic_context(&self, context: &[T]) -> Vec<T> {
        if self.critic_sees_context {
            context.to_vec()
        } else {
            vec![T::zero(); context.len()]
        }
    }

    fn critic_input(&self, state: &[T], context: &[T], action: &[T]) -> Vec<T> {
        let context = &self.critic_context(context);
        match self.variant {
            BacVariant::Indirect => concat(state, context),
            BacVariant::Direct => [state, context, action].concat(),
        }
    }

    /// Critic estimate `p` at a state (and action, for the direct variant).
    pub fn value(&self, state: &[T], context: &[T], action: &[T]) -> Result<T> {
        Ok(self.critic.net.eval(&self.critic_input(state, context, action))?[0])
    }

    /// `∂p/∂y` at the clean action.
    pub fn action_gradient(&self, state: &[T], context: &[T], clean_action: &[T]) -> Result<Vec<T>> {
        let context = &self.critic_context(context);
        match (&self.variant, &self.model) {
            (BacVariant::Indirect, Some(m)) => {
                action_gradient_indirect(&self.critic.net, m.net(), state, context, clean_action)
            }
            (BacVariant::Indirect, None) => Err(Error::Config("indirect agent without model".into())),
            (BacVariant::Direct, _) => action_gradient_direct(&self.critic.net, state, context, clean_action),
        }
    }

    /// One TD(0) critic step and one action step for a transition.
    ///
    /// Both updates use the networks as they were before this call.
    pub fn learn(&mut self, t: &Transition<'_, T>) -> Result<LearnReport<T>> {
        let r = self.reward_sign.apply(t.reward) * self.reward_scale;
        let gamma = self.td.gamma;

        let now_input = self.critic_input(t.state, t.context, &t.decision.action);
        let now_cache = self.critic.net.forward(&now_input)?;
        let p_now = now_cache.output[0];
        let p_next = if t.terminal {
            match self.terminal {
                TerminalMode::Absorbing => r / (T::one() - gamma),
                TerminalMode::Zero => T::zero(),
            }
        } else {
            let next_action = match self.variant {
                BacVariant::Indirect => Vec::new(),
                BacVariant::Direct => self.act_clean(t.next_state, t.next_context)?,
            };
            self.value(t.next_state, t.next_context, &next_action)?
        };
        let td = td_error(r, p_next, p_now, gamma);
        if !td.is_finite() {
            return Err(Error::NonFinite(format!("td error {td}")));
        }

        let action_grad = self.action_gradient(t.state, t.context, t.decision.clean_action())?;
        let mut plan_delta = None;
        if !self.frozen.action {
            match &self.rule {
                ActionRule::Standard => train_action_step(&mut self.action, &t.decision.clean, &action_grad)?,
                ActionRule::Induction(ri) => {
                    let d = induction::ri_action_step(&mut self.action, &t.decision.clean, &action_grad, ri)?;
                    plan_delta = Some(d);
                }
            }
        } else if let ActionRule::Induction(ri) = &self.rule {
            let s = induction::plan_sensitivity(&self.action.net, &t.decision.clean, &action_grad, &ri.plan_inputs)?;
            plan_delta = Some(s.delta_plan);
        }
        if !self.frozen.critic {
            train_critic_step(&mut self.critic, &now_cache, td)?;
        }
        if !(self.action.net.is_finite() && self.critic.net.is_finite()) {
            return Err(Error::NonFinite("weights diverged".into()));
        }
        Ok(LearnReport {
            td_error: td,
            value: p_now,
            action_grad,
            plan_delta,
        })
    }
}

pub(crate) fn concat<T: Copy>(a: &[T], b: &[T]) -> Vec<T> {
    let mut v = Vec::with_capacity(a.len() + b.len());
    v.extend_from_slice(a);
    v.extend_from_slice(b);
    v
}

fn mean_abs_diff<T: Scalar>(a: &[T], b: &[T]) -> T {
    let n = T::from_usize(a.len().max(1)).unwrap_or_else(T::one);
    a.iter().zip(b).map(|(x, y)| (*x - *y).abs()).sum::<T>() / n
}
