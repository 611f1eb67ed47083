//! Response-induction learning for a low-level controller that shares the
//! external reinforcement with its high-level planner.
//!
//! The plan sensitivity `δ_i = ∂p/∂Y_i` is the backpropagated delta at plan
//! input `i` of the low-level action network when the output error is the
//! critic feedback `∂p/∂y`. Connections from hidden units to plan inputs get
//!
//! ```text
//! Δw_ji = η [ δ_j Y_i + k1 k2 δ_i δ_j exp(-δ_i² / k2²) ] + momentum
//! ```
//!
//! which pushes `|δ_i|` away from zero; every other weight gets the
//! ordinary ascent step.

use crate::error::{Error, Result};
use crate::ffnet::{apply_update, Direction, ForwardCache, NetworkWeights};
use crate::agent::Learner;
use crate::scalar::Scalar;

/// Form of the induction term.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InductionRule {
    /// `k1 k2 δ_i δ_j exp(-δ_i²/k2²)`
    Printed,
    /// Exact gradient of the influence error:
    /// `2 k1 δ_i δ_j exp(-δ_i²/k2²) / (n_p k2²)`.
    Analytic,
}

/// What the sensitivity is measured on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InductionSource {
    /// `∂p/∂Y`, through the critic.
    Critic,
    /// `∂y/∂Y`, the action output itself. Kept for ablation only.
    ActionOutput,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RiParams<T> {
    pub k1: T,
    pub k2: T,
    /// Indices of the plan inputs within the action network's input vector.
    pub plan_inputs: Vec<usize>,
    pub rule: InductionRule,
    pub source: InductionSource,
}

impl<T: Scalar> RiParams<T> {
    pub fn new(k1: T, k2: T, plan_inputs: Vec<usize>) -> Result<Self> {
        if !(k1 > T::zero() && k2 > T::zero()) {
            return Err(Error::Config(format!("k1 and k2 must be > 0 (got {k1}, {k2})")));
        }
        if plan_inputs.is_empty() {
            return Err(Error::Config("response induction needs at least one plan input".into()));
        }
        Ok(Self {
            k1,
            k2,
            plan_inputs,
            rule: InductionRule::Printed,
            source: InductionSource::Critic,
        })
    }

    pub fn n_p(&self) -> usize {
        self.plan_inputs.len()
    }

    pub fn validate_for(&self, action_net: &NetworkWeights<T>) -> Result<()> {
        let n_in = action_net.config().n_in;
        match self.plan_inputs.iter().find(|&&i| i >= n_in) {
            Some(&i) => Err(Error::dim("plan input index", n_in, i)),
            None => Ok(()),
        }
    }
}

/// `E_influence = -(k1/n_p) Σ exp(-δ_i²/k2²)`, in `[-k1, 0)`.
pub fn influence_error<T: Scalar>(delta_plan: &[T], k1: T, k2: T) -> T {
    let n = T::from_usize(delta_plan.len().max(1)).unwrap_or_else(T::one);
    let s: T = delta_plan.iter().map(|&d| (-(d * d) / (k2 * k2)).exp()).sum();
    -(k1 / n) * s
}

/// Induction part of the plan-connection increment (before the learning rate).
pub fn induction_term<T: Scalar>(delta_i: T, delta_j: T, ri: &RiParams<T>) -> T {
    let bowl = (-(delta_i * delta_i) / (ri.k2 * ri.k2)).exp();
    match ri.rule {
        InductionRule::Printed => ri.k1 * ri.k2 * delta_i * delta_j * bowl,
        InductionRule::Analytic => {
            let n = T::from_usize(ri.n_p()).unwrap_or_else(T::one);
            T::lit(2.0) * ri.k1 * delta_i * delta_j * bowl / (n * ri.k2 * ri.k2)
        }
    }
}

/// Increment for one hidden-to-plan connection, momentum excluded:
/// `η [δ_j Y_i + induction]`.
pub fn ri_weight_increment<T: Scalar>(delta_j: T, plan_i: T, delta_i: T, learning_rate: T, ri: &RiParams<T>) -> T {
    learning_rate * (delta_j * plan_i + induction_term(delta_i, delta_j, ri))
}

/// Deltas of one backward pass through the action network.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanSensitivity<T> {
    /// `δ_i` for each plan input.
    pub delta_plan: Vec<T>,
    /// `δ_j` for each hidden unit.
    pub hidden_deltas: Vec<T>,
}

/// Backpropagate `action_grad = ∂p/∂y` through the action network and read
/// off the deltas at the plan inputs.
pub fn plan_sensitivity<T: Scalar>(
    action_net: &NetworkWeights<T>,
    clean_cache: &ForwardCache<T>,
    action_grad: &[T],
    plan_inputs: &[usize],
) -> Result<PlanSensitivity<T>> {
    let hidden_deltas = action_net.hidden_deltas(clean_cache, action_grad)?;
    let input_grad = action_net.input_grad_from_deltas(&hidden_deltas);
    let delta_plan = plan_inputs
        .iter()
        .map(|&i| input_grad.get(i).copied().ok_or(Error::dim("plan input index", input_grad.len(), i)))
        .collect::<Result<_>>()?;
    Ok(PlanSensitivity {
        delta_plan,
        hidden_deltas,
    })
}

/// Gradient used for a response-induction step: the ordinary ascent
/// gradient with the hidden-to-plan entries replaced by the induced ones.
/// Returns the gradient together with the measured plan deltas.
pub fn ri_gradient<T: Scalar>(
    action_net: &NetworkWeights<T>,
    clean_cache: &ForwardCache<T>,
    action_grad: &[T],
    ri: &RiParams<T>,
) -> Result<(NetworkWeights<T>, Vec<T>)> {
    ri.validate_for(action_net)?;
    let critic_side = plan_sensitivity(action_net, clean_cache, action_grad, &ri.plan_inputs)?;
    let mut grad = action_net.weight_grad_from_deltas(clean_cache, action_grad, &critic_side.hidden_deltas);
    let induced = match ri.source {
        InductionSource::Critic => critic_side.clone(),
        InductionSource::ActionOutput => {
            let ones = vec![T::one(); action_grad.len()];
            plan_sensitivity(action_net, clean_cache, &ones, &ri.plan_inputs)?
        }
    };
    for (slot, &i) in ri.plan_inputs.iter().enumerate() {
        let y_i = clean_cache.input[i];
        let d_i = induced.delta_plan[slot];
        for j in 0..action_net.config().n_hidden {
            *grad.hidden_weight_mut(j, i) = critic_side.hidden_deltas[j] * y_i
                + induction_term(d_i, induced.hidden_deltas[j], ri);
        }
    }
    Ok((grad, critic_side.delta_plan))
}

/// Response-induction action step; returns `δ_i` measured before the update.
pub fn ri_action_step<T: Scalar>(
    action: &mut Learner<T>,
    clean_cache: &ForwardCache<T>,
    action_grad: &[T],
    ri: &RiParams<T>,
) -> Result<Vec<T>> {
    let (grad, delta) = ri_gradient(&action.net, clean_cache, action_grad, ri)?;
    apply_update(&mut action.net, &grad, &mut action.hyper, Direction::Ascend)?;
    Ok(delta)
}

/// Per-trial bookkeeping of plan sensitivities.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct InfluenceState<T> {
    /// Latest `δ_i` values.
    pub delta_plan: Vec<T>,
    sum_abs: f64,
    count: usize,
    /// Trial means of `|δ|`, one per finished trial.
    pub history: Vec<f64>,
}

impl<T: Scalar> InfluenceState<T> {
    pub fn record(&mut self, delta: &[T]) {
        self.delta_plan = delta.to_vec();
        if delta.is_empty() {
            return;
        }
        let m = delta.iter().map(|d| d.abs().as_f64()).sum::<f64>() / delta.len() as f64;
        self.sum_abs += m;
        self.count += 1;
    }

    /// Close the running trial and return its mean `|δ|`.
    pub fn end_trial(&mut self) -> Option<f64> {
        if self.count == 0 {
            return None;
        }
        let m = self.sum_abs / self.count as f64;
        self.sum_abs = 0.0;
        self.count = 0;
        self.history.push(m);
        Some(m)
    }
}
