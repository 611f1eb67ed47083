//! Two-level controller: a high-level agent that emits a plan every
//! `n_ratio` low-level steps, and a low-level agent that receives the plan as
//! an extra input to its action and critic networks.

mod phases;

pub use phases::*;

use crate::cartpole::STATE_DIM;
use crate::scalar::Scalar;

/// How the low-level agent is rewarded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LlMode {
    /// Squared tracking error between the plan and the pole angle.
    ExplicitRole,
    /// Same external reinforcement as the high level, with response
    /// induction on the plan inputs.
    ResponseInduction,
}

impl LlMode {
    pub fn name(self) -> &'static str {
        match self {
            LlMode::ExplicitRole => "explicit",
            LlMode::ResponseInduction => "ri",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "explicit" => Some(LlMode::ExplicitRole),
            "ri" => Some(LlMode::ResponseInduction),
            _ => None,
        }
    }
}

/// Reinforcement handed to the high level for one window.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HlReward {
    /// External reinforcement at the state reached at the next high-level tick.
    Sampled,
    /// Sum of the external reinforcement over the window.
    Accumulated,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HierarchyConfig {
    /// Low-level steps per high-level step.
    pub n_ratio: usize,
    pub plan_dim: usize,
    /// Half-width of the random plans used while training the low level.
    pub plan_range_ll: f64,
    /// Half-width of the random plans used while identifying the high-level model.
    pub plan_range_hl_model: f64,
    pub hl_gamma: f64,
    pub hl_reward: HlReward,
    /// Ablation switch: when false the low-level critic gets a zero in place
    /// of the plan.
    pub ll_critic_sees_plan: bool,
    /// Pole-angle failure bound (radians) while the low level learns to
    /// track plans. Must exceed the plan range or large plans cannot be held.
    pub ll_theta_range: f64,
    /// Multiplier on the explicit-role reinforcement.
    pub ll_reward_scale: f64,
}

impl Default for HierarchyConfig {
    fn default() -> Self {
        Self {
            n_ratio: 40,
            plan_dim: 1,
            plan_range_ll: 0.3,
            plan_range_hl_model: 0.7,
            hl_gamma: 0.85,
            hl_reward: HlReward::Sampled,
            ll_critic_sees_plan: true,
            ll_theta_range: 30f64.to_radians(),
            ll_reward_scale: 1.0,
        }
    }
}

/// High-level action, held for `n_ratio` low-level steps.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanSignal<T> {
    pub y: Vec<T>,
    pub issued_at_step: usize,
}

impl<T: Scalar> PlanSignal<T> {
    pub fn new(y: Vec<T>, issued_at_step: usize) -> Self {
        Self { y, issued_at_step }
    }

    pub fn zero(plan_dim: usize) -> Self {
        Self::new(vec![T::zero(); plan_dim], 0)
    }

    /// Low-level steps since this plan was issued.
    pub fn elapsed(&self, step: usize) -> usize {
        step.saturating_sub(self.issued_at_step)
    }
}

/// Training phases of a two-level controller.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PhaseId {
    I,
    II,
    III,
    IV,
}

impl PhaseId {
    pub fn name(self) -> &'static str {
        match self {
            PhaseId::I => "I",
            PhaseId::II => "II",
            PhaseId::III => "III",
            PhaseId::IV => "IV",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "I" | "1" => Some(PhaseId::I),
            "II" | "2" => Some(PhaseId::II),
            "III" | "3" => Some(PhaseId::III),
            "IV" | "4" => Some(PhaseId::IV),
            _ => None,
        }
    }
}

/// Low-level reinforcement for the explicit role: `(Y - theta)^2`, using the
/// plan held since the last high-level tick.
pub fn ll_reinforcement_explicit<T: Scalar>(plan: &PlanSignal<T>, theta: T) -> T {
    let d = plan.y[0] - theta;
    d * d
}

/// Does the high level act at this low-level step?
pub fn hl_schedule(step: usize, n_ratio: usize) -> bool {
    step % n_ratio == 0
}

/// Low-level action/critic input: normalized state followed by the plan.
pub fn ll_input<T: Scalar>(state: &[T; STATE_DIM], plan: &PlanSignal<T>) -> Vec<T> {
    let mut v = state.to_vec();
    v.extend_from_slice(&plan.y);
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn explicit_reinforcement() {
        let p = PlanSignal::new(vec![0.3f64], 0);
        assert_eq!(ll_reinforcement_explicit(&PlanSignal::new(vec![0.1f64], 0), 0.1), 0.0);
        assert!((ll_reinforcement_explicit(&p, 0.1) - 0.04).abs() < 1e-15);
        let q = PlanSignal::new(vec![0.1f64], 0);
        assert_eq!(ll_reinforcement_explicit(&p, 0.1), ll_reinforcement_explicit(&q, 0.3));
    }

    #[test]
    fn schedule() {
        for s in [0, 40, 80] {
            assert!(hl_schedule(s, 40));
        }
        assert!((1..40).all(|s| !hl_schedule(s, 40)));
        assert!(!hl_schedule(25, 10));
        assert!(hl_schedule(30, 10));
    }

    #[test]
    fn ll_input_layout() {
        let s = [0.1f64, 0.2, 0.3, 0.4];
        let v = ll_input(&s, &PlanSignal::new(vec![0.25], 0));
        assert_eq!(v, vec![0.1, 0.2, 0.3, 0.4, 0.25]);
        let z = ll_input(&s, &PlanSignal::zero(1));
        assert_eq!(z.len(), 5);
        assert_eq!(z[4], 0.0);
        assert_eq!(&z[..4], &s);
    }

    #[test]
    fn phase_names() {
        for p in [PhaseId::I, PhaseId::II, PhaseId::III, PhaseId::IV] {
            assert_eq!(PhaseId::parse(p.name()), Some(p));
        }
        assert_eq!(PhaseId::parse("V"), None);
        assert_eq!(PlanSignal::<f64>::new(vec![0.0], 40).elapsed(47), 7);
    }
}
