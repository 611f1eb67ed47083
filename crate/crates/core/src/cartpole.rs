//! Cart-pole plant.
//!
//! Frictionless cart on a bounded track with an inverted pole, integrated
//! with one forward-Euler step per controller update.

use rand::RngCore;

use crate::error::{Error, Result};
use crate::rng;
use crate::scalar::Scalar;

/// Number of state variables.
pub const STATE_DIM: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CartPoleState<T> {
    pub x: T,
    pub x_dot: T,
    pub theta: T,
    pub theta_dot: T,
}

impl<T: Scalar> CartPoleState<T> {
    pub fn new(x: T, x_dot: T, theta: T, theta_dot: T) -> Self {
        Self {
            x,
            x_dot,
            theta,
            theta_dot,
        }
    }

    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero(), T::zero(), T::zero())
    }

    pub fn to_array(self) -> [T; STATE_DIM] {
        [self.x, self.x_dot, self.theta, self.theta_dot]
    }

    pub fn from_array(a: [T; STATE_DIM]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }

    /// Network-facing coordinates: each variable divided by its scale.
    pub fn normalized(&self, bounds: &Bounds<T>) -> [T; STATE_DIM] {
        let s = bounds.scales();
        let a = self.to_array();
        std::array::from_fn(|i| a[i] / s[i])
    }

    /// Normalized difference `next - self`.
    pub fn normalized_delta(&self, next: &Self, bounds: &Bounds<T>) -> [T; STATE_DIM] {
        let s = bounds.scales();
        let (a, b) = (self.to_array(), next.to_array());
        std::array::from_fn(|i| (b[i] - a[i]) / s[i])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicsParams<T> {
    pub mass_cart: T,
    pub mass_pole: T,
    pub pole_length: T,
    pub gravity: T,
    /// Newtons per unit of action; also the force limit.
    pub force_scale: T,
    /// Integration step, the reciprocal of the servo rate.
    pub dt: T,
}

impl<T: Scalar> Default for PhysicsParams<T> {
    fn default() -> Self {
        Self {
            mass_cart: T::lit(1.0),
            mass_pole: T::lit(0.1),
            pole_length: T::lit(1.0),
            gravity: T::lit(9.8),
            force_scale: T::lit(10.0),
            dt: T::lit(0.02),
        }
    }
}

impl<T: Scalar> PhysicsParams<T> {
    pub fn with_servo_rate(mut self, hz: T) -> Self {
        self.dt = T::one() / hz;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            ("mass_cart", self.mass_cart),
            ("mass_pole", self.mass_pole),
            ("pole_length", self.pole_length),
            ("gravity", self.gravity),
            ("force_scale", self.force_scale),
            ("dt", self.dt),
        ];
        for (name, v) in all {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    fn total_mass(&self) -> T {
        self.mass_cart + self.mass_pole
    }
}

/// Track and angle limits; exceeding either ends the trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds<T> {
    pub x_range: T,
    /// Radians.
    pub theta_range: T,
}

impl<T: Scalar> Default for Bounds<T> {
    fn default() -> Self {
        Self {
            x_range: T::lit(2.4),
            theta_range: T::lit(12f64.to_radians()),
        }
    }
}

impl<T: Scalar> Bounds<T> {
    /// Normalization scales for (x, x_dot, theta, theta_dot). Velocities use
    /// 1 m/s and 1 rad/s.
    pub fn scales(&self) -> [T; STATE_DIM] {
        [self.x_range, T::one(), self.theta_range, T::one()]
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.x_range > T::zero() && self.theta_range > T::zero()) {
            return Err(Error::Config("bounds must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReinforcementMode {
    /// Normalized distance from the centered, upright state (a cost, 0 is best).
    DistanceCost,
    /// -1 on failure, 0 otherwise.
    FailureDriven,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Failure {
    CartPosition,
    PoleAngle,
}

/// `(x_ddot, theta_ddot)` for an applied force in newtons.
///
/// The angular acceleration is solved first since it does not depend on the
/// cart acceleration; the cart acceleration then uses it.
pub fn accelerations<T: Scalar>(state: &CartPoleState<T>, force: T, p: &PhysicsParams<T>) -> (T, T) {
    let (sin, cos) = state.theta.sin_cos();
    let total = p.total_mass();
    let ml = p.mass_pole * p.pole_length;
    let w2 = state.theta_dot * state.theta_dot;
    let theta_ddot = (p.gravity * sin + cos * ((-force - ml * w2 * sin) / total))
        / (p.pole_length * (T::lit(4.0 / 3.0) - p.mass_pole * cos * cos / total));
    let x_ddot = (force + ml * (w2 * sin - theta_ddot * cos)) / total;
    (x_ddot, theta_ddot)
}

/// Force commanded by a unitless action, saturated at `±force_scale`.
pub fn action_force<T: Scalar>(action: T, p: &PhysicsParams<T>) -> T {
    p.force_scale * action.max(-T::one()).min(T::one())
}

/// One Euler step of length `dt`.
pub fn step<T: Scalar>(state: &CartPoleState<T>, action: T, p: &PhysicsParams<T>) -> CartPoleState<T> {
    let (x_ddot, theta_ddot) = accelerations(state, action_force(action, p), p);
    let dt = p.dt;
    CartPoleState {
        x: state.x + dt * state.x_dot,
        x_dot: state.x_dot + dt * x_ddot,
        theta: state.theta + dt * state.theta_dot,
        theta_dot: state.theta_dot + dt * theta_ddot,
    }
}

pub fn failure<T: Scalar>(state: &CartPoleState<T>, bounds: &Bounds<T>) -> Option<Failure> {
    if state.x.abs() > bounds.x_range {
        Some(Failure::CartPosition)
    } else if state.theta.abs() > bounds.theta_range {
        Some(Failure::PoleAngle)
    } else {
        None
    }
}

pub fn is_failure<T: Scalar>(state: &CartPoleState<T>, bounds: &Bounds<T>) -> bool {
    failure(state, bounds).is_some()
}

/// Raw external reinforcement for `state` (before any reward sign is applied).
pub fn reinforcement<T: Scalar>(state: &CartPoleState<T>, bounds: &Bounds<T>, mode: ReinforcementMode) -> T {
    match mode {
        ReinforcementMode::DistanceCost => {
            let a = state.theta / bounds.theta_range;
            let b = state.x / bounds.x_range;
            (a * a + b * b).sqrt()
        }
        ReinforcementMode::FailureDriven => {
            if is_failure(state, bounds) {
                -T::one()
            } else {
                T::zero()
            }
        }
    }
}

/// Uniform start: positions within `±init_fraction` of their bound,
/// velocities within `±init_fraction` of 1 m/s and 1 rad/s.
pub fn random_initial_state<T: Scalar, R: RngCore + ?Sized>(
    rng: &mut R,
    bounds: &Bounds<T>,
    init_fraction: T,
) -> CartPoleState<T> {
    let s = bounds.scales();
    let v: [T; STATE_DIM] = std::array::from_fn(|i| rng::symmetric(rng, init_fraction * s[i]));
    CartPoleState::from_array(v)
}
