//! Backpropagated adaptive critics, single-level and two-level, on the
//! cart-pole.

pub mod agent;
pub mod cartpole;
pub mod error;
pub mod ffnet;
pub mod gradcheck;
pub mod harness;
pub mod hierarchy;
pub mod induction;
pub mod rng;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Network = ffnet::NetworkWeights<f64>;
pub type Agent = agent::BacAgent<f64>;
pub type State = cartpole::CartPoleState<f64>;
pub type Physics = cartpole::PhysicsParams<f64>;
