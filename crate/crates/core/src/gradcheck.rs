//! Finite-difference checks of every analytic gradient the learners use.
//!
//! Each suite draws random network shapes, weights and inputs, computes the
//! analytic gradient, and compares it with central differences. The error
//! of one configuration is `max|g - fd| / max(max|g|, max|fd|, FLOOR)`.

use rand::{Rng, RngCore, SeedableRng};

use crate::agent::{action_gradient_direct, action_gradient_indirect};
use crate::error::Result;
use crate::ffnet::{NetworkConfig, NetworkWeights};
use crate::induction::plan_sensitivity;
use crate::rng::{self, SplitMix64};

/// Central-difference step.
pub const H: f64 = 1e-5;
/// Gradients smaller than this are compared absolutely.
const FLOOR: f64 = 1e-6;

/// Tolerance for gradients of a single network.
pub const TOL_SINGLE: f64 = 1e-4;
/// Tolerance for gradients chained through several networks.
pub const TOL_CHAIN: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub name: &'static str,
    pub configs: usize,
    pub max_rel_err: f64,
    pub tolerance: f64,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.max_rel_err.is_finite() && self.max_rel_err < self.tolerance
    }
}

/// Relative error between an analytic gradient and its numerical estimate.
pub fn rel_err(analytic: &[f64], numeric: &[f64]) -> f64 {
    let scale = analytic
        .iter()
        .chain(numeric)
        .fold(FLOOR, |m, v| m.max(v.abs()));
    let diff = analytic
        .iter()
        .zip(numeric)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    diff / scale
}

/// Central differences of `f` at `x`.
pub fn numeric_grad(x: &[f64], mut f: impl FnMut(&[f64]) -> Result<f64>) -> Result<Vec<f64>> {
    let mut probe = x.to_vec();
    let mut g = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let orig = probe[i];
        probe[i] = orig + H;
        let up = f(&probe)?;
        probe[i] = orig - H;
        let down = f(&probe)?;
        probe[i] = orig;
        g.push((up - down) / (2.0 * H));
    }
    Ok(g)
}

fn random_vec<R: RngCore>(rng: &mut R, n: usize, half_width: f64) -> Vec<f64> {
    (0..n).map(|_| rng::symmetric(rng, half_width)).collect()
}

fn random_net<R: RngCore>(rng: &mut R, n_in: usize, n_out: usize) -> Result<NetworkWeights<f64>> {
    let n_hidden = rng.random_range(1..=10);
    let cfg = NetworkConfig::new(n_in, n_hidden, n_out)?;
    Ok(NetworkWeights::random(cfg, 1.0, rng))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn suite<F>(name: &'static str, configs: usize, tolerance: f64, seed: u64, mut one: F) -> Result<SuiteReport>
where
    F: FnMut(&mut SplitMix64) -> Result<f64>,
{
    let mut rng = SplitMix64::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..configs {
        let e = one(&mut rng)?;
        // NaN must not be swallowed by max
        worst = if e.is_nan() { f64::NAN } else { worst.max(e) };
    }
    Ok(SuiteReport {
        name,
        configs,
        max_rel_err: worst,
        tolerance,
    })
}

/// `∂(e·y)/∂w` from backprop against differences over the flat weights.
pub fn weight_gradients(configs: usize, seed: u64) -> Result<SuiteReport> {
    suite("weight gradients", configs, TOL_SINGLE, seed, |rng| {
        let n_in = rng.random_range(1..=6);
        let n_out = rng.random_range(1..=4);
        let net = random_net(rng, n_in, n_out)?;
        let x = random_vec(rng, n_in, 1.0);
        let e = random_vec(rng, n_out, 1.0);
        let analytic = net.backprop_weight_grad(&net.forward(&x)?, &e)?.to_flat();
        let numeric = numeric_grad(&net.to_flat(), |w| {
            let n = NetworkWeights::from_flat(net.config(), w)?;
            Ok(dot(&e, &n.eval(&x)?))
        })?;
        Ok(rel_err(&analytic, &numeric))
    })
}

/// `∂(e·y)/∂x` from backprop against differences over the input.
pub fn input_gradients(configs: usize, seed: u64) -> Result<SuiteReport> {
    suite("input gradients", configs, TOL_SINGLE, seed, |rng| {
        let n_in = rng.random_range(1..=6);
        let n_out = rng.random_range(1..=4);
        let net = random_net(rng, n_in, n_out)?;
        let x = random_vec(rng, n_in, 1.0);
        let e = random_vec(rng, n_out, 1.0);
        let analytic = net.backprop_input_grad(&net.forward(&x)?, &e)?;
        let numeric = numeric_grad(&x, |xi| Ok(dot(&e, &net.eval(xi)?)))?;
        Ok(rel_err(&analytic, &numeric))
    })
}

/// A random indirect chain: action, model and critic networks with a state
/// and context.
struct Chain {
    action: NetworkWeights<f64>,
    model: NetworkWeights<f64>,
    critic: NetworkWeights<f64>,
    state: Vec<f64>,
    context: Vec<f64>,
}

impl Chain {
    fn random<R: RngCore>(rng: &mut R) -> Result<Self> {
        let sd = rng.random_range(1..=4);
        let cd = rng.random_range(1..=2);
        let ad = rng.random_range(1..=2);
        Ok(Self {
            action: random_net(rng, sd + cd, ad)?,
            model: random_net(rng, sd + ad, sd)?,
            critic: random_net(rng, sd + cd, 1)?,
            state: random_vec(rng, sd, 1.0),
            context: random_vec(rng, cd, 0.5),
        })
    }

    fn action_input(&self, context: &[f64]) -> Vec<f64> {
        [&self.state[..], context].concat()
    }

    /// `p(state + model(state, y), context)`.
    fn value_of_action(&self, y: &[f64]) -> Result<f64> {
        let delta = self.model.eval(&[&self.state[..], y].concat())?;
        let next: Vec<f64> = self.state.iter().zip(&delta).map(|(s, d)| s + d).collect();
        Ok(self.critic.eval(&[&next[..], &self.context[..]].concat())?[0])
    }
}

/// Indirect `∂p/∂y` through model and critic.
pub fn indirect_action_gradients(configs: usize, seed: u64) -> Result<SuiteReport> {
    suite("indirect action gradient", configs, TOL_CHAIN, seed, |rng| {
        let c = Chain::random(rng)?;
        let y = c.action.eval(&c.action_input(&c.context))?;
        let analytic = action_gradient_indirect(&c.critic, &c.model, &c.state, &c.context, &y)?;
        let numeric = numeric_grad(&y, |yi| c.value_of_action(yi))?;
        Ok(rel_err(&analytic, &numeric))
    })
}

/// Action-network weight gradient of `p` for the full indirect chain.
pub fn indirect_weight_chain(configs: usize, seed: u64) -> Result<SuiteReport> {
    suite("indirect weight chain", configs, TOL_CHAIN, seed, |rng| {
        let c = Chain::random(rng)?;
        let input = c.action_input(&c.context);
        let cache = c.action.forward(&input)?;
        let dp_dy = action_gradient_indirect(&c.critic, &c.model, &c.state, &c.context, &cache.output)?;
        let analytic = c.action.backprop_weight_grad(&cache, &dp_dy)?.to_flat();
        let numeric = numeric_grad(&c.action.to_flat(), |w| {
            let a = NetworkWeights::from_flat(c.action.config(), w)?;
            c.value_of_action(&a.eval(&input)?)
        })?;
        Ok(rel_err(&analytic, &numeric))
    })
}

/// Direct `∂p/∂y` for a critic over `[state, context, action]`.
pub fn direct_action_gradients(configs: usize, seed: u64) -> Result<SuiteReport> {
    suite("direct action gradient", configs, TOL_SINGLE, seed, |rng| {
        let sd = rng.random_range(1..=4);
        let cd = rng.random_range(0..=2);
        let ad = rng.random_range(1..=2);
        let critic = random_net(rng, sd + cd + ad, 1)?;
        let s = random_vec(rng, sd, 1.0);
        let ctx = random_vec(rng, cd, 0.5);
        let y = random_vec(rng, ad, 1.0);
        let analytic = action_gradient_direct(&critic, &s, &ctx, &y)?;
        let numeric = numeric_grad(&y, |yi| Ok(critic.eval(&[&s[..], &ctx[..], yi].concat())?[0]))?;
        Ok(rel_err(&analytic, &numeric))
    })
}

/// Plan sensitivity `δ_i`: the change of `p` when only the action
/// network's view of the plan moves.
pub fn plan_sensitivities(configs: usize, seed: u64) -> Result<SuiteReport> {
    suite("plan sensitivity", configs, TOL_CHAIN, seed, |rng| {
        let c = Chain::random(rng)?;
        let sd = c.state.len();
        let plan_inputs: Vec<usize> = (sd..sd + c.context.len()).collect();
        let cache = c.action.forward(&c.action_input(&c.context))?;
        let dp_dy = action_gradient_indirect(&c.critic, &c.model, &c.state, &c.context, &cache.output)?;
        let analytic = plan_sensitivity(&c.action, &cache, &dp_dy, &plan_inputs)?.delta_plan;
        let numeric = numeric_grad(&c.context, |plan| c.value_of_action(&c.action.eval(&c.action_input(plan))?))?;
        Ok(rel_err(&analytic, &numeric))
    })
}

/// Every suite with `configs` random configurations each.
pub fn run_all(configs: usize, seed: u64) -> Result<Vec<SuiteReport>> {
    Ok(vec![
        weight_gradients(configs, seed)?,
        input_gradients(configs, seed.wrapping_add(1))?,
        indirect_action_gradients(configs, seed.wrapping_add(2))?,
        indirect_weight_chain(configs, seed.wrapping_add(3))?,
        direct_action_gradients(configs, seed.wrapping_add(4))?,
        plan_sensitivities(configs, seed.wrapping_add(5))?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rel_err_basics() {
        assert_eq!(rel_err(&[1.0, 2.0], &[1.0, 2.0]), 0.0);
        assert!((rel_err(&[1.0], &[1.1]) - 0.1 / 1.1).abs() < 1e-12);
        // both tiny: compared against the floor
        assert!(rel_err(&[1e-12], &[-1e-12]) < 1e-5);
    }

    #[test]
    fn numeric_grad_of_quadratic() {
        let g = numeric_grad(&[1.0, -2.0], |x| Ok(x[0] * x[0] + 3.0 * x[1])).unwrap();
        assert!((g[0] - 2.0).abs() < 1e-8);
        assert!((g[1] - 3.0).abs() < 1e-8);
    }

    #[test]
    fn catches_a_wrong_gradient() {
        let r = suite("broken", 5, TOL_SINGLE, 1, |rng| {
            let x = random_vec(rng, 3, 1.0);
            let analytic: Vec<f64> = x.iter().map(|v| 2.0 * v + 0.01).collect();
            let numeric = numeric_grad(&x, |xi| Ok(xi.iter().map(|v| v * v).sum()))?;
            Ok(rel_err(&analytic, &numeric))
        })
        .unwrap();
        assert!(!r.passed());
    }
}
