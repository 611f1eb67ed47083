//! Single-hidden-layer feedforward networks with Gaussian hidden units.
//!
//! Every network in the controller (critic, model, action) has the same
//! shape: `n_in` inputs, one layer of `n_hidden` units with activation
//! `g(a) = exp(-a^2)`, and a linear output layer. Backpropagation uses the
//! scalar-objective convention: given an output error vector `e`, the
//! gradients returned are those of `e · output`.

use rand::RngCore;

use crate::error::{Error, Result};
use crate::rng;
use crate::scalar::Scalar;

/// Default hidden layer width.
pub const DEFAULT_HIDDEN: usize = 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NetworkConfig {
    pub n_in: usize,
    pub n_hidden: usize,
    pub n_out: usize,
}

impl NetworkConfig {
    pub fn new(n_in: usize, n_hidden: usize, n_out: usize) -> Result<Self> {
        if n_in == 0 || n_hidden == 0 || n_out == 0 {
            return Err(Error::Config(format!(
                "network counts must be >= 1 (got {n_in}x{n_hidden}x{n_out})"
            )));
        }
        Ok(Self {
            n_in,
            n_hidden,
            n_out,
        })
    }

    pub fn param_count(&self) -> usize {
        self.n_hidden * self.n_in + self.n_hidden + self.n_out * self.n_hidden + self.n_out
    }
}

/// Parameters of one network. Matrices are row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkWeights<T> {
    config: NetworkConfig,
    /// `[n_hidden x n_in]`
    pub hidden_weights: Vec<T>,
    pub hidden_bias: Vec<T>,
    /// `[n_out x n_hidden]`
    pub output_weights: Vec<T>,
    pub output_bias: Vec<T>,
}

impl<T: Scalar> NetworkWeights<T> {
    pub fn zeros(config: NetworkConfig) -> Self {
        let NetworkConfig {
            n_in,
            n_hidden,
            n_out,
        } = config;
        Self {
            config,
            hidden_weights: vec![T::zero(); n_hidden * n_in],
            hidden_bias: vec![T::zero(); n_hidden],
            output_weights: vec![T::zero(); n_out * n_hidden],
            output_bias: vec![T::zero(); n_out],
        }
    }

    /// Every parameter drawn uniformly from `[-scale, scale]`.
    pub fn random<R: RngCore + ?Sized>(config: NetworkConfig, scale: T, rng: &mut R) -> Self {
        let mut w = Self::zeros(config);
        for p in w.params_mut() {
            *p = rng::symmetric(rng, scale);
        }
        w
    }

    pub fn config(&self) -> NetworkConfig {
        self.config
    }

    #[inline]
    pub fn hidden_weight(&self, j: usize, i: usize) -> T {
        self.hidden_weights[j * self.config.n_in + i]
    }

    #[inline]
    pub fn hidden_weight_mut(&mut self, j: usize, i: usize) -> &mut T {
        &mut self.hidden_weights[j * self.config.n_in + i]
    }

    #[inline]
    pub fn output_weight(&self, k: usize, j: usize) -> T {
        self.output_weights[k * self.config.n_hidden + j]
    }

    #[inline]
    pub fn output_weight_mut(&mut self, k: usize, j: usize) -> &mut T {
        &mut self.output_weights[k * self.config.n_hidden + j]
    }

    /// All parameters in a fixed order: hidden weights, hidden bias,
    /// output weights, output bias.
    pub fn params(&self) -> impl Iterator<Item = &T> {
        self.hidden_weights
            .iter()
            .chain(&self.hidden_bias)
            .chain(&self.output_weights)
            .chain(&self.output_bias)
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut T> {
        self.hidden_weights
            .iter_mut()
            .chain(&mut self.hidden_bias)
            .chain(&mut self.output_weights)
            .chain(&mut self.output_bias)
    }

    pub fn to_flat(&self) -> Vec<T> {
        self.params().copied().collect()
    }

    pub fn from_flat(config: NetworkConfig, flat: &[T]) -> Result<Self> {
        if flat.len() != config.param_count() {
            return Err(Error::dim("flat parameters", config.param_count(), flat.len()));
        }
        let mut w = Self::zeros(config);
        for (p, v) in w.params_mut().zip(flat) {
            *p = *v;
        }
        Ok(w)
    }

    pub fn is_finite(&self) -> bool {
        self.params().all(|p| p.is_finite())
    }

    /// Zero every hidden weight reading from input `i`.
    pub fn disconnect_input(&mut self, i: usize) {
        for j in 0..self.config.n_hidden {
            *self.hidden_weight_mut(j, i) = T::zero();
        }
    }

    fn check_same_shape(&self, other: &Self, what: &'static str) -> Result<()> {
        if self.config != other.config {
            return Err(Error::dim(
                what,
                self.config.param_count(),
                other.config.param_count(),
            ));
        }
        Ok(())
    }

    /// Forward pass, keeping every intermediate needed by backprop.
    pub fn forward(&self, input: &[T]) -> Result<ForwardCache<T>> {
        let NetworkConfig {
            n_in,
            n_hidden,
            n_out,
        } = self.config;
        if input.len() != n_in {
            return Err(Error::dim("network input", n_in, input.len()));
        }
        let hidden_net: Vec<T> = (0..n_hidden)
            .map(|j| {
                let row = &self.hidden_weights[j * n_in..(j + 1) * n_in];
                row.iter().zip(input).fold(self.hidden_bias[j], |acc, (w, x)| acc + *w * *x)
            })
            .collect();
        let hidden_act: Vec<T> = hidden_net.iter().map(|&a| gaussian(a)).collect();
        let output = (0..n_out)
            .map(|k| {
                let row = &self.output_weights[k * n_hidden..(k + 1) * n_hidden];
                row.iter().zip(&hidden_act).fold(self.output_bias[k], |acc, (w, h)| acc + *w * *h)
            })
            .collect();
        Ok(ForwardCache {
            input: input.to_vec(),
            hidden_net,
            hidden_act,
            output,
        })
    }

    /// Output only.
    pub fn eval(&self, input: &[T]) -> Result<Vec<T>> {
        Ok(self.forward(input)?.output)
    }

    /// Hidden-unit deltas `∂(e · output)/∂net_j`.
    pub fn hidden_deltas(&self, cache: &ForwardCache<T>, output_error: &[T]) -> Result<Vec<T>> {
        let NetworkConfig { n_hidden, n_out, .. } = self.config;
        if output_error.len() != n_out {
            return Err(Error::dim("output error", n_out, output_error.len()));
        }
        if cache.hidden_net.len() != n_hidden {
            return Err(Error::dim("forward cache", n_hidden, cache.hidden_net.len()));
        }
        Ok((0..n_hidden)
            .map(|j| {
                let back: T = (0..n_out)
                    .map(|k| output_error[k] * self.output_weight(k, j))
                    .sum();
                back * gaussian_slope(cache.hidden_net[j], cache.hidden_act[j])
            })
            .collect())
    }

    /// Gradient of `output_error · output` with respect to every weight.
    pub fn backprop_weight_grad(
        &self,
        cache: &ForwardCache<T>,
        output_error: &[T],
    ) -> Result<NetworkWeights<T>> {
        let deltas = self.hidden_deltas(cache, output_error)?;
        Ok(self.weight_grad_from_deltas(cache, output_error, &deltas))
    }

    /// Weight gradient given precomputed hidden deltas.
    pub fn weight_grad_from_deltas(
        &self,
        cache: &ForwardCache<T>,
        output_error: &[T],
        deltas: &[T],
    ) -> NetworkWeights<T> {
        let NetworkConfig {
            n_in,
            n_hidden,
            n_out,
        } = self.config;
        let mut g = Self::zeros(self.config);
        for j in 0..n_hidden {
            for i in 0..n_in {
                g.hidden_weights[j * n_in + i] = deltas[j] * cache.input[i];
            }
            g.hidden_bias[j] = deltas[j];
        }
        for k in 0..n_out {
            for j in 0..n_hidden {
                g.output_weights[k * n_hidden + j] = output_error[k] * cache.hidden_act[j];
            }
            g.output_bias[k] = output_error[k];
        }
        g
    }

    /// Gradient of `output_error · output` with respect to the input vector.
    pub fn backprop_input_grad(&self, cache: &ForwardCache<T>, output_error: &[T]) -> Result<Vec<T>> {
        let deltas = self.hidden_deltas(cache, output_error)?;
        Ok(self.input_grad_from_deltas(&deltas))
    }

    pub fn input_grad_from_deltas(&self, deltas: &[T]) -> Vec<T> {
        let NetworkConfig { n_in, n_hidden, .. } = self.config;
        (0..n_in)
            .map(|i| (0..n_hidden).map(|j| deltas[j] * self.hidden_weight(j, i)).sum())
            .collect()
    }
}

/// Intermediates of one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardCache<T> {
    pub input: Vec<T>,
    pub hidden_net: Vec<T>,
    pub hidden_act: Vec<T>,
    pub output: Vec<T>,
}

#[inline]
pub fn gaussian<T: Scalar>(a: T) -> T {
    (-(a * a)).exp()
}

/// `d/da exp(-a^2)`, given the already computed activation.
#[inline]
pub fn gaussian_slope<T: Scalar>(a: T, act: T) -> T {
    T::lit(-2.0) * a * act
}

/// Learning rate, momentum coefficient and the momentum buffer of one network.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingHyper<T> {
    pub learning_rate: T,
    pub momentum: T,
    pub velocity: NetworkWeights<T>,
}

impl<T: Scalar> TrainingHyper<T> {
    pub fn new(learning_rate: T, momentum: T, config: NetworkConfig) -> Result<Self> {
        if !(learning_rate > T::zero()) {
            return Err(Error::Config(format!("learning rate must be > 0, got {learning_rate}")));
        }
        if !(momentum >= T::zero() && momentum < T::one()) {
            return Err(Error::Config(format!("momentum must be in [0, 1), got {momentum}")));
        }
        Ok(Self {
            learning_rate,
            momentum,
            velocity: NetworkWeights::zeros(config),
        })
    }

    pub fn reset_velocity(&mut self) {
        for v in self.velocity.params_mut() {
            *v = T::zero();
        }
    }
}

/// Direction of a gradient step on `e · output`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Ascend,
    Descend,
}

impl Direction {
    fn sign<T: Scalar>(self) -> T {
        match self {
            Direction::Ascend => T::one(),
            Direction::Descend => -T::one(),
        }
    }
}

/// Momentum SGD: `v <- mu v + sign eta grad; w <- w + v`.
///
/// A non-finite gradient leaves both weights and velocity untouched.
pub fn apply_update<T: Scalar>(
    weights: &mut NetworkWeights<T>,
    grad: &NetworkWeights<T>,
    hyper: &mut TrainingHyper<T>,
    direction: Direction,
) -> Result<()> {
    weights.check_same_shape(grad, "gradient")?;
    weights.check_same_shape(&hyper.velocity, "velocity")?;
    if !grad.is_finite() {
        return Err(Error::NonFinite("non-finite gradient".into()));
    }
    let step = direction.sign::<T>() * hyper.learning_rate;
    let mu = hyper.momentum;
    for ((w, v), g) in weights
        .params_mut()
        .zip(hyper.velocity.params_mut())
        .zip(grad.params())
    {
        *v = mu * *v + step * *g;
        *w += *v;
    }
    Ok(())
}
