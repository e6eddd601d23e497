use serde::{Deserialize, Serialize};

use super::{Gradients, Network, Tensor};
use crate::{Error, Result};

/// Optimizer and schedule settings for a training run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    /// Multiplier applied to the learning rate after every epoch.
    pub lr_decay: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { learning_rate: 0.05, momentum: 0.9, batch_size: 32, epochs: 20, seed: 1, lr_decay: 0.9 }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig("learning rate must be finite and non-negative".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch size must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::InvalidConfig("momentum must lie in [0, 1)".into()));
        }
        if !(self.lr_decay > 0.0 && self.lr_decay <= 1.0) {
            return Err(Error::InvalidConfig("lr_decay must lie in (0, 1]".into()));
        }
        Ok(())
    }

    /// Learning rate in effect during `epoch` (0-based).
    pub fn learning_rate_at(&self, epoch: usize) -> f64 {
        self.learning_rate * self.lr_decay.powi(epoch as i32)
    }
}

/// Momentum buffers for SGD, shaped like the network parameters.
#[derive(Clone, Debug)]
pub struct SgdState {
    velocity: Vec<(Tensor, Tensor)>,
}

impl SgdState {
    pub fn new(net: &Network) -> Self {
        Self { velocity: Gradients::zeros_like(net).layers }
    }
}

/// One SGD step with heavy-ball momentum:
/// `v <- momentum * v + g`, `w <- w - lr * v`.
pub fn sgd_step(net: &mut Network, grads: &Gradients, lr: f64, momentum: f64, state: &mut SgdState) -> Result<()> {
    if grads.layers.len() != net.layers().len() || state.velocity.len() != net.layers().len() {
        return Err(Error::Shape("gradient / optimizer state do not match the network".into()));
    }
    for ((layer, (gw, gb)), (vw, vb)) in net.layers_mut().iter_mut().zip(&grads.layers).zip(state.velocity.iter_mut()) {
        if layer.weight.shape() != gw.shape() || layer.bias.shape() != gb.shape() {
            return Err(Error::Shape("gradient shape does not match parameter".into()));
        }
        update(layer.weight.data_mut(), gw.data(), vw.data_mut(), lr, momentum);
        update(layer.bias.data_mut(), gb.data(), vb.data_mut(), lr, momentum);
    }
    Ok(())
}

fn update(params: &mut [f64], grads: &[f64], velocity: &mut [f64], lr: f64, momentum: f64) {
    for ((w, &g), v) in params.iter_mut().zip(grads).zip(velocity) {
        if momentum == 0.0 {
            *w -= lr * g;
        } else {
            *v = momentum * *v + g;
            *w -= lr * *v;
        }
    }
}
