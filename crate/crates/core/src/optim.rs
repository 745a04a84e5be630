//! Adam with bias correction, and a central-difference gradient oracle.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::mlp::{Gradients, MlpModel};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-7,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.learning_rate.is_finite()
            && self.learning_rate > 0.0
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.epsilon.is_finite()
            && self.epsilon > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "Adam needs lr > 0, beta1 and beta2 in [0, 1), epsilon > 0; got {self:?}"
            )))
        }
    }
}

/// Moment estimates for every parameter of one model.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub step_count: u64,
    pub m: Gradients,
    pub v: Gradients,
    // β^t, kept as running products
    beta1_power: f64,
    beta2_power: f64,
}

pub fn adam_init(model: &MlpModel, config: AdamConfig) -> Result<AdamState> {
    config.validate()?;
    Ok(AdamState {
        config,
        step_count: 0,
        m: Gradients::zeros_like(model),
        v: Gradients::zeros_like(model),
        beta1_power: 1.0,
        beta2_power: 1.0,
    })
}

impl AdamState {
    /// One update over every parameter:
    ///
    /// ```text
    /// m ← β1·m + (1−β1)·g        v ← β2·v + (1−β2)·g²
    /// m̂ = m / (1−β1ᵗ)            v̂ = v / (1−β2ᵗ)
    /// θ ← θ − α·m̂ / (√v̂ + ε)
    /// ```
    ///
    /// The model is left untouched if the gradients are malformed.
    pub fn step(&mut self, model: &mut MlpModel, grads: &Gradients) -> Result<()> {
        let sizes = model.layer_sizes();
        if grads.layer_sizes() != sizes || self.m.layer_sizes() != sizes {
            return Err(Error::Shape(format!(
                "gradients {:?} and optimizer state {:?} must match model {sizes:?}",
                grads.layer_sizes(),
                self.m.layer_sizes()
            )));
        }
        if let Some(i) = grads.values().position(|g| !g.is_finite()) {
            return Err(Error::NonFiniteGradient(i));
        }

        let AdamConfig {
            learning_rate,
            beta1,
            beta2,
            epsilon,
        } = self.config;
        self.step_count += 1;
        self.beta1_power *= beta1;
        self.beta2_power *= beta2;
        let correction1 = 1.0 - self.beta1_power;
        let correction2 = 1.0 - self.beta2_power;

        let params = model
            .values_mut()
            .zip(grads.values())
            .zip(self.m.values_mut().zip(self.v.values_mut()));
        for ((theta, &g), (m, v)) in params {
            *m = beta1 * *m + (1.0 - beta1) * g;
            *v = beta2 * *v + (1.0 - beta2) * g * g;
            let m_hat = *m / correction1;
            let v_hat = *v / correction2;
            *theta -= learning_rate * m_hat / (v_hat.sqrt() + epsilon);
        }
        Ok(())
    }
}

/// Central differences `(L(θ+h) − L(θ−h)) / 2h`, one parameter at a time,
/// where `L` is the model's mean cross-entropy on the batch.
pub fn finite_diff_grad(model: &MlpModel, batch: &Matrix, labels: &[usize], h: f64) -> Result<Gradients> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidArgument(format!("step h must be positive, got {h}")));
    }
    let mut probe = model.clone();
    let mut grads = Gradients::zeros_like(model);
    for l in 0..model.layers.len() {
        let n_params = model.layers[l].values().count();
        for i in 0..n_params {
            let original = *param_mut(&mut probe, l, i);
            *param_mut(&mut probe, l, i) = original + h;
            let plus = probe.loss(batch, labels)?;
            *param_mut(&mut probe, l, i) = original - h;
            let minus = probe.loss(batch, labels)?;
            *param_mut(&mut probe, l, i) = original;
            *grads.layers[l].values_mut().nth(i).expect("same shape") = (plus - minus) / (2.0 * h);
        }
    }
    Ok(grads)
}

fn param_mut(model: &mut MlpModel, layer: usize, index: usize) -> &mut f64 {
    let layer = &mut model.layers[layer];
    let n_weights = layer.weights.as_slice().len();
    if index < n_weights {
        &mut layer.weights.as_mut_slice()[index]
    } else {
        &mut layer.bias[index - n_weights]
    }
}
