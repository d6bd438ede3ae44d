use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Adam hyperparameters. The step size at update `t` (from 0) is
/// `lr * decay_rate^(t / decay_steps)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    #[serde(default = "no_decay")]
    pub decay_rate: f64,
    #[serde(default = "default_decay_steps")]
    pub decay_steps: usize,
}

fn no_decay() -> f64 {
    1.0
}

fn default_decay_steps() -> usize {
    1000
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            decay_rate: no_decay(),
            decay_steps: default_decay_steps(),
        }
    }
}

impl AdamConfig {
    pub fn step_size(&self, t: u64) -> f64 {
        if self.decay_rate == 1.0 {
            return self.lr;
        }
        self.lr
            * self
                .decay_rate
                .powf(t as f64 / self.decay_steps.max(1) as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub t: u64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl AdamState {
    pub fn new(config: AdamConfig, n: usize) -> Self {
        Self {
            config,
            t: 0,
            m: vec![0.0; n],
            v: vec![0.0; n],
        }
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        adam_step(self, params, grads)
    }
}

/// One bias-corrected Adam update. The state is left untouched when the
/// gradient is rejected.
pub fn adam_step(state: &mut AdamState, params: &mut [f64], grads: &[f64]) -> Result<()> {
    if params.len() != state.m.len() || grads.len() != params.len() {
        return Err(Error::contract(format!(
            "adam state holds {} entries, got {} params and {} grads",
            state.m.len(),
            params.len(),
            grads.len()
        )));
    }
    if let Some(i) = grads.iter().position(|g| !g.is_finite()) {
        return Err(Error::numeric(
            "adam",
            format!("gradient entry {i} is {} at step {}", grads[i], state.t + 1),
        ));
    }
    let AdamConfig {
        beta1, beta2, eps, ..
    } = state.config;
    let lr = state.config.step_size(state.t);
    state.t += 1;
    let c1 = 1.0 - beta1.powi(state.t as i32);
    let c2 = 1.0 - beta2.powi(state.t as i32);
    for (((p, &g), m), v) in params
        .iter_mut()
        .zip(grads)
        .zip(&mut state.m)
        .zip(&mut state.v)
    {
        *m = beta1 * *m + (1.0 - beta1) * g;
        *v = beta2 * *v + (1.0 - beta2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *p -= lr * m_hat / (v_hat.sqrt() + eps);
    }
    Ok(())
}
