use serde::{Deserialize, Serialize};

use super::network::{Gradients, Network};
use super::tensor::Scalar;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        AdamConfig {
            lr,
            ..Default::default()
        }
    }
}

/// Optimizer state: one first/second moment buffer per parameter array.
#[derive(Debug, Clone)]
pub struct AdamState<T> {
    pub config: AdamConfig,
    pub step: u64,
    m: Vec<Vec<T>>,
    v: Vec<Vec<T>>,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(net: &Network<T>, config: AdamConfig) -> Self {
        let shapes: Vec<usize> = net.param_arrays().iter().map(|a| a.len()).collect();
        AdamState {
            config,
            step: 0,
            m: shapes.iter().map(|n| vec![T::zero(); *n]).collect(),
            v: shapes.iter().map(|n| vec![T::zero(); *n]).collect(),
        }
    }
}

/// One bias-corrected Adam update. Fails fast on non-finite gradients.
pub fn adam_step<T: Scalar>(
    net: &mut Network<T>,
    grads: &Gradients<T>,
    state: &mut AdamState<T>,
) -> Result<()> {
    if !grads.is_finite() {
        return Err(Error::NonFinite(format!("gradients for {}", net.name)));
    }
    state.step += 1;
    let c = state.config;
    let b1 = T::from_f64(c.beta1).unwrap();
    let b2 = T::from_f64(c.beta2).unwrap();
    let lr = T::from_f64(c.lr).unwrap();
    let eps = T::from_f64(c.eps).unwrap();
    let bc1 = T::from_f64(1.0 - c.beta1.powi(state.step as i32)).unwrap();
    let bc2 = T::from_f64(1.0 - c.beta2.powi(state.step as i32)).unwrap();
    let grad_arrays = grads.param_arrays();
    assert_eq!(grad_arrays.len(), state.m.len(), "optimizer/network mismatch");
    for (((params, g), m), v) in net
        .param_arrays_mut()
        .into_iter()
        .zip(grad_arrays)
        .zip(state.m.iter_mut())
        .zip(state.v.iter_mut())
    {
        for i in 0..params.len() {
            m[i] = b1 * m[i] + (T::one() - b1) * g[i];
            v[i] = b2 * v[i] + (T::one() - b2) * g[i] * g[i];
            let m_hat = m[i] / bc1;
            let v_hat = v[i] / bc2;
            params[i] = params[i] - lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}
