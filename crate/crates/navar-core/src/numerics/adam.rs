//! Adam optimizer with bias correction and L2 weight decay.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::mathx;
use crate::numerics::tensor::Tensor;

/// First/second moment estimates plus the step counter.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub first_moment: Vec<Tensor>,
    pub second_moment: Vec<Tensor>,
    pub step_count: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    /// Zero-initialized state matching the given parameter shapes, with the
    /// usual defaults β1=0.9, β2=0.999, ε=1e-8.
    pub fn new(params: &[Tensor]) -> Self {
        AdamState {
            first_moment: params.iter().map(|p| Tensor::zeros(p.shape())).collect(),
            second_moment: params.iter().map(|p| Tensor::zeros(p.shape())).collect(),
            step_count: 0,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// One Adam update over a parameter list.
///
/// Weight decay enters as an extra gradient term `mu * theta` (the classic
/// Adam+L2 convention), not as a decoupled step.
pub fn adam_step(
    params: &mut [Tensor],
    grads: &[Tensor],
    state: &mut AdamState,
    lr: f64,
    weight_decay: f64,
) -> Result<()> {
    let mut refs: Vec<&mut Tensor> = params.iter_mut().collect();
    adam_step_refs(&mut refs, grads, state, lr, weight_decay)
}

/// `adam_step` over borrowed parameters, for callers whose tensors live
/// inside larger structures.
pub fn adam_step_refs(
    params: &mut [&mut Tensor],
    grads: &[Tensor],
    state: &mut AdamState,
    lr: f64,
    weight_decay: f64,
) -> Result<()> {
    if lr <= 0.0 {
        return Err(Error::Config(format!("learning rate must be positive, got {lr}")));
    }
    if params.len() != grads.len()
        || params.len() != state.first_moment.len()
        || params.len() != state.second_moment.len()
    {
        return Err(Error::DimensionMismatch(format!(
            "adam_step got {} params, {} grads, {} moment entries",
            params.len(),
            grads.len(),
            state.first_moment.len()
        )));
    }
    for (i, (p, g)) in params.iter().zip(grads).enumerate() {
        if p.shape() != g.shape() || p.shape() != state.first_moment[i].shape() {
            return Err(Error::ShapeMismatch {
                op: "adam_step",
                lhs: p.shape().to_vec(),
                rhs: g.shape().to_vec(),
            });
        }
    }

    state.step_count += 1;
    let t = state.step_count;
    let bc1 = 1.0 - mathx::powi(state.beta1, t);
    let bc2 = 1.0 - mathx::powi(state.beta2, t);

    for i in 0..params.len() {
        let p = params[i].data_mut();
        let g = grads[i].data();
        let m = state.first_moment[i].data_mut();
        let v = state.second_moment[i].data_mut();
        for e in 0..p.len() {
            let grad = g[e] + weight_decay * p[e];
            m[e] = state.beta1 * m[e] + (1.0 - state.beta1) * grad;
            v[e] = state.beta2 * v[e] + (1.0 - state.beta2) * grad * grad;
            let m_hat = m[e] / bc1;
            let v_hat = v[e] / bc2;
            p[e] -= lr * m_hat / (mathx::sqrt(v_hat) + state.epsilon);
        }
    }
    Ok(())
}
