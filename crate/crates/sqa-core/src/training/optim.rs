//! Adam with coupled L2 weight decay, and the step learning-rate schedule.

use crate::nn::params::ParameterStore;
use crate::nn::scalar::Scalar;
use crate::training::run::TrainConfig;

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

/// First and second moment buffers, one pair per parameter array, in
/// parameter-store order.
#[derive(Debug, Clone)]
pub struct AdamState<F> {
    m: Vec<Vec<F>>,
    v: Vec<Vec<F>>,
    pub step: u64,
}

impl<F: Scalar> AdamState<F> {
    pub fn new(params: &ParameterStore<F>) -> Self {
        let m = params.iter().map(|(_, p)| vec![F::zero(); p.values.len()]).collect();
        let v = params.iter().map(|(_, p)| vec![F::zero(); p.values.len()]).collect();
        Self { m, v, step: 0 }
    }
}

/// One bias-corrected Adam update over every parameter. Weight decay is
/// coupled L2 by default (decay added to the gradient before the moment
/// updates); `decoupled` switches to the decoupled variant.
pub fn adam_step<F: Scalar>(
    params: &mut ParameterStore<F>,
    state: &mut AdamState<F>,
    lr: f64,
    weight_decay: f64,
    decoupled: bool,
) {
    state.step += 1;
    let t = state.step as i32;
    let beta1 = F::from_f64(ADAM_BETA1);
    let beta2 = F::from_f64(ADAM_BETA2);
    let one_minus_b1 = F::one() - beta1;
    let one_minus_b2 = F::one() - beta2;
    let bias1 = F::from_f64(1.0 - ADAM_BETA1.powi(t));
    let bias2 = F::from_f64(1.0 - ADAM_BETA2.powi(t));
    let eps = F::from_f64(ADAM_EPS);
    let lr_f = F::from_f64(lr);
    let wd = F::from_f64(weight_decay);
    for (i, (_, p)) in params.iter_mut().enumerate() {
        let m = &mut state.m[i];
        let v = &mut state.v[i];
        for j in 0..p.values.len() {
            let mut g = p.grad[j];
            if !decoupled {
                g += wd * p.values[j];
            }
            m[j] = beta1 * m[j] + one_minus_b1 * g;
            v[j] = beta2 * v[j] + one_minus_b2 * g * g;
            let m_hat = m[j] / bias1;
            let v_hat = v[j] / bias2;
            let mut upd = lr_f * m_hat / (v_hat.sqrt() + eps);
            if decoupled {
                upd += lr_f * wd * p.values[j];
            }
            p.values[j] -= upd;
        }
    }
}

/// `lr(epoch) = lr0 * gamma^floor(epoch / step_size)`.
pub fn step_lr(epoch: usize, cfg: &TrainConfig) -> f64 {
    cfg.lr * cfg.gamma.powi((epoch / cfg.step_size) as i32)
}
