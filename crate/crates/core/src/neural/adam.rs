//! Adam parameter updates over the model's flat parameter order.

use super::{Gradients, RecurrentModel};

/// First/second-moment state for Adam, one slot per parameter.
#[derive(Debug, Clone)]
pub struct AdamState {
    step: u64,
    m: Vec<f64>,
    v: Vec<f64>,
    learning_rate: f64,
    beta1: f64,
    beta2: f64,
    epsilon: f64,
}

impl AdamState {
    /// Fresh state for `model` with the usual moment decays (0.9 and
    /// 0.999) and epsilon 1e-8.
    pub fn new(model: &RecurrentModel, learning_rate: f64) -> Self {
        let n = model.param_count();
        AdamState {
            step: 0,
            m: vec![0.0; n],
            v: vec![0.0; n],
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }

    /// Number of updates applied so far.
    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// Current step size.
    pub fn learning_rate(&self) -> f64 {
        self.learning_rate
    }

    /// Changes the step size for subsequent updates; moment estimates
    /// are kept, so this supports decay schedules mid-run.
    pub fn set_learning_rate(&mut self, learning_rate: f64) {
        self.learning_rate = learning_rate;
    }
}

/// Applies one bias-corrected Adam update to every parameter.
pub fn adam_step(model: &mut RecurrentModel, state: &mut AdamState, grads: &Gradients) {
    let g = grads.flat();
    assert_eq!(g.len(), state.m.len(), "gradient shape does not match the optimizer state");
    state.step += 1;
    let bc1 = 1.0 - state.beta1.powi(state.step as i32);
    let bc2 = 1.0 - state.beta2.powi(state.step as i32);
    let AdamState { m, v, learning_rate, beta1, beta2, epsilon, .. } = state;
    model.visit_params_mut(&mut |i, p| {
        let gi = g[i];
        m[i] = *beta1 * m[i] + (1.0 - *beta1) * gi;
        v[i] = *beta2 * v[i] + (1.0 - *beta2) * gi * gi;
        let m_hat = m[i] / bc1;
        let v_hat = v[i] / bc2;
        *p -= *learning_rate * m_hat / (v_hat.sqrt() + *epsilon);
    });
}
