//! RMSProp: minibatch stochastic gradient descent with a running mean of
//! squared gradients per parameter.

use crate::{PdError, Result};

#[derive(Debug, Clone)]
pub struct RmsPropState {
    pub mean_square: Vec<f64>,
    pub decay: f64,
    pub epsilon: f64,
    pub learning_rate: f64,
}

impl RmsPropState {
    pub const DEFAULT_DECAY: f64 = 0.95;
    pub const DEFAULT_EPSILON: f64 = 1e-6;

    pub fn new(parameter_count: usize, learning_rate: f64) -> Self {
        RmsPropState {
            mean_square: vec![0.0; parameter_count],
            decay: Self::DEFAULT_DECAY,
            epsilon: Self::DEFAULT_EPSILON,
            learning_rate,
        }
    }
}

/// One update: `ms <- decay * ms + (1 - decay) * g^2`,
/// `p <- p - lr * g / sqrt(ms + eps)`.
pub fn rmsprop_step(params: &mut [f64], grads: &[f64], state: &mut RmsPropState) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.mean_square.len() {
        return Err(PdError::ShapeMismatch(format!(
            "rmsprop lengths differ: params {}, grads {}, state {}",
            params.len(),
            grads.len(),
            state.mean_square.len()
        )));
    }
    let keep = state.decay;
    let blend = 1.0 - state.decay;
    for i in 0..params.len() {
        let g = grads[i];
        let ms = keep * state.mean_square[i] + blend * g * g;
        state.mean_square[i] = ms;
        params[i] -= state.learning_rate * g / (ms + state.epsilon).sqrt();
    }
    Ok(())
}
