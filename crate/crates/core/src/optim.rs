//! Adam with bias correction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix2D;
use crate::network::{DenseNetwork, NetworkGradients};

pub const DEFAULT_BETA1: f64 = 0.9;
pub const DEFAULT_BETA2: f64 = 0.999;
pub const DEFAULT_EPSILON: f64 = 1e-8;

/// First/second moment estimates for one network, shape-congruent with its
/// parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdamState {
    pub step_count: u64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    layers: Vec<LayerMoments>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct LayerMoments {
    m_weight: Matrix2D,
    v_weight: Matrix2D,
    m_bias: Vec<f64>,
    v_bias: Vec<f64>,
}

impl AdamState {
    pub fn new(net: &DenseNetwork, learning_rate: f64) -> Self {
        let layers = net
            .layers()
            .iter()
            .map(|l| LayerMoments {
                m_weight: Matrix2D::zeros(l.in_dim(), l.out_dim()),
                v_weight: Matrix2D::zeros(l.in_dim(), l.out_dim()),
                m_bias: vec![0.0; l.out_dim()],
                v_bias: vec![0.0; l.out_dim()],
            })
            .collect();
        AdamState {
            step_count: 0,
            learning_rate,
            beta1: DEFAULT_BETA1,
            beta2: DEFAULT_BETA2,
            epsilon: DEFAULT_EPSILON,
            layers,
        }
    }

    fn congruent_with(&self, net: &DenseNetwork) -> bool {
        self.layers.len() == net.layers().len()
            && self.layers.iter().zip(net.layers()).all(|(m, l)| {
                m.m_weight.rows() == l.in_dim()
                    && m.m_weight.cols() == l.out_dim()
                    && m.m_bias.len() == l.out_dim()
            })
    }
}

/// Applies one bias-corrected Adam update to `net` in place and advances the
/// optimizer state.
pub fn adam_step(
    net: &mut DenseNetwork,
    grads: &NetworkGradients,
    state: &mut AdamState,
) -> Result<()> {
    if !state.congruent_with(net) {
        return Err(Error::shape("optimizer state does not match network".to_string()));
    }
    if grads.layers.len() != net.layers().len() {
        return Err(Error::shape("gradient set does not match network".to_string()));
    }
    state.step_count += 1;
    let t = state.step_count as i32;
    let (b1, b2, eps) = (state.beta1, state.beta2, state.epsilon);
    let bc1 = 1.0 - b1.powi(t);
    let bc2 = 1.0 - b2.powi(t);
    let lr = state.learning_rate;

    for ((layer, grad), moments) in net
        .layers_mut()
        .iter_mut()
        .zip(&grads.layers)
        .zip(&mut state.layers)
    {
        if grad.weight.rows() != layer.in_dim() || grad.weight.cols() != layer.out_dim() {
            return Err(Error::shape("weight gradient shape mismatch".to_string()));
        }
        update_slice(
            layer.weight.data_mut(),
            grad.weight.data(),
            moments.m_weight.data_mut(),
            moments.v_weight.data_mut(),
            b1, b2, eps, bc1, bc2, lr,
        );
        update_slice(
            &mut layer.bias,
            &grad.bias,
            &mut moments.m_bias,
            &mut moments.v_bias,
            b1, b2, eps, bc1, bc2, lr,
        );
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn update_slice(
    params: &mut [f64],
    grads: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    b1: f64,
    b2: f64,
    eps: f64,
    bc1: f64,
    bc2: f64,
    lr: f64,
) {
    for i in 0..params.len() {
        let g = grads[i];
        m[i] = b1 * m[i] + (1.0 - b1) * g;
        v[i] = b2 * v[i] + (1.0 - b2) * g * g;
        let m_hat = m[i] / bc1;
        let v_hat = v[i] / bc2;
        params[i] -= lr * m_hat / (v_hat.sqrt() + eps);
    }
}
