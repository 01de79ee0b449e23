//! Feedforward dense networks with explicit reverse-mode gradients.
//!
//! A [`DenseNetwork`] is an ordered stack of affine layers with elementwise
//! activations. `forward` records the per-layer activations in a
//! [`ForwardTape`]; `backward` replays the tape to produce exact parameter
//! gradients for any upstream output gradient.

use std::sync::atomic::{AtomicU64, Ordering};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix2D;

/// Elementwise activation applied after the affine transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
    Relu,
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => tanh_fast(x),
            Activation::Relu => x.max(0.0),
            Activation::Identity => x,
        }
    }

    /// Derivative expressed in terms of the activation output.
    #[inline]
    pub fn grad_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - y * y,
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }
}

// Branch-free tanh: `tanh(x) = sign(x) (1 - e^{-2|x|}) / (1 + e^{-2|x|})`
// with the exponential computed by Cody-Waite range reduction and a
// degree-13 Taylor polynomial. Every operation lowers to straight-line SIMD
// code, so the activation pass over a batch auto-vectorizes instead of
// calling into libm per element. Tests pin the result to `f64::tanh` within
// a few ulp.

const LN2_HI: f64 = 6.931_471_803_691_238_2e-1;
const LN2_LO: f64 = 1.908_214_929_270_587_7e-10;
const INV_LN2: f64 = std::f64::consts::LOG2_E;

/// exp(a) for a in [-60, 0], accurate to ~1 ulp.
#[inline]
fn exp_nonpos(a: f64) -> f64 {
    let k = (a * INV_LN2).round();
    let r = a - k * LN2_HI - k * LN2_LO;
    // Taylor series of exp on |r| <= ln(2)/2; the degree-13 tail is below
    // f64 resolution there.
    let mut p: f64 = 1.6059043836821613e-10; // 1/13!
    p = p.mul_add(r, 2.08767569878681e-9); // 1/12!
    p = p.mul_add(r, 2.5052108385441720e-8); // 1/11!
    p = p.mul_add(r, 2.7557319223985893e-7); // 1/10!
    p = p.mul_add(r, 2.7557319223985888e-6); // 1/9!
    p = p.mul_add(r, 2.4801587301587302e-5); // 1/8!
    p = p.mul_add(r, 1.9841269841269841e-4); // 1/7!
    p = p.mul_add(r, 1.3888888888888889e-3); // 1/6!
    p = p.mul_add(r, 8.3333333333333333e-3); // 1/5!
    p = p.mul_add(r, 4.1666666666666666e-2); // 1/4!
    p = p.mul_add(r, 1.6666666666666666e-1); // 1/3!
    p = p.mul_add(r, 0.5);
    p = p.mul_add(r, 1.0);
    p = p.mul_add(r, 1.0);
    let scale = f64::from_bits(((k as i64 + 1023) as u64) << 52);
    p * scale
}

#[inline]
fn tanh_fast(x: f64) -> f64 {
    let a = (-2.0 * x.abs()).max(-60.0);
    let t = exp_nonpos(a);
    ((1.0 - t) / (1.0 + t)).copysign(x)
}

impl std::str::FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tanh" => Ok(Activation::Tanh),
            "relu" => Ok(Activation::Relu),
            "identity" => Ok(Activation::Identity),
            other => Err(Error::domain(format!("unknown activation `{other}`"))),
        }
    }
}

/// One affine layer: `y = activation(x W + b)` with `W` of shape
/// `(in_dim x out_dim)`, row-major.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DenseLayer {
    pub weight: Matrix2D,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl DenseLayer {
    pub fn in_dim(&self) -> usize {
        self.weight.rows()
    }

    pub fn out_dim(&self) -> usize {
        self.weight.cols()
    }
}

/// A stack of dense layers with chained dimensions.
#[derive(Debug, Serialize, Deserialize)]
pub struct DenseNetwork {
    layers: Vec<DenseLayer>,
    input_dim: usize,
    output_dim: usize,
    /// Forward-call counter, used by tests asserting evaluation cost.
    #[serde(skip)]
    forward_calls: AtomicU64,
}

impl Clone for DenseNetwork {
    fn clone(&self) -> Self {
        DenseNetwork {
            layers: self.layers.clone(),
            input_dim: self.input_dim,
            output_dim: self.output_dim,
            forward_calls: AtomicU64::new(0),
        }
    }
}

impl PartialEq for DenseNetwork {
    fn eq(&self, other: &Self) -> bool {
        self.layers.iter().zip(&other.layers).all(|(a, b)| {
            a.weight == b.weight && a.bias == b.bias && a.activation == b.activation
        }) && self.layers.len() == other.layers.len()
    }
}

/// Activation cache produced by `forward`; `activations[0]` is the input
/// batch and `activations[k + 1]` the output of layer `k`.
#[derive(Debug)]
pub struct ForwardTape {
    activations: Vec<Matrix2D>,
    layer_dims: Vec<(usize, usize)>,
}

/// Per-layer parameter gradients plus the gradient w.r.t. the input batch.
#[derive(Debug, Clone)]
pub struct NetworkGradients {
    pub layers: Vec<LayerGradients>,
    pub input: Matrix2D,
}

#[derive(Debug, Clone)]
pub struct LayerGradients {
    pub weight: Matrix2D,
    pub bias: Vec<f64>,
}

impl NetworkGradients {
    pub fn zeros_like(net: &DenseNetwork) -> Self {
        NetworkGradients {
            layers: net
                .layers
                .iter()
                .map(|l| LayerGradients {
                    weight: Matrix2D::zeros(l.in_dim(), l.out_dim()),
                    bias: vec![0.0; l.out_dim()],
                })
                .collect(),
            input: Matrix2D::zeros(0, net.input_dim),
        }
    }

    pub fn global_norm(&self) -> f64 {
        let mut sq = 0.0;
        for l in &self.layers {
            sq += l.weight.data().iter().map(|v| v * v).sum::<f64>();
            sq += l.bias.iter().map(|v| v * v).sum::<f64>();
        }
        sq.sqrt()
    }

    pub fn scale(&mut self, factor: f64) {
        for l in &mut self.layers {
            for v in l.weight.data_mut() {
                *v *= factor;
            }
            for v in &mut l.bias {
                *v *= factor;
            }
        }
    }
}

impl DenseNetwork {
    /// Builds a network with the given layer dimensions and activations.
    /// `dims` has one more entry than `activations`; weights are initialized
    /// uniformly in `[-1/sqrt(fan_in), +1/sqrt(fan_in)]`, biases at zero.
    pub fn new<R: Rng + ?Sized>(dims: &[usize], activations: &[Activation], rng: &mut R) -> Self {
        assert!(dims.len() >= 2, "need at least one layer");
        assert_eq!(dims.len(), activations.len() + 1);
        let layers = dims
            .windows(2)
            .zip(activations)
            .map(|(w, &activation)| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let limit = 1.0 / (fan_in as f64).sqrt();
                DenseLayer {
                    weight: Matrix2D::from_fn(fan_in, fan_out, |_, _| {
                        rng.gen_range(-limit..limit)
                    }),
                    bias: vec![0.0; fan_out],
                    activation,
                }
            })
            .collect();
        DenseNetwork {
            layers,
            input_dim: dims[0],
            output_dim: *dims.last().unwrap(),
            forward_calls: AtomicU64::new(0),
        }
    }

    /// Standard MLP shape used by the learners: `nb_layers` hidden layers of
    /// `nb_neurons` units each, plus an identity output layer.
    pub fn mlp<R: Rng + ?Sized>(
        input_dim: usize,
        nb_layers: usize,
        nb_neurons: usize,
        output_dim: usize,
        hidden: Activation,
        rng: &mut R,
    ) -> Self {
        let mut dims = vec![input_dim];
        dims.extend(std::iter::repeat(nb_neurons).take(nb_layers));
        dims.push(output_dim);
        let mut acts = vec![hidden; nb_layers];
        acts.push(Activation::Identity);
        DenseNetwork::new(&dims, &acts, rng)
    }

    pub fn from_layers(layers: Vec<DenseLayer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::shape("network needs at least one layer"));
        }
        for pair in layers.windows(2) {
            if pair[0].out_dim() != pair[1].in_dim() {
                return Err(Error::shape(format!(
                    "layer dims do not chain: {} -> {}",
                    pair[0].out_dim(),
                    pair[1].in_dim()
                )));
            }
        }
        for l in &layers {
            if l.bias.len() != l.out_dim() {
                return Err(Error::shape("bias length does not match layer out_dim"));
            }
        }
        let input_dim = layers[0].in_dim();
        let output_dim = layers.last().unwrap().out_dim();
        Ok(DenseNetwork {
            layers,
            input_dim,
            output_dim,
            forward_calls: AtomicU64::new(0),
        })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [DenseLayer] {
        &mut self.layers
    }

    pub fn forward_calls(&self) -> u64 {
        self.forward_calls.load(Ordering::Relaxed)
    }

    pub fn parameters_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weight.is_finite() && l.bias.iter().all(|b| b.is_finite()))
    }

    pub fn shape_congruent(&self, other: &DenseNetwork) -> bool {
        self.layers.len() == other.layers.len()
            && self.layers.iter().zip(&other.layers).all(|(a, b)| {
                a.in_dim() == b.in_dim() && a.out_dim() == b.out_dim()
            })
    }

    /// Batched forward pass; returns the output batch and the activation tape
    /// needed for `backward`.
    pub fn forward(&self, batch: &Matrix2D) -> Result<(Matrix2D, ForwardTape)> {
        if batch.cols() != self.input_dim {
            return Err(Error::shape(format!(
                "forward input has {} cols, network expects {}",
                batch.cols(),
                self.input_dim
            )));
        }
        self.forward_calls.fetch_add(1, Ordering::Relaxed);
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(batch.clone());
        for layer in &self.layers {
            let mut z = activations.last().unwrap().matmul(&layer.weight);
            let rows = z.rows();
            // One specialized pass per activation so the inner loops stay
            // branch-free and vectorize.
            match layer.activation {
                Activation::Tanh => {
                    for r in 0..rows {
                        for (v, b) in z.row_mut(r).iter_mut().zip(&layer.bias) {
                            *v = tanh_fast(*v + b);
                        }
                    }
                }
                Activation::Relu => {
                    for r in 0..rows {
                        for (v, b) in z.row_mut(r).iter_mut().zip(&layer.bias) {
                            *v = (*v + b).max(0.0);
                        }
                    }
                }
                Activation::Identity => {
                    for r in 0..rows {
                        for (v, b) in z.row_mut(r).iter_mut().zip(&layer.bias) {
                            *v += b;
                        }
                    }
                }
            }
            activations.push(z);
        }
        let output = activations.last().unwrap().clone();
        let layer_dims = self
            .layers
            .iter()
            .map(|l| (l.in_dim(), l.out_dim()))
            .collect();
        Ok((output, ForwardTape {
            activations,
            layer_dims,
        }))
    }

    /// Convenience forward for a single input vector.
    pub fn forward_single(&self, input: &[f64]) -> Result<Vec<f64>> {
        let batch = Matrix2D::from_flat(1, input.len(), input.to_vec());
        let (out, _) = self.forward(&batch)?;
        Ok(out.row(0).to_vec())
    }

    /// Exact reverse-mode gradients of the forward map recorded in `tape`,
    /// contracted with `output_grad` (shape `batch x output_dim`).
    pub fn backward(&self, tape: &ForwardTape, output_grad: &Matrix2D) -> Result<NetworkGradients> {
        let expected_dims: Vec<(usize, usize)> = self
            .layers
            .iter()
            .map(|l| (l.in_dim(), l.out_dim()))
            .collect();
        if tape.layer_dims != expected_dims {
            return Err(Error::shape(
                "tape does not match this network (stale or from another net)".to_string(),
            ));
        }
        let batch_rows = tape.activations[0].rows();
        if output_grad.rows() != batch_rows || output_grad.cols() != self.output_dim {
            return Err(Error::shape(format!(
                "output_grad is {}x{}, expected {}x{}",
                output_grad.rows(),
                output_grad.cols(),
                batch_rows,
                self.output_dim
            )));
        }

        let mut layer_grads: Vec<LayerGradients> = Vec::with_capacity(self.layers.len());
        let mut upstream = output_grad.clone();
        for (k, layer) in self.layers.iter().enumerate().rev() {
            let inputs = &tape.activations[k];
            let outputs = &tape.activations[k + 1];
            // dZ = upstream (.) activation'(output)
            let mut dz = upstream;
            match layer.activation {
                Activation::Tanh => {
                    for (v, y) in dz.data_mut().iter_mut().zip(outputs.data()) {
                        *v *= 1.0 - y * y;
                    }
                }
                Activation::Relu => {
                    for (v, y) in dz.data_mut().iter_mut().zip(outputs.data()) {
                        if *y <= 0.0 {
                            *v = 0.0;
                        }
                    }
                }
                Activation::Identity => {}
            }
            let weight_grad = inputs.t_matmul(&dz);
            let mut bias_grad = vec![0.0; layer.out_dim()];
            for r in 0..dz.rows() {
                for (b, v) in bias_grad.iter_mut().zip(dz.row(r)) {
                    *b += v;
                }
            }
            upstream = dz.matmul_t(&layer.weight);
            layer_grads.push(LayerGradients {
                weight: weight_grad,
                bias: bias_grad,
            });
        }
        layer_grads.reverse();
        Ok(NetworkGradients {
            layers: layer_grads,
            input: upstream,
        })
    }
}

/// In-place soft update: every target parameter becomes
/// `tau * prediction + (1 - tau) * target`.
pub fn soft_update(target: &mut DenseNetwork, prediction: &DenseNetwork, tau: f64) -> Result<()> {
    if !(0.0 < tau && tau <= 1.0) {
        return Err(Error::domain(format!("tau must be in (0, 1], got {tau}")));
    }
    if !target.shape_congruent(prediction) {
        return Err(Error::shape("soft_update on incongruent networks".to_string()));
    }
    for (t, p) in target.layers.iter_mut().zip(&prediction.layers) {
        for (tw, pw) in t.weight.data_mut().iter_mut().zip(p.weight.data()) {
            *tw = tau * pw + (1.0 - tau) * *tw;
        }
        for (tb, pb) in t.bias.iter_mut().zip(&p.bias) {
            *tb = tau * pb + (1.0 - tau) * *tb;
        }
    }
    Ok(())
}
