//! Combines per-agent Q-values into a team value for centralized training.
//!
//! Two variants: a parameterless additive mixer, and a state-conditioned
//! monotonic mixer whose per-agent weights pass through an absolute value so
//! the team value can never decrease when an agent's Q-value increases.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix2D;
use crate::network::{soft_update, Activation, DenseNetwork, NetworkGradients};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MixerKind {
    Sum,
    Monotonic,
}

impl std::str::FromStr for MixerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sum" => Ok(MixerKind::Sum),
            "monotonic" => Ok(MixerKind::Monotonic),
            other => Err(Error::domain(format!("unknown mixer kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Mixer {
    Sum,
    Monotonic(MonotonicMixer),
}

/// State-conditioned monotonic mixer: `q_tot = sum_i |w_i(s)| q_i + b(s)`
/// with both hypernetworks reading the concatenated observations.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MonotonicMixer {
    pub hyper_w: DenseNetwork,
    pub hyper_b: DenseNetwork,
    n_agents: usize,
    joint_obs_dim: usize,
}

/// Gradients of the mixed value: always w.r.t. the per-agent Q-values, plus
/// hypernetwork parameter gradients for the monotonic variant.
#[derive(Debug)]
pub struct MixGradients {
    pub agent_qs: Matrix2D,
    pub hyper_w: Option<NetworkGradients>,
    pub hyper_b: Option<NetworkGradients>,
}

impl MonotonicMixer {
    pub fn new<R: Rng + ?Sized>(
        joint_obs_dim: usize,
        n_agents: usize,
        hidden_dim: usize,
        rng: &mut R,
    ) -> Self {
        let hyper_w = DenseNetwork::new(
            &[joint_obs_dim, hidden_dim, n_agents],
            &[Activation::Relu, Activation::Identity],
            rng,
        );
        let hyper_b = DenseNetwork::new(
            &[joint_obs_dim, hidden_dim, 1],
            &[Activation::Relu, Activation::Identity],
            rng,
        );
        MonotonicMixer {
            hyper_w,
            hyper_b,
            n_agents,
            joint_obs_dim,
        }
    }

    pub fn n_agents(&self) -> usize {
        self.n_agents
    }
}

impl Mixer {
    pub fn kind(&self) -> MixerKind {
        match self {
            Mixer::Sum => MixerKind::Sum,
            Mixer::Monotonic(_) => MixerKind::Monotonic,
        }
    }

    /// Team value per batch row.
    pub fn mix(&self, agent_qs: &Matrix2D, joint_obs: &Matrix2D) -> Result<Vec<f64>> {
        match self {
            Mixer::Sum => Ok((0..agent_qs.rows())
                .map(|j| agent_qs.row(j).iter().sum())
                .collect()),
            Mixer::Monotonic(m) => {
                if agent_qs.cols() != m.n_agents {
                    return Err(Error::shape(format!(
                        "agent_qs has {} columns, mixer expects {}",
                        agent_qs.cols(),
                        m.n_agents
                    )));
                }
                if joint_obs.rows() != agent_qs.rows() || joint_obs.cols() != m.joint_obs_dim {
                    return Err(Error::shape(format!(
                        "joint_obs is {}x{}, mixer expects {}x{}",
                        joint_obs.rows(),
                        joint_obs.cols(),
                        agent_qs.rows(),
                        m.joint_obs_dim
                    )));
                }
                let (w, _) = m.hyper_w.forward(joint_obs)?;
                let (b, _) = m.hyper_b.forward(joint_obs)?;
                Ok((0..agent_qs.rows())
                    .map(|j| {
                        let mut acc = b.get(j, 0);
                        for i in 0..m.n_agents {
                            acc += w.get(j, i).abs() * agent_qs.get(j, i);
                        }
                        acc
                    })
                    .collect())
            }
        }
    }

    /// Backpropagates `upstream` (one value per batch row) through the mix.
    pub fn mix_gradient(
        &self,
        agent_qs: &Matrix2D,
        joint_obs: &Matrix2D,
        upstream: &[f64],
    ) -> Result<MixGradients> {
        if upstream.len() != agent_qs.rows() {
            return Err(Error::shape(format!(
                "upstream has {} entries for {} rows",
                upstream.len(),
                agent_qs.rows()
            )));
        }
        match self {
            Mixer::Sum => {
                let grads = Matrix2D::from_fn(agent_qs.rows(), agent_qs.cols(), |j, _| upstream[j]);
                Ok(MixGradients {
                    agent_qs: grads,
                    hyper_w: None,
                    hyper_b: None,
                })
            }
            Mixer::Monotonic(m) => {
                if agent_qs.cols() != m.n_agents || joint_obs.rows() != agent_qs.rows() {
                    return Err(Error::shape("mix_gradient shape mismatch".to_string()));
                }
                let (w, w_tape) = m.hyper_w.forward(joint_obs)?;
                let (_, b_tape) = m.hyper_b.forward(joint_obs)?;
                let q_grads = Matrix2D::from_fn(agent_qs.rows(), m.n_agents, |j, i| {
                    upstream[j] * w.get(j, i).abs()
                });
                // d q_tot / d w_raw = q_i * sign(w_raw); sign(0) taken as 0.
                let w_out_grad = Matrix2D::from_fn(agent_qs.rows(), m.n_agents, |j, i| {
                    upstream[j] * agent_qs.get(j, i) * sign(w.get(j, i))
                });
                let b_out_grad = Matrix2D::from_fn(agent_qs.rows(), 1, |j, _| upstream[j]);
                Ok(MixGradients {
                    agent_qs: q_grads,
                    hyper_w: Some(m.hyper_w.backward(&w_tape, &w_out_grad)?),
                    hyper_b: Some(m.hyper_b.backward(&b_tape, &b_out_grad)?),
                })
            }
        }
    }

    /// Soft-updates this (target) mixer toward `prediction`. The additive
    /// mixer has no parameters, so this is a no-op for it.
    pub fn soft_update_from(&mut self, prediction: &Mixer, tau: f64) -> Result<()> {
        match (self, prediction) {
            (Mixer::Sum, Mixer::Sum) => Ok(()),
            (Mixer::Monotonic(t), Mixer::Monotonic(p)) => {
                soft_update(&mut t.hyper_w, &p.hyper_w, tau)?;
                soft_update(&mut t.hyper_b, &p.hyper_b, tau)
            }
            _ => Err(Error::shape("mixer kinds differ in soft update".to_string())),
        }
    }

    pub fn parameters_finite(&self) -> bool {
        match self {
            Mixer::Sum => true,
            Mixer::Monotonic(m) => m.hyper_w.parameters_finite() && m.hyper_b.parameters_finite(),
        }
    }
}

#[inline]
fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn sum_mixer_adds_rows_exactly() {
        let qs = Matrix2D::from_rows(&[vec![1.0, 2.0, -0.5]]);
        let out = Mixer::Sum.mix(&qs, &Matrix2D::zeros(1, 0)).unwrap();
        assert_eq!(out, vec![2.5]);
    }

    #[test]
    fn sum_mixer_is_identity_for_one_agent() {
        let qs = Matrix2D::from_rows(&[vec![3.25], vec![-1.5]]);
        let out = Mixer::Sum.mix(&qs, &Matrix2D::zeros(2, 0)).unwrap();
        assert_eq!(out, vec![3.25, -1.5]);
    }

    #[test]
    fn sum_mixer_matches_independent_summation_oracle_bitwise() {
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let qs = Matrix2D::from_fn(32, 5, |_, _| rng.gen_range(-10.0..10.0));
        let out = Mixer::Sum.mix(&qs, &Matrix2D::zeros(32, 0)).unwrap();
        for j in 0..32 {
            let mut acc = 0.0;
            for i in 0..5 {
                acc += qs.get(j, i);
            }
            assert_eq!(out[j], acc);
        }
    }

    fn forced_unit_mixer(joint_obs_dim: usize, n: usize) -> MonotonicMixer {
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        let mut m = MonotonicMixer::new(joint_obs_dim, n, 8, &mut rng);
        for net in [&mut m.hyper_w, &mut m.hyper_b] {
            for layer in net.layers_mut() {
                for v in layer.weight.data_mut() {
                    *v = 0.0;
                }
                for v in &mut layer.bias {
                    *v = 0.0;
                }
            }
        }
        let last = m.hyper_w.layers().len() - 1;
        for v in &mut m.hyper_w.layers_mut()[last].bias {
            *v = 1.0;
        }
        m
    }

    #[test]
    fn monotonic_with_unit_weights_reduces_to_sum() {
        let mixer = Mixer::Monotonic(forced_unit_mixer(4, 3));
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let qs = Matrix2D::from_fn(10, 3, |_, _| rng.gen_range(-5.0..5.0));
        let obs = Matrix2D::from_fn(10, 4, |_, _| rng.gen_range(-1.0..1.0));
        let got = mixer.mix(&qs, &obs).unwrap();
        let expect = Mixer::Sum.mix(&qs, &obs).unwrap();
        for (a, b) in got.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn sum_gradient_is_all_ones_under_unit_upstream() {
        let qs = Matrix2D::zeros(4, 3);
        let grads = Mixer::Sum
            .mix_gradient(&qs, &Matrix2D::zeros(4, 0), &[1.0; 4])
            .unwrap();
        assert!(grads.agent_qs.data().iter().all(|v| *v == 1.0));
        assert!(grads.hyper_w.is_none());
    }

    #[test]
    fn monotonic_q_gradients_are_nonnegative() {
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        let mixer = Mixer::Monotonic(MonotonicMixer::new(6, 3, 16, &mut rng));
        for trial in 0..1000 {
            let qs = Matrix2D::from_fn(1, 3, |_, _| rng.gen_range(-5.0..5.0));
            let obs = Matrix2D::from_fn(1, 6, |_, _| rng.gen_range(-1.0..1.0));
            let grads = mixer.mix_gradient(&qs, &obs, &[1.0]).unwrap();
            assert!(
                grads.agent_qs.data().iter().all(|v| *v >= 0.0),
                "trial {trial}"
            );
        }
    }

    #[test]
    fn increasing_any_agent_q_never_decreases_the_team_value() {
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let mixer = Mixer::Monotonic(MonotonicMixer::new(5, 4, 16, &mut rng));
        for _ in 0..1000 {
            let qs = Matrix2D::from_fn(1, 4, |_, _| rng.gen_range(-5.0..5.0));
            let obs = Matrix2D::from_fn(1, 5, |_, _| rng.gen_range(-1.0..1.0));
            let base = mixer.mix(&qs, &obs).unwrap()[0];
            let i = rng.gen_range(0..4);
            let mut bumped = qs.clone();
            bumped.set(0, i, bumped.get(0, i) + rng.gen_range(0.0..2.0));
            let after = mixer.mix(&bumped, &obs).unwrap()[0];
            assert!(after >= base - 1e-12);
        }
    }

    #[test]
    fn monotonic_parameter_gradients_match_finite_differences() {
        let mut rng = ChaCha12Rng::seed_from_u64(6);
        let mut mono = MonotonicMixer::new(4, 2, 8, &mut rng);
        let qs = Matrix2D::from_fn(3, 2, |_, _| rng.gen_range(-2.0..2.0));
        let obs = Matrix2D::from_fn(3, 4, |_, _| rng.gen_range(-1.0..1.0));
        let upstream = vec![0.7, -1.3, 0.4];

        let mixer = Mixer::Monotonic(mono.clone());
        let grads = mixer.mix_gradient(&qs, &obs, &upstream).unwrap();
        let loss = |m: &MonotonicMixer| -> f64 {
            Mixer::Monotonic(m.clone())
                .mix(&qs, &obs)
                .unwrap()
                .iter()
                .zip(&upstream)
                .map(|(q, u)| q * u)
                .sum()
        };

        let h = 1e-5;
        let analytic_w = grads.hyper_w.unwrap();
        for k in 0..mono.hyper_w.layers().len() {
            for idx in 0..analytic_w.layers[k].weight.data().len() {
                let orig = mono.hyper_w.layers()[k].weight.data()[idx];
                mono.hyper_w.layers_mut()[k].weight.data_mut()[idx] = orig + h;
                let plus = loss(&mono);
                mono.hyper_w.layers_mut()[k].weight.data_mut()[idx] = orig - h;
                let minus = loss(&mono);
                mono.hyper_w.layers_mut()[k].weight.data_mut()[idx] = orig;
                let numeric = (plus - minus) / (2.0 * h);
                let analytic = analytic_w.layers[k].weight.data()[idx];
                let denom = analytic.abs().max(numeric.abs()).max(1e-5);
                assert!(
                    (analytic - numeric).abs() / denom <= 1e-4,
                    "hyper_w layer {k} idx {idx}: {analytic} vs {numeric}"
                );
            }
        }
        let analytic_b = grads.hyper_b.unwrap();
        for k in 0..mono.hyper_b.layers().len() {
            for idx in 0..analytic_b.layers[k].bias.len() {
                let orig = mono.hyper_b.layers()[k].bias[idx];
                mono.hyper_b.layers_mut()[k].bias[idx] = orig + h;
                let plus = loss(&mono);
                mono.hyper_b.layers_mut()[k].bias[idx] = orig - h;
                let minus = loss(&mono);
                mono.hyper_b.layers_mut()[k].bias[idx] = orig;
                let numeric = (plus - minus) / (2.0 * h);
                let analytic = analytic_b.layers[k].bias[idx];
                let denom = analytic.abs().max(numeric.abs()).max(1e-5);
                assert!(
                    (analytic - numeric).abs() / denom <= 1e-4,
                    "hyper_b layer {k} bias {idx}: {analytic} vs {numeric}"
                );
            }
        }
    }

    #[test]
    fn soft_update_rejects_mismatched_kinds() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let mut sum = Mixer::Sum;
        let mono = Mixer::Monotonic(MonotonicMixer::new(3, 2, 4, &mut rng));
        assert!(sum.soft_update_from(&mono, 0.5).is_err());
    }
}
