//! A single agent's Q-functional: a coefficient network over a monomial
//! basis, scored against uniformly sampled candidate actions.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::basis::{enumerate_monomials, phi, q_from_coefficients, MonomialBasis};
use crate::error::{Error, Result};
use crate::matrix::Matrix2D;
use crate::network::{Activation, DenseNetwork};

/// Which of the agent's two parameter sets evaluates the actions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NetChoice {
    Prediction,
    Target,
}

/// Exploration noise applied on top of greedy selection during training.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExplorationPolicy {
    pub kind: ExplorationKind,
    pub gaussian_sigma: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    pub epsilon_decay_steps: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExplorationKind {
    Gaussian,
    EpsilonGreedy,
    None,
}

impl ExplorationPolicy {
    pub fn none() -> Self {
        ExplorationPolicy {
            kind: ExplorationKind::None,
            gaussian_sigma: 0.0,
            epsilon_start: 0.0,
            epsilon_end: 0.0,
            epsilon_decay_steps: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.gaussian_sigma < 0.0 {
            return Err(Error::domain("gaussian_sigma must be >= 0".to_string()));
        }
        if !(0.0..=1.0).contains(&self.epsilon_start)
            || !(0.0..=1.0).contains(&self.epsilon_end)
            || self.epsilon_end > self.epsilon_start
        {
            return Err(Error::domain(
                "need 0 <= epsilon_end <= epsilon_start <= 1".to_string(),
            ));
        }
        Ok(())
    }

    /// Linear decay from `epsilon_start` to `epsilon_end` over
    /// `epsilon_decay_steps`; a zero horizon means the end value everywhere.
    pub fn epsilon(&self, step: u64) -> f64 {
        if self.epsilon_decay_steps == 0 {
            return self.epsilon_end;
        }
        let progress = (step as f64 / self.epsilon_decay_steps as f64).min(1.0);
        self.epsilon_start + (self.epsilon_end - self.epsilon_start) * progress
    }
}

/// Index of the maximum value, ties resolved to the lowest index.
pub fn argmax_lowest(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Per-agent Q-functional with prediction and target coefficient networks.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QFunctionalAgent {
    obs_dim: usize,
    action_dim: usize,
    basis: MonomialBasis,
    pub prediction_net: DenseNetwork,
    pub target_net: DenseNetwork,
    sample_size: usize,
    action_low: f64,
    action_high: f64,
}

impl QFunctionalAgent {
    #[allow(clippy::too_many_arguments)]
    pub fn new<R: Rng + ?Sized>(
        obs_dim: usize,
        action_dim: usize,
        rank: u32,
        sample_size: usize,
        nb_layers: usize,
        nb_neurons: usize,
        hidden: Activation,
        action_low: f64,
        action_high: f64,
        rng: &mut R,
    ) -> Result<Self> {
        if sample_size == 0 {
            return Err(Error::domain("sample_size must be >= 1".to_string()));
        }
        if action_low > action_high {
            return Err(Error::domain("action_low must be <= action_high".to_string()));
        }
        let basis = enumerate_monomials(action_dim, rank)?;
        let prediction_net = DenseNetwork::mlp(
            obs_dim,
            nb_layers,
            nb_neurons,
            basis.size(),
            hidden,
            rng,
        );
        let target_net = prediction_net.clone();
        Ok(QFunctionalAgent {
            obs_dim,
            action_dim,
            basis,
            prediction_net,
            target_net,
            sample_size,
            action_low,
            action_high,
        })
    }

    pub fn from_parts(
        basis: MonomialBasis,
        prediction_net: DenseNetwork,
        target_net: DenseNetwork,
        sample_size: usize,
        action_low: f64,
        action_high: f64,
    ) -> Result<Self> {
        if prediction_net.output_dim() != basis.size() || !prediction_net.shape_congruent(&target_net) {
            return Err(Error::shape(
                "network output must match basis size, prediction and target congruent".to_string(),
            ));
        }
        Ok(QFunctionalAgent {
            obs_dim: prediction_net.input_dim(),
            action_dim: basis.action_dim(),
            basis,
            prediction_net,
            target_net,
            sample_size,
            action_low,
            action_high,
        })
    }

    pub fn obs_dim(&self) -> usize {
        self.obs_dim
    }

    pub fn action_dim(&self) -> usize {
        self.action_dim
    }

    pub fn basis(&self) -> &MonomialBasis {
        &self.basis
    }

    pub fn sample_size(&self) -> usize {
        self.sample_size
    }

    pub fn action_bounds(&self) -> (f64, f64) {
        (self.action_low, self.action_high)
    }

    fn net(&self, which: NetChoice) -> &DenseNetwork {
        match which {
            NetChoice::Prediction => &self.prediction_net,
            NetChoice::Target => &self.target_net,
        }
    }

    /// Draws `sample_size` candidate actions, each component i.i.d. uniform
    /// on the action box.
    pub fn sample_actions<R: Rng + ?Sized>(&self, rng: &mut R) -> Matrix2D {
        Matrix2D::from_fn(self.sample_size, self.action_dim, |_, _| {
            rng.gen_range(self.action_low..=self.action_high)
        })
    }

    /// Q-values of `actions` at `obs`. One coefficient-network forward per
    /// call regardless of how many actions are scored.
    pub fn evaluate_actions(
        &self,
        obs: &[f64],
        actions: &Matrix2D,
        which: NetChoice,
    ) -> Result<Vec<f64>> {
        if obs.len() != self.obs_dim {
            return Err(Error::shape(format!(
                "obs has length {}, agent expects {}",
                obs.len(),
                self.obs_dim
            )));
        }
        let batch = Matrix2D::from_flat(1, self.obs_dim, obs.to_vec());
        let (coeffs, _) = self.net(which).forward(&batch)?;
        let features = phi(&self.basis, actions)?;
        let q = q_from_coefficients(&coeffs, &features)?;
        Ok(q.row(0).to_vec())
    }

    /// Samples candidates, scores them under the prediction network, and
    /// returns the best action with its Q-value.
    pub fn greedy_action<R: Rng + ?Sized>(
        &self,
        obs: &[f64],
        rng: &mut R,
    ) -> Result<(Vec<f64>, f64)> {
        let actions = self.sample_actions(rng);
        let q = self.evaluate_actions(obs, &actions, NetChoice::Prediction)?;
        let best = argmax_lowest(&q);
        Ok((actions.row(best).to_vec(), q[best]))
    }

    /// Greedy selection with the exploration policy applied. Candidate draws
    /// come from `sample_rng`, noise and epsilon draws from `noise_rng`, so
    /// the harness can keep the two streams independent.
    pub fn explore_action<R: Rng + ?Sized, S: Rng + ?Sized>(
        &self,
        policy: &ExplorationPolicy,
        obs: &[f64],
        step: u64,
        sample_rng: &mut R,
        noise_rng: &mut S,
    ) -> Result<Vec<f64>> {
        match policy.kind {
            ExplorationKind::None => Ok(self.greedy_action(obs, sample_rng)?.0),
            ExplorationKind::Gaussian => {
                let (mut action, _) = self.greedy_action(obs, sample_rng)?;
                let normal = Normal::new(0.0, policy.gaussian_sigma)
                    .map_err(|e| Error::domain(e.to_string()))?;
                for a in &mut action {
                    *a = (*a + normal.sample(noise_rng)).clamp(self.action_low, self.action_high);
                }
                Ok(action)
            }
            ExplorationKind::EpsilonGreedy => {
                let eps = policy.epsilon(step);
                if noise_rng.gen::<f64>() < eps {
                    Ok((0..self.action_dim)
                        .map(|_| noise_rng.gen_range(self.action_low..=self.action_high))
                        .collect())
                } else {
                    Ok(self.greedy_action(obs, sample_rng)?.0)
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn test_agent(seed: u64, sample_size: usize) -> QFunctionalAgent {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        QFunctionalAgent::new(
            4, 2, 2, sample_size, 2, 16,
            Activation::Tanh,
            -1.0, 1.0,
            &mut rng,
        )
        .unwrap()
    }

    #[test]
    fn sampled_actions_fill_the_box() {
        let agent = test_agent(1, 1000);
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        let actions = agent.sample_actions(&mut rng);
        assert_eq!((actions.rows(), actions.cols()), (1000, 2));
        assert!(actions.data().iter().all(|a| (-1.0..=1.0).contains(a)));
    }

    #[test]
    fn degenerate_action_range_samples_zeros() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let agent = QFunctionalAgent::new(
            4, 2, 2, 10, 2, 8,
            Activation::Tanh,
            0.0, 0.0,
            &mut rng,
        )
        .unwrap();
        let actions = agent.sample_actions(&mut rng);
        assert!(actions.data().iter().all(|a| *a == 0.0));
    }

    #[test]
    fn sampling_is_deterministic_given_rng_state() {
        let agent = test_agent(4, 50);
        let a = agent.sample_actions(&mut ChaCha12Rng::seed_from_u64(7));
        let b = agent.sample_actions(&mut ChaCha12Rng::seed_from_u64(7));
        assert_eq!(a, b);
    }

    #[test]
    fn zero_initialized_output_layer_scores_everything_zero() {
        let mut agent = test_agent(5, 20);
        let last = agent.prediction_net.layers().len() - 1;
        let layer = &mut agent.prediction_net.layers_mut()[last];
        for v in layer.weight.data_mut() {
            *v = 0.0;
        }
        // Biases are zero from init already.
        let mut rng = ChaCha12Rng::seed_from_u64(6);
        let actions = agent.sample_actions(&mut rng);
        let q = agent
            .evaluate_actions(&[0.1, -0.2, 0.3, 0.4], &actions, NetChoice::Prediction)
            .unwrap();
        assert!(q.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn duplicate_actions_get_duplicate_q_values() {
        let agent = test_agent(8, 4);
        let actions = Matrix2D::from_rows(&[
            vec![0.3, -0.5],
            vec![0.3, -0.5],
            vec![0.9, 0.1],
            vec![0.9, 0.1],
        ]);
        let q = agent
            .evaluate_actions(&[0.1, 0.2, 0.3, 0.4], &actions, NetChoice::Prediction)
            .unwrap();
        assert_eq!(q[0], q[1]);
        assert_eq!(q[2], q[3]);
    }

    #[test]
    fn evaluation_matches_per_action_oracle() {
        let agent = test_agent(9, 50);
        let obs = [0.2, -0.4, 0.6, -0.8];
        let mut rng = ChaCha12Rng::seed_from_u64(10);
        let actions = agent.sample_actions(&mut rng);
        let q = agent
            .evaluate_actions(&obs, &actions, NetChoice::Prediction)
            .unwrap();
        // Oracle: forward once, then dot the coefficients with monomials
        // computed by explicit loops per action.
        let coeffs = agent.prediction_net.forward_single(&obs).unwrap();
        for i in 0..50 {
            let a = actions.row(i);
            let mut expect = 0.0;
            for (j, exps) in agent.basis().exponents().iter().enumerate() {
                let mut mono = 1.0;
                for (dim, &e) in exps.iter().enumerate() {
                    for _ in 0..e {
                        mono *= a[dim];
                    }
                }
                expect += coeffs[j] * mono;
            }
            assert!((q[i] - expect).abs() < 1e-12, "action {i}: {} vs {expect}", q[i]);
        }
    }

    #[test]
    fn one_forward_per_evaluation_regardless_of_k() {
        let agent = test_agent(11, 500);
        let before = agent.prediction_net.forward_calls();
        let mut rng = ChaCha12Rng::seed_from_u64(12);
        let actions = agent.sample_actions(&mut rng);
        agent
            .evaluate_actions(&[0.0, 0.0, 0.0, 0.0], &actions, NetChoice::Prediction)
            .unwrap();
        assert_eq!(agent.prediction_net.forward_calls(), before + 1);
    }

    #[test]
    fn greedy_action_equals_brute_force_rescan() {
        let agent = test_agent(13, 200);
        let obs = [0.5, 0.1, -0.3, 0.7];
        let mut rng_a = ChaCha12Rng::seed_from_u64(14);
        let mut rng_b = rng_a.clone();
        let (action, q_best) = agent.greedy_action(&obs, &mut rng_a).unwrap();
        let samples = agent.sample_actions(&mut rng_b);
        let q = agent
            .evaluate_actions(&obs, &samples, NetChoice::Prediction)
            .unwrap();
        let mut best = 0;
        for (i, v) in q.iter().enumerate() {
            if *v > q[best] {
                best = i;
            }
        }
        assert_eq!(action, samples.row(best).to_vec());
        assert_eq!(q_best, q[best]);
    }

    #[test]
    fn constant_q_function_selects_sample_index_zero() {
        let mut agent = test_agent(15, 30);
        for layer in agent.prediction_net.layers_mut() {
            for v in layer.weight.data_mut() {
                *v = 0.0;
            }
        }
        let mut rng_a = ChaCha12Rng::seed_from_u64(16);
        let mut rng_b = rng_a.clone();
        let (action, _) = agent.greedy_action(&[0.0; 4], &mut rng_a).unwrap();
        let samples = agent.sample_actions(&mut rng_b);
        assert_eq!(action, samples.row(0).to_vec());
    }

    #[test]
    fn single_sample_is_returned_directly() {
        let agent = test_agent(17, 1);
        let mut rng_a = ChaCha12Rng::seed_from_u64(18);
        let mut rng_b = rng_a.clone();
        let (action, _) = agent.greedy_action(&[0.0; 4], &mut rng_a).unwrap();
        let samples = agent.sample_actions(&mut rng_b);
        assert_eq!(action, samples.row(0).to_vec());
    }

    #[test]
    fn zero_sigma_gaussian_matches_greedy() {
        let agent = test_agent(19, 40);
        let policy = ExplorationPolicy {
            kind: ExplorationKind::Gaussian,
            gaussian_sigma: 0.0,
            epsilon_start: 0.0,
            epsilon_end: 0.0,
            epsilon_decay_steps: 0,
        };
        let obs = [0.1, 0.2, 0.3, 0.4];
        let mut sample_a = ChaCha12Rng::seed_from_u64(20);
        let mut noise = ChaCha12Rng::seed_from_u64(21);
        let explored = agent
            .explore_action(&policy, &obs, 0, &mut sample_a, &mut noise)
            .unwrap();
        let mut sample_b = ChaCha12Rng::seed_from_u64(20);
        let (greedy, _) = agent.greedy_action(&obs, &mut sample_b).unwrap();
        assert_eq!(explored, greedy);
    }

    #[test]
    fn epsilon_one_acts_uniformly() {
        let agent = test_agent(22, 5);
        let policy = ExplorationPolicy {
            kind: ExplorationKind::EpsilonGreedy,
            gaussian_sigma: 0.0,
            epsilon_start: 1.0,
            epsilon_end: 1.0,
            epsilon_decay_steps: 0,
        };
        let mut sample_rng = ChaCha12Rng::seed_from_u64(23);
        let mut noise_rng = ChaCha12Rng::seed_from_u64(24);
        let n = 100_000;
        let mut sums = [0.0f64; 2];
        for _ in 0..n {
            let a = agent
                .explore_action(&policy, &[0.0; 4], 0, &mut sample_rng, &mut noise_rng)
                .unwrap();
            sums[0] += a[0];
            sums[1] += a[1];
        }
        // Mean of U(-1, 1) is 0 with std 1/sqrt(3); the empirical mean must
        // sit within 3 standard errors.
        let tol = 3.0 / (3.0f64).sqrt() / (n as f64).sqrt();
        assert!(sums[0].abs() / n as f64 <= tol);
        assert!(sums[1].abs() / n as f64 <= tol);
    }

    #[test]
    fn gaussian_noise_is_clamped_at_the_boundary() {
        // Degenerate box [1, 1]: greedy action is exactly 1, any noise must
        // clamp back to 1.
        let mut rng = ChaCha12Rng::seed_from_u64(25);
        let agent = QFunctionalAgent::new(
            2, 2, 2, 5, 1, 4,
            Activation::Tanh,
            1.0, 1.0,
            &mut rng,
        )
        .unwrap();
        let policy = ExplorationPolicy {
            kind: ExplorationKind::Gaussian,
            gaussian_sigma: 0.5,
            epsilon_start: 0.0,
            epsilon_end: 0.0,
            epsilon_decay_steps: 0,
        };
        let mut sample_rng = ChaCha12Rng::seed_from_u64(26);
        let mut noise_rng = ChaCha12Rng::seed_from_u64(27);
        for _ in 0..50 {
            let a = agent
                .explore_action(&policy, &[0.0, 0.0], 0, &mut sample_rng, &mut noise_rng)
                .unwrap();
            assert_eq!(a, vec![1.0, 1.0]);
        }
    }

    #[test]
    fn explore_outputs_stay_inside_the_action_box() {
        let agent = test_agent(28, 20);
        let policy = ExplorationPolicy {
            kind: ExplorationKind::Gaussian,
            gaussian_sigma: 2.0,
            epsilon_start: 0.0,
            epsilon_end: 0.0,
            epsilon_decay_steps: 0,
        };
        let mut sample_rng = ChaCha12Rng::seed_from_u64(29);
        let mut noise_rng = ChaCha12Rng::seed_from_u64(30);
        for _ in 0..200 {
            let a = agent
                .explore_action(&policy, &[0.0; 4], 0, &mut sample_rng, &mut noise_rng)
                .unwrap();
            assert!(a.iter().all(|v| (-1.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn permuting_samples_permutes_q_and_keeps_the_selection() {
        let agent = test_agent(31, 16);
        let obs = [0.4, -0.1, 0.9, 0.0];
        let mut rng = ChaCha12Rng::seed_from_u64(32);
        let samples = agent.sample_actions(&mut rng);
        let q = agent
            .evaluate_actions(&obs, &samples, NetChoice::Prediction)
            .unwrap();
        let perm: Vec<usize> = (0..16).rev().collect();
        let permuted = Matrix2D::from_rows(
            &perm.iter().map(|&i| samples.row(i).to_vec()).collect::<Vec<_>>(),
        );
        let q_perm = agent
            .evaluate_actions(&obs, &permuted, NetChoice::Prediction)
            .unwrap();
        for (new_idx, &old_idx) in perm.iter().enumerate() {
            assert_eq!(q_perm[new_idx], q[old_idx]);
        }
        let best = argmax_lowest(&q);
        let best_perm = argmax_lowest(&q_perm);
        assert_eq!(permuted.row(best_perm), samples.row(best));
    }

    #[test]
    fn epsilon_decays_linearly() {
        let policy = ExplorationPolicy {
            kind: ExplorationKind::EpsilonGreedy,
            gaussian_sigma: 0.0,
            epsilon_start: 1.0,
            epsilon_end: 0.05,
            epsilon_decay_steps: 1000,
        };
        assert_eq!(policy.epsilon(0), 1.0);
        assert!((policy.epsilon(500) - 0.525).abs() < 1e-12);
        assert!((policy.epsilon(1000) - 0.05).abs() < 1e-12);
        assert!((policy.epsilon(5000) - 0.05).abs() < 1e-12);
    }
}
