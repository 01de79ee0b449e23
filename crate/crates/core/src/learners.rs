//! The three learners: mixed, independent, and centralized Q-functionals.
//!
//! All three share the same building blocks (coefficient networks over a
//! monomial basis, uniform candidate sampling, soft target updates) and
//! differ only in how the temporal-difference target is formed:
//!
//! * MQF mixes per-agent values into a team value and trains every agent's
//!   network through one centralized squared TD error on the summed reward.
//! * IQF trains each agent on its own reward with no mixing.
//! * CQF trains a single network over the concatenated observation and
//!   action spaces.
//!
//! Execution is decentralized for MQF and IQF: agent i's action depends only
//! on agent i's observation.

use rand::Rng;

use crate::basis::{phi, q_from_coefficients, q_per_row};
use crate::error::{Error, Result};
use crate::matrix::Matrix2D;
use crate::mixer::{Mixer, MixerKind, MonotonicMixer};
use crate::network::{soft_update, Activation, NetworkGradients};
use crate::optim::{adam_step, AdamState};
use crate::qfunctional::{ExplorationPolicy, QFunctionalAgent};
use crate::replay::{ReplayBuffer, Transition};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LearnerKind {
    Mqf,
    Iqf,
    Cqf,
}

impl std::str::FromStr for LearnerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mqf" => Ok(LearnerKind::Mqf),
            "iqf" => Ok(LearnerKind::Iqf),
            "cqf" => Ok(LearnerKind::Cqf),
            other => Err(Error::domain(format!("unknown learner `{other}`"))),
        }
    }
}

impl LearnerKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            LearnerKind::Mqf => "mqf",
            LearnerKind::Iqf => "iqf",
            LearnerKind::Cqf => "cqf",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActionMode {
    Explore,
    Greedy,
}

/// Observation and action widths per agent, as reported by a scenario.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnvDims {
    pub obs_dims: Vec<usize>,
    pub action_dims: Vec<usize>,
}

impl EnvDims {
    pub fn num_agents(&self) -> usize {
        self.obs_dims.len()
    }

    pub fn obs_total(&self) -> usize {
        self.obs_dims.iter().sum()
    }

    pub fn action_total(&self) -> usize {
        self.action_dims.iter().sum()
    }
}

/// Hyperparameters shared by every learner kind.
#[derive(Debug, Clone)]
pub struct LearnerConfig {
    pub gamma: f64,
    pub tau: f64,
    pub batch_size: usize,
    pub buffer_size: usize,
    pub sample_size: usize,
    pub rank: u32,
    pub nb_layers: usize,
    pub nb_neurons: usize,
    pub activation: Activation,
    pub learning_rate: f64,
    pub mixer: MixerKind,
    pub mixer_hidden_dim: usize,
    pub exploration: ExplorationPolicy,
    /// Global-norm gradient clip; zero disables clipping.
    pub grad_clip_norm: f64,
    pub action_low: f64,
    pub action_high: f64,
}

impl LearnerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::config("gamma", "must be in [0, 1)"));
        }
        if !(0.0 < self.tau && self.tau <= 1.0) {
            return Err(Error::config("tau", "must be in (0, 1]"));
        }
        for (name, v) in [
            ("batch_size", self.batch_size),
            ("buffer_size", self.buffer_size),
            ("sample_size", self.sample_size),
            ("nb_layers", self.nb_layers),
            ("nb_neurons", self.nb_neurons),
        ] {
            if v == 0 {
                return Err(Error::config(name, "must be positive"));
            }
        }
        if self.learning_rate <= 0.0 {
            return Err(Error::config("learning_rate", "must be positive"));
        }
        if self.grad_clip_norm < 0.0 {
            return Err(Error::config("grad_clip_norm", "must be >= 0"));
        }
        self.exploration.validate()?;
        Ok(())
    }
}

/// A minibatch reshaped for batched linear algebra, one matrix per agent.
pub struct JointBatch {
    pub obs: Vec<Matrix2D>,
    pub actions: Vec<Matrix2D>,
    pub rewards: Matrix2D,
    pub next_obs: Vec<Matrix2D>,
    /// 1.0 for non-terminal rows, 0.0 for terminal ones.
    pub not_done: Vec<f64>,
    pub joint_obs: Matrix2D,
    pub next_joint_obs: Matrix2D,
}

impl JointBatch {
    pub fn rows(&self) -> usize {
        self.rewards.rows()
    }

    fn from_transitions(batch: &[&Transition], dims: &EnvDims) -> JointBatch {
        let b = batch.len();
        let n = dims.num_agents();
        let mut obs = Vec::with_capacity(n);
        let mut actions = Vec::with_capacity(n);
        let mut next_obs = Vec::with_capacity(n);
        for i in 0..n {
            obs.push(Matrix2D::from_fn(b, dims.obs_dims[i], |j, c| {
                batch[j].obs[i][c]
            }));
            actions.push(Matrix2D::from_fn(b, dims.action_dims[i], |j, c| {
                batch[j].actions[i][c]
            }));
            next_obs.push(Matrix2D::from_fn(b, dims.obs_dims[i], |j, c| {
                batch[j].next_obs[i][c]
            }));
        }
        let rewards = Matrix2D::from_fn(b, n, |j, i| batch[j].rewards[i]);
        let not_done: Vec<f64> = batch
            .iter()
            .map(|t| if t.done { 0.0 } else { 1.0 })
            .collect();
        let joint_obs = concat_cols(&obs);
        let next_joint_obs = concat_cols(&next_obs);
        JointBatch {
            obs,
            actions,
            rewards,
            next_obs,
            not_done,
            joint_obs,
            next_joint_obs,
        }
    }
}

fn concat_cols(parts: &[Matrix2D]) -> Matrix2D {
    let rows = parts[0].rows();
    let cols: usize = parts.iter().map(|p| p.cols()).sum();
    let mut out = Matrix2D::zeros(rows, cols);
    for r in 0..rows {
        let row = out.row_mut(r);
        let mut at = 0;
        for p in parts {
            row[at..at + p.cols()].copy_from_slice(p.row(r));
            at += p.cols();
        }
    }
    out
}

fn build_agents<R: Rng + ?Sized>(
    dims: &EnvDims,
    cfg: &LearnerConfig,
    rng: &mut R,
) -> Result<Vec<QFunctionalAgent>> {
    (0..dims.num_agents())
        .map(|i| {
            QFunctionalAgent::new(
                dims.obs_dims[i],
                dims.action_dims[i],
                cfg.rank,
                cfg.sample_size,
                cfg.nb_layers,
                cfg.nb_neurons,
                cfg.activation,
                cfg.action_low,
                cfg.action_high,
                rng,
            )
        })
        .collect()
}

/// Per-agent action selection (decentralized execution): agent i sees only
/// its own observation slice.
fn decentralized_act<R: Rng + ?Sized, S: Rng + ?Sized>(
    agents: &[QFunctionalAgent],
    exploration: &ExplorationPolicy,
    joint_obs: &[Vec<f64>],
    step: u64,
    mode: ActionMode,
    sample_rng: &mut R,
    noise_rng: &mut S,
) -> Result<Vec<Vec<f64>>> {
    if joint_obs.len() != agents.len() {
        return Err(Error::shape(format!(
            "{} observations for {} agents",
            joint_obs.len(),
            agents.len()
        )));
    }
    agents
        .iter()
        .zip(joint_obs)
        .map(|(agent, obs)| match mode {
            ActionMode::Greedy => Ok(agent.greedy_action(obs, sample_rng)?.0),
            ActionMode::Explore => {
                agent.explore_action(exploration, obs, step, sample_rng, noise_rng)
            }
        })
        .collect()
}

/// For each agent, draws one fresh uniform candidate set (shared across the
/// batch rows) and takes the per-row maximum target-network Q-value.
/// Returns a `b x N` matrix of maxima.
fn per_agent_target_max<R: Rng + ?Sized>(
    agents: &[QFunctionalAgent],
    next_obs: &[Matrix2D],
    rng: &mut R,
) -> Result<Matrix2D> {
    let b = next_obs[0].rows();
    let mut out = Matrix2D::zeros(b, agents.len());
    for (i, agent) in agents.iter().enumerate() {
        let candidates = agent.sample_actions(rng);
        let features = phi(agent.basis(), &candidates)?;
        let (coeffs, _) = agent.target_net.forward(&next_obs[i])?;
        let q = q_from_coefficients(&coeffs, &features)?;
        for (j, m) in q.row_max().into_iter().enumerate() {
            out.set(j, i, m);
        }
    }
    Ok(out)
}

/// Prediction-network Q-values of the actions actually taken, with the tapes
/// and feature matrices needed to backpropagate into each agent.
struct TakenActionValues {
    agent_qs: Matrix2D,
    tapes: Vec<crate::network::ForwardTape>,
    features: Vec<Matrix2D>,
}

fn taken_action_values(
    agents: &[QFunctionalAgent],
    batch: &JointBatch,
) -> Result<TakenActionValues> {
    let b = batch.rows();
    let mut agent_qs = Matrix2D::zeros(b, agents.len());
    let mut tapes = Vec::with_capacity(agents.len());
    let mut features = Vec::with_capacity(agents.len());
    for (i, agent) in agents.iter().enumerate() {
        let (coeffs, tape) = agent.prediction_net.forward(&batch.obs[i])?;
        let feats = phi(agent.basis(), &batch.actions[i])?;
        let q = q_per_row(&coeffs, &feats)?;
        for (j, v) in q.into_iter().enumerate() {
            agent_qs.set(j, i, v);
        }
        tapes.push(tape);
        features.push(feats);
    }
    Ok(TakenActionValues {
        agent_qs,
        tapes,
        features,
    })
}

/// dL/d(coefficients) for one agent: upstream per-row Q gradient times the
/// monomial features of the taken action.
fn coefficient_gradient(q_grad_col: &[f64], features: &Matrix2D) -> Matrix2D {
    Matrix2D::from_fn(q_grad_col.len(), features.rows(), |j, l| {
        q_grad_col[j] * features.get(l, j)
    })
}

fn clip_gradients(grads: &mut NetworkGradients, clip_norm: f64) {
    if clip_norm > 0.0 {
        let norm = grads.global_norm();
        if norm > clip_norm {
            grads.scale(clip_norm / norm);
        }
    }
}

fn check_finite(loss: f64) -> Result<f64> {
    if loss.is_finite() {
        Ok(loss)
    } else {
        Err(Error::Numeric(format!("training loss became {loss}")))
    }
}

// ---------------------------------------------------------------------------
// MQF
// ---------------------------------------------------------------------------

/// Mixed Q-functionals: per-agent networks trained jointly through a mixed
/// team value and the summed team reward.
pub struct MqfLearner {
    agents: Vec<QFunctionalAgent>,
    optimizers: Vec<AdamState>,
    mixer_prediction: Mixer,
    mixer_target: Mixer,
    mixer_optimizers: Option<(AdamState, AdamState)>,
    buffer: ReplayBuffer,
    dims: EnvDims,
    cfg: LearnerConfig,
}

impl MqfLearner {
    pub fn new<R: Rng + ?Sized>(dims: &EnvDims, cfg: &LearnerConfig, rng: &mut R) -> Result<Self> {
        cfg.validate()?;
        let agents = build_agents(dims, cfg, rng)?;
        let optimizers = agents
            .iter()
            .map(|a| AdamState::new(&a.prediction_net, cfg.learning_rate))
            .collect();
        let (mixer_prediction, mixer_optimizers) = match cfg.mixer {
            MixerKind::Sum => (Mixer::Sum, None),
            MixerKind::Monotonic => {
                let m = MonotonicMixer::new(
                    dims.obs_total(),
                    dims.num_agents(),
                    cfg.mixer_hidden_dim,
                    rng,
                );
                let opts = (
                    AdamState::new(&m.hyper_w, cfg.learning_rate),
                    AdamState::new(&m.hyper_b, cfg.learning_rate),
                );
                (Mixer::Monotonic(m), Some(opts))
            }
        };
        let mixer_target = mixer_prediction.clone();
        let buffer = ReplayBuffer::new(
            cfg.buffer_size,
            dims.obs_dims.clone(),
            dims.action_dims.clone(),
        );
        Ok(MqfLearner {
            agents,
            optimizers,
            mixer_prediction,
            mixer_target,
            mixer_optimizers,
            buffer,
            dims: dims.clone(),
            cfg: cfg.clone(),
        })
    }

    pub fn agents(&self) -> &[QFunctionalAgent] {
        &self.agents
    }

    pub fn mixers(&self) -> (&Mixer, &Mixer) {
        (&self.mixer_prediction, &self.mixer_target)
    }

    /// Target value per batch row: summed reward plus the discounted mixed
    /// per-agent target maxima, masked at terminal rows.
    pub fn td_target<R: Rng + ?Sized>(&self, batch: &JointBatch, rng: &mut R) -> Result<Vec<f64>> {
        let maxes = per_agent_target_max(&self.agents, &batch.next_obs, rng)?;
        let mixed = self.mixer_target.mix(&maxes, &batch.next_joint_obs)?;
        Ok((0..batch.rows())
            .map(|j| {
                let team_reward: f64 = batch.rewards.row(j).iter().sum();
                team_reward + self.cfg.gamma * batch.not_done[j] * mixed[j]
            })
            .collect())
    }

    pub fn train_step<R: Rng + ?Sized, S: Rng + ?Sized>(
        &mut self,
        buffer_rng: &mut R,
        action_rng: &mut S,
    ) -> Result<Option<f64>> {
        let sampled = match self.buffer.sample(self.cfg.batch_size, buffer_rng) {
            Some(s) => s,
            None => return Ok(None),
        };
        let batch = JointBatch::from_transitions(&sampled, &self.dims);
        drop(sampled);

        let taken = taken_action_values(&self.agents, &batch)?;
        let q_tot = self
            .mixer_prediction
            .mix(&taken.agent_qs, &batch.joint_obs)?;
        let y = self.td_target(&batch, action_rng)?;

        let b = batch.rows() as f64;
        let mut loss = 0.0;
        let mut upstream = Vec::with_capacity(batch.rows());
        for j in 0..batch.rows() {
            let e = q_tot[j] - y[j];
            loss += e * e;
            upstream.push(2.0 * e / b);
        }
        loss /= b;

        let mix_grads =
            self.mixer_prediction
                .mix_gradient(&taken.agent_qs, &batch.joint_obs, &upstream)?;
        for i in 0..self.agents.len() {
            let q_grad_col = mix_grads.agent_qs.column(i);
            let coeff_grad = coefficient_gradient(&q_grad_col, &taken.features[i]);
            let mut grads = self.agents[i]
                .prediction_net
                .backward(&taken.tapes[i], &coeff_grad)?;
            clip_gradients(&mut grads, self.cfg.grad_clip_norm);
            adam_step(
                &mut self.agents[i].prediction_net,
                &grads,
                &mut self.optimizers[i],
            )?;
        }
        if let (Mixer::Monotonic(m), Some((opt_w, opt_b))) =
            (&mut self.mixer_prediction, &mut self.mixer_optimizers)
        {
            let mut gw = mix_grads.hyper_w.expect("monotonic mixer gradients");
            let mut gb = mix_grads.hyper_b.expect("monotonic mixer gradients");
            clip_gradients(&mut gw, self.cfg.grad_clip_norm);
            clip_gradients(&mut gb, self.cfg.grad_clip_norm);
            adam_step(&mut m.hyper_w, &gw, opt_w)?;
            adam_step(&mut m.hyper_b, &gb, opt_b)?;
        }
        check_finite(loss).map(Some)
    }

    pub fn update_targets(&mut self) -> Result<()> {
        for agent in &mut self.agents {
            soft_update(&mut agent.target_net, &agent.prediction_net, self.cfg.tau)?;
        }
        self.mixer_target
            .soft_update_from(&self.mixer_prediction, self.cfg.tau)
    }
}

// ---------------------------------------------------------------------------
// IQF
// ---------------------------------------------------------------------------

/// Independent Q-functionals: each agent bootstraps on its own reward.
pub struct IqfLearner {
    agents: Vec<QFunctionalAgent>,
    optimizers: Vec<AdamState>,
    buffer: ReplayBuffer,
    dims: EnvDims,
    cfg: LearnerConfig,
}

impl IqfLearner {
    pub fn new<R: Rng + ?Sized>(dims: &EnvDims, cfg: &LearnerConfig, rng: &mut R) -> Result<Self> {
        cfg.validate()?;
        let agents = build_agents(dims, cfg, rng)?;
        let optimizers = agents
            .iter()
            .map(|a| AdamState::new(&a.prediction_net, cfg.learning_rate))
            .collect();
        let buffer = ReplayBuffer::new(
            cfg.buffer_size,
            dims.obs_dims.clone(),
            dims.action_dims.clone(),
        );
        Ok(IqfLearner {
            agents,
            optimizers,
            buffer,
            dims: dims.clone(),
            cfg: cfg.clone(),
        })
    }

    pub fn agents(&self) -> &[QFunctionalAgent] {
        &self.agents
    }

    /// Per-agent targets, one column per agent.
    pub fn td_targets<R: Rng + ?Sized>(
        &self,
        batch: &JointBatch,
        rng: &mut R,
    ) -> Result<Matrix2D> {
        let maxes = per_agent_target_max(&self.agents, &batch.next_obs, rng)?;
        Ok(Matrix2D::from_fn(batch.rows(), self.agents.len(), |j, i| {
            batch.rewards.get(j, i) + self.cfg.gamma * batch.not_done[j] * maxes.get(j, i)
        }))
    }

    pub fn train_step<R: Rng + ?Sized, S: Rng + ?Sized>(
        &mut self,
        buffer_rng: &mut R,
        action_rng: &mut S,
    ) -> Result<Option<f64>> {
        let sampled = match self.buffer.sample(self.cfg.batch_size, buffer_rng) {
            Some(s) => s,
            None => return Ok(None),
        };
        let batch = JointBatch::from_transitions(&sampled, &self.dims);
        drop(sampled);

        let taken = taken_action_values(&self.agents, &batch)?;
        let y = self.td_targets(&batch, action_rng)?;

        let b = batch.rows() as f64;
        let mut total_loss = 0.0;
        for i in 0..self.agents.len() {
            let mut upstream = Vec::with_capacity(batch.rows());
            let mut loss_i = 0.0;
            for j in 0..batch.rows() {
                let e = taken.agent_qs.get(j, i) - y.get(j, i);
                loss_i += e * e;
                upstream.push(2.0 * e / b);
            }
            total_loss += loss_i / b;
            let coeff_grad = coefficient_gradient(&upstream, &taken.features[i]);
            let mut grads = self.agents[i]
                .prediction_net
                .backward(&taken.tapes[i], &coeff_grad)?;
            clip_gradients(&mut grads, self.cfg.grad_clip_norm);
            adam_step(
                &mut self.agents[i].prediction_net,
                &grads,
                &mut self.optimizers[i],
            )?;
        }
        check_finite(total_loss).map(Some)
    }

    pub fn update_targets(&mut self) -> Result<()> {
        for agent in &mut self.agents {
            soft_update(&mut agent.target_net, &agent.prediction_net, self.cfg.tau)?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// CQF
// ---------------------------------------------------------------------------

/// Centralized Q-functionals: one network over the concatenated observation
/// and action spaces; joint actions are split back per agent for execution.
pub struct CqfLearner {
    agent: QFunctionalAgent,
    optimizer: AdamState,
    buffer: ReplayBuffer,
    dims: EnvDims,
    cfg: LearnerConfig,
}

impl CqfLearner {
    pub fn new<R: Rng + ?Sized>(dims: &EnvDims, cfg: &LearnerConfig, rng: &mut R) -> Result<Self> {
        cfg.validate()?;
        let agent = QFunctionalAgent::new(
            dims.obs_total(),
            dims.action_total(),
            cfg.rank,
            cfg.sample_size,
            cfg.nb_layers,
            cfg.nb_neurons,
            cfg.activation,
            cfg.action_low,
            cfg.action_high,
            rng,
        )?;
        let optimizer = AdamState::new(&agent.prediction_net, cfg.learning_rate);
        let buffer = ReplayBuffer::new(
            cfg.buffer_size,
            dims.obs_dims.clone(),
            dims.action_dims.clone(),
        );
        Ok(CqfLearner {
            agent,
            optimizer,
            buffer,
            dims: dims.clone(),
            cfg: cfg.clone(),
        })
    }

    pub fn joint_agent(&self) -> &QFunctionalAgent {
        &self.agent
    }

    fn split_action(&self, joint: &[f64]) -> Vec<Vec<f64>> {
        let mut out = Vec::with_capacity(self.dims.num_agents());
        let mut at = 0;
        for &d in &self.dims.action_dims {
            out.push(joint[at..at + d].to_vec());
            at += d;
        }
        out
    }

    fn joint_actions_matrix(&self, batch: &JointBatch) -> Matrix2D {
        concat_cols(&batch.actions)
    }

    pub fn td_target<R: Rng + ?Sized>(&self, batch: &JointBatch, rng: &mut R) -> Result<Vec<f64>> {
        let candidates = self.agent.sample_actions(rng);
        let features = phi(self.agent.basis(), &candidates)?;
        let (coeffs, _) = self.agent.target_net.forward(&batch.next_joint_obs)?;
        let q = q_from_coefficients(&coeffs, &features)?;
        let maxes = q.row_max();
        Ok((0..batch.rows())
            .map(|j| {
                let team_reward: f64 = batch.rewards.row(j).iter().sum();
                team_reward + self.cfg.gamma * batch.not_done[j] * maxes[j]
            })
            .collect())
    }

    pub fn train_step<R: Rng + ?Sized, S: Rng + ?Sized>(
        &mut self,
        buffer_rng: &mut R,
        action_rng: &mut S,
    ) -> Result<Option<f64>> {
        let sampled = match self.buffer.sample(self.cfg.batch_size, buffer_rng) {
            Some(s) => s,
            None => return Ok(None),
        };
        let batch = JointBatch::from_transitions(&sampled, &self.dims);
        drop(sampled);

        let joint_actions = self.joint_actions_matrix(&batch);
        let (coeffs, tape) = self.agent.prediction_net.forward(&batch.joint_obs)?;
        let features = phi(self.agent.basis(), &joint_actions)?;
        let q = q_per_row(&coeffs, &features)?;
        let y = self.td_target(&batch, action_rng)?;

        let b = batch.rows() as f64;
        let mut loss = 0.0;
        let mut upstream = Vec::with_capacity(batch.rows());
        for j in 0..batch.rows() {
            let e = q[j] - y[j];
            loss += e * e;
            upstream.push(2.0 * e / b);
        }
        loss /= b;

        let coeff_grad = coefficient_gradient(&upstream, &features);
        let mut grads = self.agent.prediction_net.backward(&tape, &coeff_grad)?;
        clip_gradients(&mut grads, self.cfg.grad_clip_norm);
        adam_step(&mut self.agent.prediction_net, &grads, &mut self.optimizer)?;
        check_finite(loss).map(Some)
    }

    pub fn update_targets(&mut self) -> Result<()> {
        soft_update(
            &mut self.agent.target_net,
            &self.agent.prediction_net,
            self.cfg.tau,
        )
    }
}

// ---------------------------------------------------------------------------
// Dispatch
// ---------------------------------------------------------------------------

/// Learner-kind dispatch used by the harness and CLI.
pub enum Learner {
    Mqf(MqfLearner),
    Iqf(IqfLearner),
    Cqf(CqfLearner),
}

impl Learner {
    pub fn new<R: Rng + ?Sized>(
        kind: LearnerKind,
        dims: &EnvDims,
        cfg: &LearnerConfig,
        rng: &mut R,
    ) -> Result<Self> {
        Ok(match kind {
            LearnerKind::Mqf => Learner::Mqf(MqfLearner::new(dims, cfg, rng)?),
            LearnerKind::Iqf => Learner::Iqf(IqfLearner::new(dims, cfg, rng)?),
            LearnerKind::Cqf => Learner::Cqf(CqfLearner::new(dims, cfg, rng)?),
        })
    }

    pub fn kind(&self) -> LearnerKind {
        match self {
            Learner::Mqf(_) => LearnerKind::Mqf,
            Learner::Iqf(_) => LearnerKind::Iqf,
            Learner::Cqf(_) => LearnerKind::Cqf,
        }
    }

    pub fn num_agents(&self) -> usize {
        match self {
            Learner::Mqf(l) => l.dims.num_agents(),
            Learner::Iqf(l) => l.dims.num_agents(),
            Learner::Cqf(l) => l.dims.num_agents(),
        }
    }

    pub fn dims(&self) -> &EnvDims {
        match self {
            Learner::Mqf(l) => &l.dims,
            Learner::Iqf(l) => &l.dims,
            Learner::Cqf(l) => &l.dims,
        }
    }

    pub fn config(&self) -> &LearnerConfig {
        match self {
            Learner::Mqf(l) => &l.cfg,
            Learner::Iqf(l) => &l.cfg,
            Learner::Cqf(l) => &l.cfg,
        }
    }

    pub fn buffer_len(&self) -> usize {
        match self {
            Learner::Mqf(l) => l.buffer.len(),
            Learner::Iqf(l) => l.buffer.len(),
            Learner::Cqf(l) => l.buffer.len(),
        }
    }

    /// Joint action selection. MQF and IQF select per agent from its own
    /// observation; CQF selects one joint action and splits it.
    pub fn act<R: Rng + ?Sized, S: Rng + ?Sized>(
        &self,
        joint_obs: &[Vec<f64>],
        step: u64,
        mode: ActionMode,
        sample_rng: &mut R,
        noise_rng: &mut S,
    ) -> Result<Vec<Vec<f64>>> {
        match self {
            Learner::Mqf(l) => decentralized_act(
                &l.agents,
                &l.cfg.exploration,
                joint_obs,
                step,
                mode,
                sample_rng,
                noise_rng,
            ),
            Learner::Iqf(l) => decentralized_act(
                &l.agents,
                &l.cfg.exploration,
                joint_obs,
                step,
                mode,
                sample_rng,
                noise_rng,
            ),
            Learner::Cqf(l) => {
                let concat: Vec<f64> = joint_obs.iter().flatten().copied().collect();
                let joint = match mode {
                    ActionMode::Greedy => l.agent.greedy_action(&concat, sample_rng)?.0,
                    ActionMode::Explore => l.agent.explore_action(
                        &l.cfg.exploration,
                        &concat,
                        step,
                        sample_rng,
                        noise_rng,
                    )?,
                };
                Ok(l.split_action(&joint))
            }
        }
    }

    pub fn observe(&mut self, t: Transition) -> Result<()> {
        match self {
            Learner::Mqf(l) => l.buffer.push(t),
            Learner::Iqf(l) => l.buffer.push(t),
            Learner::Cqf(l) => l.buffer.push(t),
        }
    }

    /// One gradient update from the replay buffer; `None` while the buffer
    /// holds fewer than `batch_size` transitions.
    pub fn train_step<R: Rng + ?Sized, S: Rng + ?Sized>(
        &mut self,
        buffer_rng: &mut R,
        action_rng: &mut S,
    ) -> Result<Option<f64>> {
        match self {
            Learner::Mqf(l) => l.train_step(buffer_rng, action_rng),
            Learner::Iqf(l) => l.train_step(buffer_rng, action_rng),
            Learner::Cqf(l) => l.train_step(buffer_rng, action_rng),
        }
    }

    pub fn update_targets(&mut self) -> Result<()> {
        match self {
            Learner::Mqf(l) => l.update_targets(),
            Learner::Iqf(l) => l.update_targets(),
            Learner::Cqf(l) => l.update_targets(),
        }
    }

    pub fn parameters_finite(&self) -> bool {
        let nets_ok = |a: &QFunctionalAgent| {
            a.prediction_net.parameters_finite() && a.target_net.parameters_finite()
        };
        match self {
            Learner::Mqf(l) => {
                l.agents.iter().all(nets_ok)
                    && l.mixer_prediction.parameters_finite()
                    && l.mixer_target.parameters_finite()
            }
            Learner::Iqf(l) => l.agents.iter().all(nets_ok),
            Learner::Cqf(l) => nets_ok(&l.agent),
        }
    }

    /// Read access to the per-agent Q-functionals (the joint one for CQF).
    pub fn agent_list(&self) -> Vec<&QFunctionalAgent> {
        match self {
            Learner::Mqf(l) => l.agents.iter().collect(),
            Learner::Iqf(l) => l.agents.iter().collect(),
            Learner::Cqf(l) => vec![&l.agent],
        }
    }

    pub(crate) fn agent_list_mut(&mut self) -> Vec<&mut QFunctionalAgent> {
        match self {
            Learner::Mqf(l) => l.agents.iter_mut().collect(),
            Learner::Iqf(l) => l.agents.iter_mut().collect(),
            Learner::Cqf(l) => vec![&mut l.agent],
        }
    }

    pub(crate) fn optimizer_list(&self) -> Vec<&AdamState> {
        match self {
            Learner::Mqf(l) => l.optimizers.iter().collect(),
            Learner::Iqf(l) => l.optimizers.iter().collect(),
            Learner::Cqf(l) => vec![&l.optimizer],
        }
    }

    pub(crate) fn optimizer_list_mut(&mut self) -> Vec<&mut AdamState> {
        match self {
            Learner::Mqf(l) => l.optimizers.iter_mut().collect(),
            Learner::Iqf(l) => l.optimizers.iter_mut().collect(),
            Learner::Cqf(l) => vec![&mut l.optimizer],
        }
    }

    pub(crate) fn mixer_pair_mut(&mut self) -> Option<(&mut Mixer, &mut Mixer)> {
        match self {
            Learner::Mqf(l) => Some((&mut l.mixer_prediction, &mut l.mixer_target)),
            _ => None,
        }
    }

    pub fn mixer_pair(&self) -> Option<(&Mixer, &Mixer)> {
        match self {
            Learner::Mqf(l) => Some((&l.mixer_prediction, &l.mixer_target)),
            _ => None,
        }
    }

    pub(crate) fn mixer_optimizers_mut(
        &mut self,
    ) -> Option<&mut Option<(AdamState, AdamState)>> {
        match self {
            Learner::Mqf(l) => Some(&mut l.mixer_optimizers),
            _ => None,
        }
    }
}
