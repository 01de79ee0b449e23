//! Value-based multi-agent reinforcement learning for continuous action
//! spaces.
//!
//! Each agent's Q-function is represented as a *functional*: a network maps
//! the observation to coefficients of a polynomial basis over the action
//! space, so the values of many candidate actions are produced by a single
//! matrix multiplication. Three learners are built on that representation:
//!
//! * **MQF** (mixed Q-functionals): per-agent functionals trained jointly
//!   through a mixed team value (additive or state-conditioned monotonic),
//!   with decentralized execution.
//! * **IQF** (independent Q-functionals): per-agent functionals, no mixing.
//! * **CQF** (centralized Q-functionals): one functional over the joint
//!   observation and action spaces.
//!
//! The crate also ships the particle-world benchmark scenarios (landmark
//! capturing and two predator-prey variants), a seeded training/evaluation
//! harness, and a CLI (`mqf train|eval|aggregate|selftest`).

pub mod basis;
pub mod error;
pub mod learners;
pub mod matrix;
pub mod mixer;
pub mod network;
pub mod optim;
pub mod qfunctional;
pub mod replay;

pub use error::{Error, Result};
pub use matrix::Matrix2D;
