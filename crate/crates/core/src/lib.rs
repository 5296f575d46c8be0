//! Policy distillation toolkit.
//!
//! Trains DQN teacher agents on small deterministic pixel games and distills
//! their policies into student networks: single-task, compressed, multi-task,
//! and online (tracking the best teacher snapshot while Q-learning runs).
//!
//! Everything is float64 and bit-deterministic given a master seed: the same
//! config and seed reproduce byte-identical CSV outputs in sequential mode.

pub mod csvw;
pub mod distill;
pub mod dqn;
pub mod envs;
pub mod error;
pub mod eval;
pub mod harness;
pub mod multitask;
pub mod nn;
pub mod online;
pub mod policy;
pub mod replay;
pub mod rng;

pub use error::PdError;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, PdError>;
