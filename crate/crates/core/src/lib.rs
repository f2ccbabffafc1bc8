//! Training library for a simulated 5-link suction arm driven by DDPG, built
//! around a replay buffer that admits transitions only once the arm has
//! settled into a steady state (and drops transitions stuck at joint limits).
//!
//! Modules:
//! - [`net`]: minimal fully-connected networks with exact analytic gradients,
//!   Adam, and Polyak target updates.
//! - [`arm_sim`]: deterministic kinematic simulator of the arm plus a
//!   pushable target object.
//! - [`env`]: the MDP — 20D observations, 3D joint-delta actions, shaped
//!   reward, episode lifecycle, and the settle / per-tick interaction modes.
//! - [`replay`]: FIFO experience store with uniform sampling and the
//!   method-dependent admission rule.
//! - [`ddpg`]: actor-critic learner with OU exploration.
//! - [`harness`]: config files, training/eval orchestration, checkpoints,
//!   CSV logs, and SVG plots.

// Validation uses `!(v > 0.0)` so NaN fails the check too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod arm_sim;
pub mod ddpg;
pub mod env;
mod error;
pub mod harness;
pub mod net;
pub mod replay;

pub use arm_sim::{ArmGeometry, JointLimits, JointVector, LinkPoints, ObjectState, SettleResult};
pub use ddpg::{Agent, AgentConfig, OuState, TrainStats};
pub use env::{Action, Env, EnvConfig, Observation, RewardParams, StepOutcome};
pub use error::{Error, Result};
pub use harness::{EvalReport, Profile, RunConfig};
pub use net::{AdamState, Mlp, OutputActivation, ParamGrads};
pub use replay::{Experience, ReplayBuffer, UpdateMethod};
