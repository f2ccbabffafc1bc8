//! Experiment orchestration: configuration, training runs, seeded
//! evaluation, the four-method comparison, checkpoints, CSV logs, and SVG
//! plots.
//!
//! Everything here is deterministic given the run seed: one master seed is
//! split into independent named streams (network init, object placement,
//! exploration noise, batch sampling) so that, for example, a different
//! batch-sampling pattern can never perturb object placement.

mod checkpoint;
mod compare;
mod config;
mod eval;
mod plot;
pub mod rng;
pub mod scripted;
mod train;

pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use compare::{compare, ComparisonCell, ComparisonOutput};
pub use config::{load_config, ConfigOverrides, Profile, RunConfig};
pub use eval::{evaluate, evaluate_policy, shake_metric, EvalEpisode, EvalReport, EvalStep, Policy};
pub use plot::emit_plots;
pub use train::{run_training, RunArtifacts};
