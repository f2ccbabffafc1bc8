//! Seeded, noise-free policy evaluation.
//!
//! The evaluation object positions are a pure function of `eval_seed`, so
//! every method faces the same 100 initial conditions. Each policy is run in
//! its own interaction mode (settle for A/C, per-tick for B/D), success is
//! the environment flag, and the shake metric captures how much the policy
//! keeps commanding once it has been near the goal.

use std::path::Path;

use serde::Serialize;

use crate::ddpg::act;
use crate::env::{Action, Env, Observation};
use crate::net::Mlp;
use crate::{Error, Result};

use super::checkpoint::load_checkpoint;
use super::config::RunConfig;
use super::rng::stream_rng;

/// Anything that maps observations to bounded actions.
pub trait Policy {
    fn action(&self, obs: &Observation) -> Action;
}

/// The deterministic actor policy.
pub struct ActorPolicy<'a> {
    pub actor: &'a Mlp,
    pub delta_max: f64,
}

impl Policy for ActorPolicy<'_> {
    fn action(&self, obs: &Observation) -> Action {
        act(self.actor, obs, self.delta_max)
    }
}

impl<F: Fn(&Observation) -> Action> Policy for F {
    fn action(&self, obs: &Observation) -> Action {
        self(obs)
    }
}

/// One decision step of an evaluation trajectory: the cup-to-goal distance
/// where the action was chosen, and the action's magnitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalStep {
    pub pre_distance: f64,
    pub action_norm: f64,
}

/// Per-episode evaluation record.
#[derive(Debug, Clone, Serialize)]
pub struct EvalEpisode {
    pub episode: u32,
    /// Object base-center position for this episode.
    pub object_x: f64,
    pub object_y: f64,
    /// Total reward over the episode.
    pub reward: f64,
    pub success: bool,
    pub steps: u32,
    /// Closest cup-to-goal approach over the episode (m).
    pub min_distance: f64,
}

/// Aggregate evaluation results.
#[derive(Debug, Clone, Serialize)]
pub struct EvalReport {
    pub success_rate: f64,
    pub mean_episode_reward: f64,
    /// Mean command magnitude after first goal proximity (rad).
    pub shake: f64,
    pub episodes: Vec<EvalEpisode>,
}

/// Mean action magnitude over every step from the first one taken within
/// `2 * d_goal` of the goal, pooled across trajectories; 0 when no
/// trajectory ever got that close.
pub fn shake_metric(trajectories: &[Vec<EvalStep>], d_goal: f64) -> f64 {
    let mut sum = 0.0;
    let mut count = 0u64;
    for traj in trajectories {
        if let Some(first) = traj.iter().position(|s| s.pre_distance <= 2.0 * d_goal) {
            for step in &traj[first..] {
                sum += step.action_norm;
                count += 1;
            }
        }
    }
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

/// Runs `n_episodes` noise-free episodes of `policy` under `cfg`'s method
/// mode and budgets. Deterministic given (`policy`, `cfg`, `eval_seed`).
pub fn evaluate_policy(policy: &dyn Policy, cfg: &RunConfig, eval_seed: u64, n_episodes: u32) -> Result<EvalReport> {
    if n_episodes == 0 {
        return Err(Error::Config("evaluation needs at least one episode".into()));
    }
    let mut env = Env::new(cfg.env)?;
    let mut rng = stream_rng(eval_seed, "eval");
    let settle_mode = cfg.method.adaptive();

    let mut episodes = Vec::with_capacity(n_episodes as usize);
    let mut trajectories = Vec::with_capacity(n_episodes as usize);
    for episode in 0..n_episodes {
        let mut obs = env.reset(&mut rng);
        let object = env.object().center;
        let mut reward = 0.0;
        let mut steps = 0u32;
        let mut min_distance = obs.distance();
        let mut traj = Vec::new();
        while !env.is_done() {
            let action = policy.action(&obs);
            traj.push(EvalStep {
                pre_distance: obs.distance(),
                action_norm: action.norm(),
            });
            let out = if settle_mode {
                env.step_settle(action)?
            } else {
                env.step_tick(action)?
            };
            reward += out.reward;
            steps += 1;
            obs = out.next_obs;
            min_distance = min_distance.min(obs.distance());
        }
        episodes.push(EvalEpisode {
            episode,
            object_x: object.x,
            object_y: object.y,
            reward,
            success: env.succeeded(),
            steps,
            min_distance,
        });
        trajectories.push(traj);
    }

    let successes = episodes.iter().filter(|e| e.success).count();
    let mean_reward = episodes.iter().map(|e| e.reward).sum::<f64>() / episodes.len() as f64;
    Ok(EvalReport {
        success_rate: successes as f64 / episodes.len() as f64,
        mean_episode_reward: mean_reward,
        shake: shake_metric(&trajectories, cfg.env.d_goal),
        episodes,
    })
}

/// Loads a checkpoint and evaluates its live actor.
pub fn evaluate(checkpoint: &Path, cfg: &RunConfig, eval_seed: u64, n_episodes: u32) -> Result<EvalReport> {
    let agent = load_checkpoint(checkpoint)?;
    if agent.actor.input_dim() != crate::env::OBS_DIM {
        return Err(Error::Format(format!(
            "checkpoint actor expects {} inputs, environment provides {}",
            agent.actor.input_dim(),
            crate::env::OBS_DIM
        )));
    }
    let policy = ActorPolicy {
        actor: &agent.actor,
        delta_max: cfg.agent.delta_max,
    };
    evaluate_policy(&policy, cfg, eval_seed, n_episodes)
}
