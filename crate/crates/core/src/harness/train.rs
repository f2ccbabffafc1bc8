//! The full training loop for one (method, seed) run.
//!
//! Writes two CSV logs and a JSON manifest under the configured output
//! directory and finishes with an SRCKPT checkpoint. Everything except the
//! wall-clock column is a pure function of the run configuration and seed.

use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use serde::Serialize;

use crate::ddpg::{act_exploratory, train_step, Agent, OuState};
use crate::env::Env;
use crate::replay::{admit, Experience, ReplayBuffer};
use crate::Result;

use super::checkpoint::save_checkpoint;
use super::config::RunConfig;
use super::rng::{stream_rng, stream_seed};

/// Files produced by a run.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub episodes_csv: PathBuf,
    pub steps_csv: PathBuf,
    pub checkpoint: PathBuf,
    pub manifest: PathBuf,
}

/// Fixed episode-log row.
#[derive(Debug, Serialize)]
struct EpisodeRow {
    episode: u32,
    method: String,
    stored_steps: u32,
    attempted_steps: u32,
    episode_reward: f64,
    success: bool,
    mean_critic_loss: f64,
    mean_actor_objective: f64,
    noise_scale: f64,
    wall_ms: u64,
}

/// Per-decision trace row; enough to recompute the reward from the logged
/// distances and displacement.
#[derive(Debug, Serialize)]
struct StepRow {
    episode: u32,
    step: u32,
    stored: bool,
    ticks: u32,
    d_h_prev: f64,
    d_v_prev: f64,
    d_h: f64,
    d_v: f64,
    d_o: f64,
    reward: f64,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    config: &'a RunConfig,
    results: ManifestResults,
}

#[derive(Debug, Serialize)]
struct ManifestResults {
    episodes_run: u32,
    stored_transitions: u64,
    train_steps: u64,
    success_episodes: u32,
    wall_ms_total: u64,
}

/// Trains one agent per `cfg` and writes all artifacts. On training
/// divergence the partial logs survive and the error propagates.
pub fn run_training(cfg: &RunConfig) -> Result<RunArtifacts> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.out_dir)?;
    let artifacts = RunArtifacts {
        episodes_csv: cfg.out_dir.join("episodes.csv"),
        steps_csv: cfg.out_dir.join("steps.csv"),
        checkpoint: cfg.out_dir.join("checkpoint.srckpt"),
        manifest: cfg.out_dir.join("manifest.json"),
    };

    let mut agent = Agent::init(
        &cfg.agent,
        stream_seed(cfg.seed, "init-actor"),
        stream_seed(cfg.seed, "init-critic"),
    )?;
    let mut env = Env::new(cfg.env)?;
    let mut buffer = ReplayBuffer::new(cfg.replay_capacity);
    let mut env_rng = stream_rng(cfg.seed, "env");
    let mut noise_rng = stream_rng(cfg.seed, "noise");
    let mut sample_rng = stream_rng(cfg.seed, "sampling");
    let mut ou = OuState::new(cfg.agent.theta_ou, cfg.agent.sigma0);

    let mut episodes_out = csv::Writer::from_path(&artifacts.episodes_csv)?;
    let mut steps_out = csv::Writer::from_path(&artifacts.steps_csv)?;

    let settle_mode = cfg.method.adaptive();
    let run_start = Instant::now();
    let mut total_train_steps: u64 = 0;
    let mut success_episodes: u32 = 0;

    for episode in 0..cfg.episodes {
        let episode_start = Instant::now();
        ou.sigma = cfg.agent.noise_scale(episode);
        ou.reset();
        let mut obs = env.reset(&mut env_rng);

        let mut episode_reward = 0.0;
        let mut stored_steps: u32 = 0;
        let mut attempted_steps: u32 = 0;
        let mut loss_sum = 0.0;
        let mut objective_sum = 0.0;
        let mut trained: u64 = 0;

        while !env.is_done() {
            let action = act_exploratory(&agent.actor, &obs, &mut ou, cfg.agent.delta_max, &mut noise_rng);
            let step_result = if settle_mode {
                env.step_settle(action)
            } else {
                env.step_tick(action)
            };
            let outcome = match step_result {
                Ok(o) => o,
                Err(e) => {
                    episodes_out.flush()?;
                    steps_out.flush()?;
                    return Err(e);
                }
            };
            episode_reward += outcome.reward;
            attempted_steps += 1;

            let (d_h_prev, d_v_prev) = obs.planar_distances();
            let (d_h, d_v) = outcome.next_obs.planar_distances();
            steps_out.serialize(StepRow {
                episode,
                step: attempted_steps,
                stored: outcome.stored,
                ticks: outcome.ticks,
                d_h_prev,
                d_v_prev,
                d_h,
                d_v,
                d_o: outcome.d_o,
                reward: outcome.reward,
            })?;

            if admit(cfg.method, &outcome) {
                stored_steps += 1;
                buffer.push(Experience {
                    s: obs,
                    a: action,
                    r: outcome.reward,
                    s_next: outcome.next_obs,
                    // Bootstrap is cut at success terminals only; budget
                    // exhaustion is not a real terminal.
                    done: outcome.success,
                });
                if buffer.insert_count() >= cfg.agent.warmup_transitions as u64
                    && buffer.len() >= cfg.agent.batch_size
                {
                    for _ in 0..cfg.agent.train_steps_per_transition {
                        let batch = buffer.sample_uniform(cfg.agent.batch_size, &mut sample_rng)?;
                        let stats = match train_step(&mut agent, &batch, &cfg.agent) {
                            Ok(s) => s,
                            Err(e) => {
                                episodes_out.flush()?;
                                steps_out.flush()?;
                                return Err(e);
                            }
                        };
                        loss_sum += stats.critic_loss;
                        objective_sum += stats.actor_objective;
                        trained += 1;
                    }
                }
            }
            obs = outcome.next_obs;
        }

        if env.succeeded() {
            success_episodes += 1;
        }
        total_train_steps += trained;
        episodes_out.serialize(EpisodeRow {
            episode,
            method: cfg.method.to_string(),
            stored_steps,
            attempted_steps,
            episode_reward,
            success: env.succeeded(),
            mean_critic_loss: if trained > 0 { loss_sum / trained as f64 } else { 0.0 },
            mean_actor_objective: if trained > 0 { objective_sum / trained as f64 } else { 0.0 },
            noise_scale: ou.sigma,
            wall_ms: episode_start.elapsed().as_millis() as u64,
        })?;
        episodes_out.flush()?;
        steps_out.flush()?;
    }

    save_checkpoint(&agent, &artifacts.checkpoint)?;
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        config: cfg,
        results: ManifestResults {
            episodes_run: cfg.episodes,
            stored_transitions: buffer.insert_count(),
            train_steps: total_train_steps,
            success_episodes,
            wall_ms_total: run_start.elapsed().as_millis() as u64,
        },
    };
    fs::write(&artifacts.manifest, serde_json::to_string_pretty(&manifest)?)?;
    Ok(artifacts)
}
