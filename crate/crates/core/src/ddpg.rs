//! Deterministic-policy actor-critic learner.
//!
//! The actor maps the observation through a tanh output scaled by
//! `delta_max`; the critic scores (observation, action) pairs through input
//! concatenation. Training regresses the critic onto bootstrapped targets
//! from slowly-tracking target copies and ascends the actor along the
//! action-gradient of the critic. Exploration adds OU noise whose amplitude
//! decays linearly over training.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::env::{Action, Observation, ACTION_DIM, OBS_DIM};
use crate::net::{adam_step, soft_update, AdamState, ForwardCache, Mlp, OutputActivation, ParamGrads};
use crate::replay::Experience;
use crate::{Error, Result};

/// Learner hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgentConfig {
    /// Discount factor.
    pub gamma: f64,
    /// Polyak tracking rate for the target networks.
    pub tau: f64,
    pub lr_actor: f64,
    pub lr_critic: f64,
    pub batch_size: usize,
    /// Action bound, also the actor's output scale (rad).
    pub delta_max: f64,
    /// Stored transitions before training starts.
    pub warmup_transitions: usize,
    /// Learning steps per stored transition once training is underway.
    pub train_steps_per_transition: u32,
    /// Hidden layer widths shared by actor and critic.
    pub hidden_dims: Vec<usize>,
    /// OU mean-reversion rate.
    pub theta_ou: f64,
    /// Initial OU amplitude.
    pub sigma0: f64,
    /// Noise floor the amplitude decays to.
    pub sigma_floor: f64,
    /// Episodes over which the amplitude decays from sigma0 to the floor.
    pub noise_decay_horizon: u32,
}

impl Default for AgentConfig {
    fn default() -> Self {
        let delta_max = 0.2;
        Self {
            gamma: 0.9,
            tau: 1e-3,
            lr_actor: 1e-4,
            lr_critic: 1e-3,
            batch_size: 128,
            delta_max,
            warmup_transitions: 1000,
            train_steps_per_transition: 1,
            hidden_dims: vec![400, 300],
            theta_ou: 0.15,
            sigma0: 0.3 * delta_max,
            sigma_floor: 0.05 * delta_max,
            noise_decay_horizon: 1200,
        }
    }
}

impl AgentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::Config(format!("gamma must lie in [0, 1], got {}", self.gamma)));
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(Error::Config(format!("tau must lie in (0, 1], got {}", self.tau)));
        }
        if !(self.lr_actor > 0.0 && self.lr_critic > 0.0) {
            return Err(Error::Config("learning rates must be > 0".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be >= 1".into()));
        }
        if !(self.delta_max > 0.0) {
            return Err(Error::Config(format!("delta_max must be > 0, got {}", self.delta_max)));
        }
        if self.hidden_dims.is_empty() || self.hidden_dims.contains(&0) {
            return Err(Error::Config(format!(
                "hidden_dims must be nonempty positive, got {:?}",
                self.hidden_dims
            )));
        }
        if !(self.theta_ou > 0.0 && self.theta_ou < 1.0) {
            return Err(Error::Config(format!(
                "theta_ou must lie in (0, 1), got {}",
                self.theta_ou
            )));
        }
        if !(self.sigma0 >= self.sigma_floor && self.sigma_floor >= 0.0) {
            return Err(Error::Config(format!(
                "need sigma0 >= sigma_floor >= 0, got {} and {}",
                self.sigma0, self.sigma_floor
            )));
        }
        if self.noise_decay_horizon == 0 {
            return Err(Error::Config("noise_decay_horizon must be >= 1".into()));
        }
        if self.train_steps_per_transition == 0 {
            return Err(Error::Config("train_steps_per_transition must be >= 1".into()));
        }
        Ok(())
    }

    /// Linear noise decay with a floor.
    pub fn noise_scale(&self, episode: u32) -> f64 {
        let frac = 1.0 - episode as f64 / self.noise_decay_horizon as f64;
        (self.sigma0 * frac).max(self.sigma_floor)
    }

    fn actor_dims(&self) -> Vec<usize> {
        let mut dims = vec![OBS_DIM];
        dims.extend_from_slice(&self.hidden_dims);
        dims.push(ACTION_DIM);
        dims
    }

    fn critic_dims(&self) -> Vec<usize> {
        let mut dims = vec![OBS_DIM + ACTION_DIM];
        dims.extend_from_slice(&self.hidden_dims);
        dims.push(1);
        dims
    }
}

/// Actor, critic, their target copies, and the optimizer moments.
#[derive(Debug, Clone)]
pub struct Agent {
    pub actor: Mlp,
    pub critic: Mlp,
    pub target_actor: Mlp,
    pub target_critic: Mlp,
    pub actor_opt: AdamState,
    pub critic_opt: AdamState,
}

impl Agent {
    /// Fresh agent; targets start as exact copies of the live networks.
    pub fn init(cfg: &AgentConfig, actor_seed: u64, critic_seed: u64) -> Result<Self> {
        cfg.validate()?;
        let actor = Mlp::init(&cfg.actor_dims(), OutputActivation::Tanh, actor_seed)?;
        let critic = Mlp::init(&cfg.critic_dims(), OutputActivation::Identity, critic_seed)?;
        let actor_opt = AdamState::new(&actor, cfg.lr_actor);
        let critic_opt = AdamState::new(&critic, cfg.lr_critic);
        Ok(Self {
            target_actor: actor.clone(),
            target_critic: critic.clone(),
            actor,
            critic,
            actor_opt,
            critic_opt,
        })
    }

    /// Rebuilds an agent around checkpointed networks. Optimizer moments
    /// start fresh; checkpoints carry parameters only.
    pub fn from_networks(
        actor: Mlp,
        critic: Mlp,
        target_actor: Mlp,
        target_critic: Mlp,
        lr_actor: f64,
        lr_critic: f64,
    ) -> Result<Self> {
        if actor.layer_dims() != target_actor.layer_dims()
            || critic.layer_dims() != target_critic.layer_dims()
        {
            return Err(Error::Format("target architecture mismatch".into()));
        }
        if critic.input_dim() != actor.input_dim() + actor.output_dim() || critic.output_dim() != 1 {
            return Err(Error::Format("critic does not fit the actor's dimensions".into()));
        }
        let actor_opt = AdamState::new(&actor, lr_actor);
        let critic_opt = AdamState::new(&critic, lr_critic);
        Ok(Self {
            actor,
            critic,
            target_actor,
            target_critic,
            actor_opt,
            critic_opt,
        })
    }
}

/// Ornstein-Uhlenbeck noise state for one episode stream.
#[derive(Debug, Clone)]
pub struct OuState {
    x: [f64; ACTION_DIM],
    pub theta_ou: f64,
    pub sigma: f64,
}

impl OuState {
    pub fn new(theta_ou: f64, sigma: f64) -> Self {
        Self {
            x: [0.0; ACTION_DIM],
            theta_ou,
            sigma,
        }
    }

    /// Clears the noise state (episode boundaries).
    pub fn reset(&mut self) {
        self.x = [0.0; ACTION_DIM];
    }

    /// Advances the process: mean reversion toward zero plus a Gaussian kick;
    /// returns the new state.
    pub fn step<R: Rng>(&mut self, rng: &mut R) -> [f64; ACTION_DIM] {
        for xi in self.x.iter_mut() {
            let eta: f64 = rng.sample(StandardNormal);
            *xi += self.theta_ou * (0.0 - *xi) + self.sigma * eta;
        }
        self.x
    }
}

/// Deterministic policy output: the actor's tanh output scaled to the action
/// bound, so every component stays strictly inside it.
pub fn act(actor: &Mlp, obs: &Observation, delta_max: f64) -> Action {
    let y = actor.infer(obs.as_slice());
    Action([y[0] * delta_max, y[1] * delta_max, y[2] * delta_max])
}

/// Exploration policy: OU noise added to the deterministic action, clamped
/// back into the bound.
pub fn act_exploratory<R: Rng>(
    actor: &Mlp,
    obs: &Observation,
    ou: &mut OuState,
    delta_max: f64,
    rng: &mut R,
) -> Action {
    let base = act(actor, obs, delta_max);
    let noise = ou.step(rng);
    Action::clamped(
        [
            base.0[0] + noise[0],
            base.0[1] + noise[1],
            base.0[2] + noise[2],
        ],
        delta_max,
    )
}

fn critic_input(s: &Observation, a: &Action) -> Vec<f64> {
    let mut v = Vec::with_capacity(OBS_DIM + ACTION_DIM);
    v.extend_from_slice(s.as_slice());
    v.extend_from_slice(&a.0);
    v
}

/// Bootstrapped regression targets `y_i = r_i + gamma (1 - done_i) Q'(s'_i, mu'(s'_i))`.
pub fn critic_targets(
    batch: &[&Experience],
    target_actor: &Mlp,
    target_critic: &Mlp,
    gamma: f64,
    delta_max: f64,
) -> Vec<f64> {
    assert!(!batch.is_empty(), "critic_targets needs a nonempty batch");
    let mut cache = ForwardCache::default();
    batch
        .iter()
        .map(|exp| {
            if exp.done {
                exp.r
            } else {
                target_actor.forward_reuse(exp.s_next.as_slice(), &mut cache);
                let mu: Vec<f64> = cache.output().iter().map(|v| v * delta_max).collect();
                let mut input = Vec::with_capacity(OBS_DIM + ACTION_DIM);
                input.extend_from_slice(exp.s_next.as_slice());
                input.extend_from_slice(&mu);
                target_critic.forward_reuse(&input, &mut cache);
                exp.r + gamma * cache.output()[0]
            }
        })
        .collect()
}

/// Mean-squared critic loss against frozen targets, with its parameter
/// gradient. Generic over dimensions so small nets can be gradient-checked.
pub fn critic_loss_and_grads(critic: &Mlp, inputs: &[Vec<f64>], targets: &[f64]) -> (f64, ParamGrads) {
    assert_eq!(inputs.len(), targets.len());
    assert!(!inputs.is_empty());
    let n = inputs.len() as f64;
    let mut grads = ParamGrads::zeros_like(critic);
    let mut cache = ForwardCache::default();
    let mut loss = 0.0;
    for (input, &y) in inputs.iter().zip(targets) {
        critic.forward_reuse(input, &mut cache);
        let err = cache.output()[0] - y;
        loss += err * err;
        critic.backward_accumulate(&cache, &[2.0 * err / n], &mut grads);
    }
    (loss / n, grads)
}

/// Mean critic value of the actor's own actions, with its gradient in the
/// actor's parameters (the ascent direction): the critic is differentiated
/// with respect to its action inputs and the result flows back through the
/// actor, including the `delta_max` output scaling.
pub fn actor_objective_and_grads(
    actor: &Mlp,
    critic: &Mlp,
    states: &[&[f64]],
    delta_max: f64,
) -> (f64, ParamGrads) {
    assert!(!states.is_empty());
    let state_dim = actor.input_dim();
    let action_dim = actor.output_dim();
    assert_eq!(critic.input_dim(), state_dim + action_dim);
    let n = states.len() as f64;

    let mut grads = ParamGrads::zeros_like(actor);
    let mut actor_cache = ForwardCache::default();
    let mut critic_cache = ForwardCache::default();
    let mut objective = 0.0;
    let mut input = vec![0.0; state_dim + action_dim];
    for &s in states {
        actor.forward_reuse(s, &mut actor_cache);
        input[..state_dim].copy_from_slice(s);
        for (dst, &raw) in input[state_dim..].iter_mut().zip(actor_cache.output()) {
            *dst = raw * delta_max;
        }
        critic.forward_reuse(&input, &mut critic_cache);
        objective += critic_cache.output()[0];

        let (_, dq_dinput) = critic.backward(&critic_cache, &[1.0]);
        let dy_actor: Vec<f64> = dq_dinput[state_dim..].iter().map(|g| g * delta_max).collect();
        actor.backward_accumulate(&actor_cache, &dy_actor, &mut grads);
    }
    grads.scale(1.0 / n);
    (objective / n, grads)
}

/// Diagnostics from one training step, both evaluated before any parameter
/// update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainStats {
    pub critic_loss: f64,
    /// Mean Q(s, mu(s)) over the batch.
    pub actor_objective: f64,
}

/// One full learning step on a sampled mini-batch: critic regression toward
/// the bootstrapped targets, actor ascent along the critic's action
/// gradient, then Polyak updates of both targets.
pub fn train_step(agent: &mut Agent, batch: &[&Experience], cfg: &AgentConfig) -> Result<TrainStats> {
    assert_eq!(batch.len(), cfg.batch_size, "batch size mismatch");

    let targets = critic_targets(
        batch,
        &agent.target_actor,
        &agent.target_critic,
        cfg.gamma,
        cfg.delta_max,
    );
    let inputs: Vec<Vec<f64>> = batch.iter().map(|e| critic_input(&e.s, &e.a)).collect();
    let (critic_loss, critic_grads) = critic_loss_and_grads(&agent.critic, &inputs, &targets);

    let states: Vec<&[f64]> = batch.iter().map(|e| e.s.as_slice()).collect();
    let (actor_objective, mut actor_grads) =
        actor_objective_and_grads(&agent.actor, &agent.critic, &states, cfg.delta_max);

    if !critic_loss.is_finite() || !actor_objective.is_finite() {
        return Err(Error::Divergence(format!(
            "critic loss {critic_loss}, actor objective {actor_objective}"
        )));
    }

    adam_step(&mut agent.critic, &critic_grads, &mut agent.critic_opt)?;
    actor_grads.scale(-1.0);
    adam_step(&mut agent.actor, &actor_grads, &mut agent.actor_opt)?;

    soft_update(&mut agent.target_actor, &agent.actor, cfg.tau);
    soft_update(&mut agent.target_critic, &agent.critic, cfg.tau);

    Ok(TrainStats {
        critic_loss,
        actor_objective,
    })
}
