//! The reaching MDP around the arm simulator.
//!
//! Observations are 20 components of raw SI units; actions are per-joint
//! reference deltas bounded by `delta_max`. Success means keeping the cup
//! within `d_goal` of the object's top center for `n_hold` consecutive
//! decision steps, which turns the episode flag on and ends the episode.
//!
//! Two interaction modes share all other semantics:
//! - [`Env::step_settle`]: the reference is held until the arm reaches a
//!   steady state; one decision spans several ticks, and transitions stuck
//!   at a joint limit are flagged as not worth storing.
//! - [`Env::step_tick`]: one decision per simulator tick; the stored next
//!   state is whatever transient the rate limit produced.

use rand::Rng;
use serde::Serialize;

use crate::arm_sim::{
    clamp_reference, forward_kinematics, resolve_object_push, settle_observed, tick, ArmGeometry,
    JointLimits, JointVector, LinkPoints, MotionParams, ObjectState, Vec3,
};
use crate::{Error, Result};

/// Observation width.
pub const OBS_DIM: usize = 20;
/// Action width.
pub const ACTION_DIM: usize = 3;

/// Scalar coefficients of the shaped reward.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RewardParams {
    /// Weight of the next-state potential (> 0).
    pub alpha: f64,
    /// Weight of the potential improvement (> 0).
    pub beta: f64,
    /// Object-displacement penalty (<= 0; 0 disables the penalty).
    pub sigma: f64,
    /// Horizontal-distance coefficient inside the potential (< 0).
    pub alpha_d: f64,
    /// Vertical-distance coefficient inside the potential (< 0).
    pub beta_d: f64,
}

impl Default for RewardParams {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: 5.0,
            sigma: 0.0,
            alpha_d: -1.0,
            beta_d: -1.0,
        }
    }
}

impl RewardParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) {
            return Err(Error::Config(format!("alpha must be > 0, got {}", self.alpha)));
        }
        if !(self.beta > 0.0) {
            return Err(Error::Config(format!("beta must be > 0, got {}", self.beta)));
        }
        if !(self.sigma <= 0.0) {
            return Err(Error::Config(format!("sigma must be <= 0, got {}", self.sigma)));
        }
        if !(self.alpha_d < 0.0) {
            return Err(Error::Config(format!("alpha_d must be < 0, got {}", self.alpha_d)));
        }
        if !(self.beta_d < 0.0) {
            return Err(Error::Config(format!("beta_d must be < 0, got {}", self.beta_d)));
        }
        Ok(())
    }
}

/// Everything the environment needs: arm model, reward, episode budgets, and
/// the object sampling region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnvConfig {
    pub geometry: ArmGeometry,
    pub limits: JointLimits,
    pub motion: MotionParams,
    pub reward: RewardParams,
    /// Per-component action bound (rad).
    pub delta_max: f64,
    /// Cup-to-goal distance counted as "at the goal" (m).
    pub d_goal: f64,
    /// Consecutive at-goal decision steps required for success.
    pub n_hold: u32,
    /// Episode ends once this many transitions were stored.
    pub stored_steps_per_episode: u32,
    /// Hard cap on decision steps, stored or not.
    pub max_attempted_steps: u32,
    /// Radial range of object base centers (m).
    pub rho_range: (f64, f64),
    /// Azimuth range of object base centers (rad).
    pub phi_range: (f64, f64),
    pub object_radius: f64,
    pub object_height: f64,
    /// Joint pose at episode reset.
    pub default_joints: JointVector,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            geometry: ArmGeometry::default(),
            limits: JointLimits::default(),
            motion: MotionParams::default(),
            reward: RewardParams::default(),
            delta_max: 0.2,
            d_goal: 0.010,
            n_hold: 5,
            stored_steps_per_episode: 200,
            max_attempted_steps: 400,
            rho_range: (0.24, 0.30),
            phi_range: (-60f64.to_radians(), 60f64.to_radians()),
            object_radius: 0.020,
            object_height: 0.040,
            default_joints: JointVector::new(0.0, 45f64.to_radians(), -20f64.to_radians()),
        }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        self.limits.validate()?;
        self.motion.validate()?;
        self.reward.validate()?;
        if !(self.delta_max > 0.0) {
            return Err(Error::Config(format!("delta_max must be > 0, got {}", self.delta_max)));
        }
        if !(self.d_goal > 0.0) {
            return Err(Error::Config(format!("d_goal must be > 0, got {}", self.d_goal)));
        }
        if self.n_hold == 0 {
            return Err(Error::Config("n_hold must be >= 1".into()));
        }
        if self.stored_steps_per_episode == 0 {
            return Err(Error::Config("stored_steps_per_episode must be >= 1".into()));
        }
        if self.max_attempted_steps == 0 {
            return Err(Error::Config("max_attempted_steps must be >= 1".into()));
        }
        let (rho_min, rho_max) = self.rho_range;
        if !(rho_min > 0.0 && rho_min <= rho_max) {
            return Err(Error::Config(format!(
                "object radial range must satisfy 0 < min <= max, got [{rho_min}, {rho_max}]"
            )));
        }
        if rho_max > self.geometry.horizontal_reach() {
            return Err(Error::Config(format!(
                "object radial range reaches {rho_max} m, beyond the arm's {} m",
                self.geometry.horizontal_reach()
            )));
        }
        if self.phi_range.0 > self.phi_range.1 {
            return Err(Error::Config(format!(
                "object azimuth range must satisfy min <= max, got [{}, {}]",
                self.phi_range.0, self.phi_range.1
            )));
        }
        if !(self.object_radius > 0.0 && self.object_height > 0.0) {
            return Err(Error::Config("object radius and height must be > 0".into()));
        }
        if !self.limits.contains(self.default_joints) {
            return Err(Error::Config("default joints lie outside the joint limits".into()));
        }
        Ok(())
    }
}

/// 20-component state vector. Layout:
///
/// | index  | content                                             |
/// |--------|-----------------------------------------------------|
/// | 0..3   | elbow position (m)                                  |
/// | 3..6   | wrist position (m)                                  |
/// | 6..9   | end-link tip position (m)                           |
/// | 9..12  | suction-cup position (m)                            |
/// | 12..15 | displacement from cup to the object-top goal (m)    |
/// | 15..18 | joint angles q1, q2, q3 (rad)                       |
/// | 18     | Euclidean cup-to-goal distance (m)                  |
/// | 19     | success flag, 0 or 1                                |
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation(pub [f64; OBS_DIM]);

impl Observation {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Cup-to-goal displacement vector (components 12..15).
    pub fn displacement(&self) -> Vec3 {
        Vec3::new(self.0[12], self.0[13], self.0[14])
    }

    /// Euclidean cup-to-goal distance (component 18).
    pub fn distance(&self) -> f64 {
        self.0[18]
    }

    /// Horizontal and vertical cup-to-goal distances, recomputed exactly the
    /// way the reward path computes them.
    pub fn planar_distances(&self) -> (f64, f64) {
        (self.0[12].hypot(self.0[13]), self.0[14].abs())
    }

    pub fn flag(&self) -> f64 {
        self.0[19]
    }
}

/// Per-joint reference delta (rad), each component within `[-delta_max, delta_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Action(pub [f64; ACTION_DIM]);

impl Action {
    /// Clamps each component into the action bound.
    pub fn clamped(raw: [f64; ACTION_DIM], delta_max: f64) -> Self {
        Self([
            raw[0].clamp(-delta_max, delta_max),
            raw[1].clamp(-delta_max, delta_max),
            raw[2].clamp(-delta_max, delta_max),
        ])
    }

    pub fn norm(&self) -> f64 {
        (self.0[0] * self.0[0] + self.0[1] * self.0[1] + self.0[2] * self.0[2]).sqrt()
    }
}

/// What one decision step produced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub next_obs: Observation,
    pub reward: f64,
    pub done: bool,
    pub success: bool,
    /// False exactly for boundary-stuck settle transitions.
    pub stored: bool,
    /// Simulator ticks consumed by this decision.
    pub ticks: u32,
    /// Object displacement accumulated over this decision (m).
    pub d_o: f64,
}

/// Samples an object base center uniformly in radius and azimuth over the
/// configured region. Draw order (radius, then azimuth) is part of the
/// determinism contract.
pub fn sample_object_position<R: Rng>(cfg: &EnvConfig, rng: &mut R) -> Vec3 {
    let rho = rng.gen_range(cfg.rho_range.0..=cfg.rho_range.1);
    let phi = rng.gen_range(cfg.phi_range.0..=cfg.phi_range.1);
    Vec3::new(rho * phi.cos(), rho * phi.sin(), 0.0)
}

/// Horizontal and vertical distances from the cup to the object's top-center
/// goal point, plus the goal itself.
pub fn distances(points: &LinkPoints, obj: &ObjectState) -> (f64, f64, Vec3) {
    let goal = obj.top_center();
    let dvec = goal - points.pc;
    (dvec.xy_norm(), dvec.z.abs(), goal)
}

/// Distance potential `alpha_d * d_h + beta_d * d_v` (never positive).
pub fn potential(d_h: f64, d_v: f64, params: &RewardParams) -> f64 {
    params.alpha_d * d_h + params.beta_d * d_v
}

/// Shaped step reward: weighted next-state potential, plus the potential
/// improvement over the previous state, plus the object-displacement
/// penalty.
pub fn reward(prev: (f64, f64), next: (f64, f64), d_o: f64, params: &RewardParams) -> f64 {
    let r_prev = potential(prev.0, prev.1, params);
    let r_next = potential(next.0, next.1, params);
    params.alpha * r_next + params.beta * (r_next - r_prev) + params.sigma * d_o
}

/// Encodes the observation for an arbitrary (arm, object, flag) state.
pub fn encode_observation(
    geometry: &ArmGeometry,
    q: JointVector,
    object: &ObjectState,
    flag: bool,
) -> Observation {
    let pts = forward_kinematics(geometry, q);
    let goal = object.top_center();
    let disp = goal - pts.pc;
    let mut o = [0.0; OBS_DIM];
    for (dst, p) in [(0, pts.p2), (3, pts.p3), (6, pts.p4), (9, pts.pc)] {
        o[dst] = p.x;
        o[dst + 1] = p.y;
        o[dst + 2] = p.z;
    }
    o[12] = disp.x;
    o[13] = disp.y;
    o[14] = disp.z;
    o[15] = q.q1;
    o[16] = q.q2;
    o[17] = q.q3;
    o[18] = disp.norm();
    o[19] = if flag { 1.0 } else { 0.0 };
    Observation(o)
}

/// One episode's worth of mutable environment state.
#[derive(Debug, Clone)]
pub struct Env {
    cfg: EnvConfig,
    q: JointVector,
    object: ObjectState,
    hold: u32,
    flag: bool,
    success: bool,
    done: bool,
    stored_count: u32,
    attempted_count: u32,
}

impl Env {
    /// Builds an environment; [`Env::reset`] must run before stepping.
    pub fn new(cfg: EnvConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            q: cfg.default_joints,
            object: ObjectState {
                center: Vec3::default(),
                radius: cfg.object_radius,
                height: cfg.object_height,
            },
            hold: 0,
            flag: false,
            success: false,
            done: true,
            stored_count: 0,
            attempted_count: 0,
        })
    }

    pub fn cfg(&self) -> &EnvConfig {
        &self.cfg
    }

    pub fn joints(&self) -> JointVector {
        self.q
    }

    pub fn object(&self) -> &ObjectState {
        &self.object
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn succeeded(&self) -> bool {
        self.success
    }

    /// Starts a new episode: default joints, cleared flag, a fresh object
    /// position drawn from `rng`.
    pub fn reset<R: Rng>(&mut self, rng: &mut R) -> Observation {
        self.q = self.cfg.default_joints;
        self.object = ObjectState {
            center: sample_object_position(&self.cfg, rng),
            radius: self.cfg.object_radius,
            height: self.cfg.object_height,
        };
        self.hold = 0;
        self.flag = false;
        self.success = false;
        self.done = false;
        self.stored_count = 0;
        self.attempted_count = 0;
        self.observe()
    }

    /// Encodes the current state.
    pub fn observe(&self) -> Observation {
        encode_observation(&self.cfg.geometry, self.q, &self.object, self.flag)
    }

    /// Settle-mode decision: hold the clamped reference until the arm is
    /// steady, resolving object pushes each tick. The outcome is marked
    /// `stored = false` when the transition was stuck at a joint limit.
    pub fn step_settle(&mut self, action: Action) -> Result<StepOutcome> {
        assert!(!self.done, "step_settle on a finished episode");
        self.check_action(action);
        let geometry = self.cfg.geometry;
        let q_start = self.q;
        let pts_start = forward_kinematics(&geometry, q_start);
        let (d_h_prev, d_v_prev, _) = distances(&pts_start, &self.object);

        let raw_ref = q_start.offset(action.0);
        let (q_ref, flags) = clamp_reference(raw_ref, &self.cfg.limits);
        let clipped = flags.iter().any(|&f| f);

        let mut object = self.object;
        let mut prev_cup = pts_start.pc;
        let mut d_o_total = 0.0;
        let res = settle_observed(q_start, q_ref, clipped, &self.cfg.motion, |q_now| {
            let cup = forward_kinematics(&geometry, q_now).pc;
            let (pushed, d) = resolve_object_push(prev_cup, cup, &object);
            object = pushed;
            d_o_total += d;
            prev_cup = cup;
        })?;

        self.q = res.q_steady;
        self.object = object;
        let stored = !res.stuck_at_boundary;
        Ok(self.finish_step(d_h_prev, d_v_prev, d_o_total, stored, res.ticks))
    }

    /// Tick-mode decision: exactly one tick toward the clamped reference;
    /// every transition is stored.
    pub fn step_tick(&mut self, action: Action) -> Result<StepOutcome> {
        assert!(!self.done, "step_tick on a finished episode");
        self.check_action(action);
        let geometry = self.cfg.geometry;
        let q_start = self.q;
        let pts_start = forward_kinematics(&geometry, q_start);
        let (d_h_prev, d_v_prev, _) = distances(&pts_start, &self.object);

        let raw_ref = q_start.offset(action.0);
        let (q_ref, _) = clamp_reference(raw_ref, &self.cfg.limits);
        let q_next = tick(q_start, q_ref, self.cfg.motion.omega_max, self.cfg.motion.dt);
        let cup = forward_kinematics(&geometry, q_next).pc;
        let (pushed, d_o) = resolve_object_push(pts_start.pc, cup, &self.object);

        self.q = q_next;
        self.object = pushed;
        Ok(self.finish_step(d_h_prev, d_v_prev, d_o, true, 1))
    }

    fn check_action(&self, action: Action) {
        debug_assert!(
            action.0.iter().all(|a| a.abs() <= self.cfg.delta_max + 1e-12),
            "action {action:?} violates the delta_max bound"
        );
    }

    /// Shared tail of both step modes: reward, hold/flag update, budgets,
    /// and the encoded next observation.
    fn finish_step(
        &mut self,
        d_h_prev: f64,
        d_v_prev: f64,
        d_o: f64,
        stored: bool,
        ticks: u32,
    ) -> StepOutcome {
        let pts = forward_kinematics(&self.cfg.geometry, self.q);
        let (d_h, d_v, goal) = distances(&pts, &self.object);
        let r = reward((d_h_prev, d_v_prev), (d_h, d_v), d_o, &self.cfg.reward);

        self.attempted_count += 1;
        if stored {
            self.stored_count += 1;
        }
        let dist = (goal - pts.pc).norm();
        if dist <= self.cfg.d_goal {
            self.hold += 1;
        } else {
            self.hold = 0;
        }
        if self.hold >= self.cfg.n_hold {
            self.flag = true;
            self.success = true;
            self.done = true;
        }
        if self.stored_count >= self.cfg.stored_steps_per_episode
            || self.attempted_count >= self.cfg.max_attempted_steps
        {
            self.done = true;
        }

        StepOutcome {
            next_obs: self.observe(),
            reward: r,
            done: self.done,
            success: self.success,
            stored,
            ticks,
            d_o,
        }
    }
}
