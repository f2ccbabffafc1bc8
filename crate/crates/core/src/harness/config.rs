//! Run configuration: flat `key = value` files over profile defaults.
//!
//! Precedence, lowest to highest: profile defaults, config-file keys, CLI
//! overrides. Unknown keys and duplicate keys are rejected with their line
//! number. All angles are radians, all lengths metres.

use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use crate::ddpg::AgentConfig;
use crate::env::EnvConfig;
use crate::replay::UpdateMethod;
use crate::{Error, Result};

/// Experiment scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    /// 400/300 hidden units, 1500 episodes, 200 stored steps per episode.
    Paper,
    /// 64/64 hidden units, 400 episodes, 60 stored steps per episode; the
    /// same semantics at a scale the acceptance suite can afford.
    Desk,
}

impl Profile {
    fn hidden_dims(self) -> Vec<usize> {
        match self {
            Profile::Paper => vec![400, 300],
            Profile::Desk => vec![64, 64],
        }
    }

    fn episodes(self) -> u32 {
        match self {
            Profile::Paper => 1500,
            Profile::Desk => 400,
        }
    }

    fn stored_steps(self) -> u32 {
        match self {
            Profile::Paper => 200,
            Profile::Desk => 60,
        }
    }

    /// The desk profile doubles the learning cadence to make up for its
    /// 12x smaller experience budget.
    fn train_steps_per_transition(self) -> u32 {
        match self {
            Profile::Paper => 1,
            Profile::Desk => 2,
        }
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Profile::Paper => "paper",
            Profile::Desk => "desk",
        })
    }
}

impl FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "paper" => Ok(Profile::Paper),
            "desk" => Ok(Profile::Desk),
            other => Err(Error::Config(format!(
                "unknown profile {other:?}, expected paper or desk"
            ))),
        }
    }
}

/// Fully resolved configuration for one training or evaluation run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub env: EnvConfig,
    pub agent: AgentConfig,
    pub method: UpdateMethod,
    pub episodes: u32,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub profile: Profile,
    pub eval_seed: u64,
    pub eval_episodes: u32,
    /// The sigma applied by methods C and D; A and B run with sigma = 0.
    pub sigma_penalty: f64,
    pub replay_capacity: usize,
}

impl RunConfig {
    /// Profile defaults with no file or CLI input. Method A, seed 0.
    pub fn defaults(profile: Profile) -> Self {
        let env = EnvConfig {
            stored_steps_per_episode: profile.stored_steps(),
            ..EnvConfig::default()
        };
        let episodes = profile.episodes();
        let agent = AgentConfig {
            hidden_dims: profile.hidden_dims(),
            noise_decay_horizon: relative_horizon(episodes),
            train_steps_per_transition: profile.train_steps_per_transition(),
            ..AgentConfig::default()
        };
        let mut cfg = Self {
            env,
            agent,
            method: UpdateMethod::A,
            episodes,
            seed: 0,
            out_dir: PathBuf::from("out"),
            profile,
            eval_seed: 4242,
            eval_episodes: 100,
            sigma_penalty: -10.0,
            replay_capacity: 100_000,
        };
        cfg.apply_method(cfg.method);
        cfg
    }

    /// Re-derives the method-bound reward sigma: zero for A/B, the
    /// configured penalty for C/D.
    pub fn apply_method(&mut self, method: UpdateMethod) {
        self.method = method;
        self.env.reward.sigma = if method.object_penalty() {
            self.sigma_penalty
        } else {
            0.0
        };
    }

    /// A copy configured for one comparison cell.
    pub fn cell(&self, method: UpdateMethod, seed: u64, out_dir: PathBuf) -> Self {
        let mut cfg = self.clone();
        cfg.apply_method(method);
        cfg.seed = seed;
        cfg.out_dir = out_dir;
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        self.env.validate()?;
        self.agent.validate()?;
        if self.episodes == 0 {
            return Err(Error::Config("episodes must be >= 1".into()));
        }
        if self.eval_episodes == 0 {
            return Err(Error::Config("eval_episodes must be >= 1".into()));
        }
        if !(self.sigma_penalty <= 0.0) {
            return Err(Error::Config(format!(
                "sigma must be <= 0, got {}",
                self.sigma_penalty
            )));
        }
        if self.replay_capacity == 0 {
            return Err(Error::Config("replay_capacity must be >= 1".into()));
        }
        if self.agent.delta_max != self.env.delta_max {
            return Err(Error::Config(
                "internal: agent and env delta_max diverged".into(),
            ));
        }
        Ok(())
    }
}

/// 80% of training, rounded up: the episode from which the noise amplitude
/// sits at its floor.
fn relative_horizon(episodes: u32) -> u32 {
    ((episodes as f64) * 0.8).ceil().max(1.0) as u32
}

/// Values the CLI may force on top of the file.
#[derive(Debug, Clone, Default)]
pub struct ConfigOverrides {
    pub method: Option<UpdateMethod>,
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub profile: Option<Profile>,
}

struct Entry {
    line: usize,
    key: String,
    value: String,
}

fn parse_entries(path: &Path, text: &str) -> Result<Vec<Entry>> {
    let mut entries = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let stripped = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        let stripped = stripped.trim();
        if stripped.is_empty() {
            continue;
        }
        let Some((key, value)) = stripped.split_once('=') else {
            return Err(Error::ConfigLine {
                path: path.to_path_buf(),
                line,
                msg: format!("expected `key = value`, got {stripped:?}"),
            });
        };
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if key.is_empty() || value.is_empty() {
            return Err(Error::ConfigLine {
                path: path.to_path_buf(),
                line,
                msg: "empty key or value".into(),
            });
        }
        if !seen.insert(key.clone()) {
            return Err(Error::ConfigLine {
                path: path.to_path_buf(),
                line,
                msg: format!("duplicate key {key:?}"),
            });
        }
        entries.push(Entry { line, key, value });
    }
    Ok(entries)
}

macro_rules! parse_as {
    ($entry:expr, $path:expr, $ty:ty) => {
        $entry.value.parse::<$ty>().map_err(|e| Error::ConfigLine {
            path: $path.to_path_buf(),
            line: $entry.line,
            msg: format!("bad value {:?} for {}: {e}", $entry.value, $entry.key),
        })?
    };
}

/// Loads and validates a run configuration.
///
/// Missing keys take documented defaults; unknown keys are rejected with
/// their line number. `overrides` carries CLI flags, which win over the
/// file.
pub fn load_config(path: &Path, overrides: &ConfigOverrides) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        Error::Config(format!("cannot read config {}: {e}", path.display()))
    })?;
    let entries = parse_entries(path, &text)?;

    // The profile decides the baseline, so find it first.
    let mut profile = Profile::Desk;
    for entry in &entries {
        if entry.key == "profile" {
            profile = parse_as!(entry, path, Profile);
        }
    }
    if let Some(p) = overrides.profile {
        profile = p;
    }

    let mut cfg = RunConfig::defaults(profile);
    // These fall back to values derived from delta_max / episodes unless the
    // file pins them explicitly.
    let mut sigma0: Option<f64> = None;
    let mut sigma_floor: Option<f64> = None;
    let mut horizon: Option<u32> = None;
    let mut episodes_set = false;

    for entry in &entries {
        match entry.key.as_str() {
            "profile" => {}
            "h1" => cfg.env.geometry.h1 = parse_as!(entry, path, f64),
            "l2" => cfg.env.geometry.l2 = parse_as!(entry, path, f64),
            "l3" => cfg.env.geometry.l3 = parse_as!(entry, path, f64),
            "l4" => cfg.env.geometry.l4 = parse_as!(entry, path, f64),
            "lc" => cfg.env.geometry.lc = parse_as!(entry, path, f64),
            "q1_min" => cfg.env.limits.min[0] = parse_as!(entry, path, f64),
            "q1_max" => cfg.env.limits.max[0] = parse_as!(entry, path, f64),
            "q2_min" => cfg.env.limits.min[1] = parse_as!(entry, path, f64),
            "q2_max" => cfg.env.limits.max[1] = parse_as!(entry, path, f64),
            "q3_min" => cfg.env.limits.min[2] = parse_as!(entry, path, f64),
            "q3_max" => cfg.env.limits.max[2] = parse_as!(entry, path, f64),
            "omega_max" => cfg.env.motion.omega_max = parse_as!(entry, path, f64),
            "dt" => cfg.env.motion.dt = parse_as!(entry, path, f64),
            "eps" => cfg.env.motion.eps = parse_as!(entry, path, f64),
            "settle_max_ticks" => cfg.env.motion.max_ticks = parse_as!(entry, path, u32),
            "alpha" => cfg.env.reward.alpha = parse_as!(entry, path, f64),
            "beta" => cfg.env.reward.beta = parse_as!(entry, path, f64),
            "alpha_d" => cfg.env.reward.alpha_d = parse_as!(entry, path, f64),
            "beta_d" => cfg.env.reward.beta_d = parse_as!(entry, path, f64),
            "sigma" => cfg.sigma_penalty = parse_as!(entry, path, f64),
            "delta_max" => {
                let v = parse_as!(entry, path, f64);
                cfg.env.delta_max = v;
                cfg.agent.delta_max = v;
            }
            "d_goal" => cfg.env.d_goal = parse_as!(entry, path, f64),
            "n_hold" => cfg.env.n_hold = parse_as!(entry, path, u32),
            "stored_steps_per_episode" => {
                cfg.env.stored_steps_per_episode = parse_as!(entry, path, u32)
            }
            "max_attempted_steps" => cfg.env.max_attempted_steps = parse_as!(entry, path, u32),
            "rho_min" => cfg.env.rho_range.0 = parse_as!(entry, path, f64),
            "rho_max" => cfg.env.rho_range.1 = parse_as!(entry, path, f64),
            "phi_min" => cfg.env.phi_range.0 = parse_as!(entry, path, f64),
            "phi_max" => cfg.env.phi_range.1 = parse_as!(entry, path, f64),
            "object_radius" => cfg.env.object_radius = parse_as!(entry, path, f64),
            "object_height" => cfg.env.object_height = parse_as!(entry, path, f64),
            "q1_default" => cfg.env.default_joints.q1 = parse_as!(entry, path, f64),
            "q2_default" => cfg.env.default_joints.q2 = parse_as!(entry, path, f64),
            "q3_default" => cfg.env.default_joints.q3 = parse_as!(entry, path, f64),
            "gamma" => cfg.agent.gamma = parse_as!(entry, path, f64),
            "tau" => cfg.agent.tau = parse_as!(entry, path, f64),
            "lr_actor" => cfg.agent.lr_actor = parse_as!(entry, path, f64),
            "lr_critic" => cfg.agent.lr_critic = parse_as!(entry, path, f64),
            "batch_size" => cfg.agent.batch_size = parse_as!(entry, path, usize),
            "warmup_transitions" => cfg.agent.warmup_transitions = parse_as!(entry, path, usize),
            "train_steps_per_transition" => {
                cfg.agent.train_steps_per_transition = parse_as!(entry, path, u32)
            }
            "theta_ou" => cfg.agent.theta_ou = parse_as!(entry, path, f64),
            "sigma0" => sigma0 = Some(parse_as!(entry, path, f64)),
            "sigma_floor" => sigma_floor = Some(parse_as!(entry, path, f64)),
            "noise_decay_horizon" => horizon = Some(parse_as!(entry, path, u32)),
            "hidden1" => cfg.agent.hidden_dims[0] = parse_as!(entry, path, usize),
            "hidden2" => {
                let v = parse_as!(entry, path, usize);
                if cfg.agent.hidden_dims.len() < 2 {
                    cfg.agent.hidden_dims.push(v);
                } else {
                    cfg.agent.hidden_dims[1] = v;
                }
            }
            "episodes" => {
                cfg.episodes = parse_as!(entry, path, u32);
                episodes_set = true;
            }
            "method" => cfg.method = parse_as!(entry, path, UpdateMethod),
            "seed" => cfg.seed = parse_as!(entry, path, u64),
            "out_dir" => cfg.out_dir = PathBuf::from(&entry.value),
            "eval_seed" => cfg.eval_seed = parse_as!(entry, path, u64),
            "eval_episodes" => cfg.eval_episodes = parse_as!(entry, path, u32),
            "replay_capacity" => cfg.replay_capacity = parse_as!(entry, path, usize),
            other => {
                return Err(Error::ConfigLine {
                    path: path.to_path_buf(),
                    line: entry.line,
                    msg: format!("unknown key {other:?}"),
                });
            }
        }
    }

    if let Some(m) = overrides.method {
        cfg.method = m;
    }
    if let Some(s) = overrides.seed {
        cfg.seed = s;
    }
    if let Some(dir) = &overrides.out_dir {
        cfg.out_dir = dir.clone();
    }

    // Derived defaults: the noise schedule tracks the action scale and the
    // training length unless pinned explicitly.
    cfg.agent.sigma0 = sigma0.unwrap_or(0.3 * cfg.agent.delta_max);
    cfg.agent.sigma_floor = sigma_floor.unwrap_or(0.05 * cfg.agent.delta_max);
    cfg.agent.noise_decay_horizon = horizon.unwrap_or_else(|| {
        if episodes_set {
            relative_horizon(cfg.episodes)
        } else {
            cfg.agent.noise_decay_horizon
        }
    });
    cfg.apply_method(cfg.method);

    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_config(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    fn load(content: &str) -> Result<RunConfig> {
        let f = write_config(content);
        load_config(f.path(), &ConfigOverrides::default())
    }

    #[test]
    fn empty_file_gives_defaults() {
        let cfg = load("").unwrap();
        assert_eq!(cfg, RunConfig::defaults(Profile::Desk));
        assert_eq!(cfg.episodes, 400);
        assert_eq!(cfg.env.stored_steps_per_episode, 60);
        assert_eq!(cfg.agent.hidden_dims, vec![64, 64]);
        assert_eq!(cfg.agent.gamma, 0.9);
        assert_eq!(cfg.env.reward.sigma, 0.0);
    }

    #[test]
    fn paper_profile_defaults() {
        let cfg = load("profile = paper").unwrap();
        assert_eq!(cfg.episodes, 1500);
        assert_eq!(cfg.env.stored_steps_per_episode, 200);
        assert_eq!(cfg.agent.hidden_dims, vec![400, 300]);
        assert_eq!(cfg.agent.batch_size, 128);
        assert_eq!(cfg.agent.noise_decay_horizon, 1200);
    }

    #[test]
    fn key_assignment_and_comments() {
        let cfg = load("# comment\ngamma = 0.9\n\n  tau = 0.005  # inline\n").unwrap();
        assert_eq!(cfg.agent.gamma, 0.9);
        assert_eq!(cfg.agent.tau, 0.005);
    }

    #[test]
    fn out_of_range_gamma_rejected() {
        assert!(matches!(load("gamma = 1.5"), Err(Error::Config(_))));
    }

    #[test]
    fn unknown_key_rejected_with_line() {
        match load("gamma = 0.9\nbogus = 1\n") {
            Err(Error::ConfigLine { line, msg, .. }) => {
                assert_eq!(line, 2);
                assert!(msg.contains("bogus"));
            }
            other => panic!("expected line error, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_key_rejected() {
        match load("gamma = 0.9\ngamma = 0.8\n") {
            Err(Error::ConfigLine { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected line error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_line_rejected() {
        assert!(matches!(
            load("gamma 0.9"),
            Err(Error::ConfigLine { line: 1, .. })
        ));
        assert!(matches!(
            load("gamma = notanumber"),
            Err(Error::ConfigLine { line: 1, .. })
        ));
    }

    #[test]
    fn method_fixes_sigma() {
        let a = load("method = A\nsigma = -5").unwrap();
        assert_eq!(a.env.reward.sigma, 0.0);
        let c = load("method = C\nsigma = -5").unwrap();
        assert_eq!(c.env.reward.sigma, -5.0);
        let d = load("method = D").unwrap();
        assert_eq!(d.env.reward.sigma, -10.0);
    }

    #[test]
    fn noise_defaults_track_delta_max_and_episodes() {
        let cfg = load("delta_max = 0.4\nepisodes = 100").unwrap();
        assert!((cfg.agent.sigma0 - 0.12).abs() < 1e-15);
        assert!((cfg.agent.sigma_floor - 0.02).abs() < 1e-15);
        assert_eq!(cfg.agent.noise_decay_horizon, 80);
        assert_eq!(cfg.agent.delta_max, 0.4);
        assert_eq!(cfg.env.delta_max, 0.4);

        let pinned = load("sigma0 = 0.5\nsigma_floor = 0.1\nnoise_decay_horizon = 7").unwrap();
        assert_eq!(pinned.agent.sigma0, 0.5);
        assert_eq!(pinned.agent.sigma_floor, 0.1);
        assert_eq!(pinned.agent.noise_decay_horizon, 7);
    }

    #[test]
    fn overrides_win_over_file() {
        let f = write_config("method = A\nseed = 1\nprofile = paper\nepisodes = 10");
        let cfg = load_config(
            f.path(),
            &ConfigOverrides {
                method: Some(UpdateMethod::C),
                seed: Some(9),
                out_dir: Some(PathBuf::from("elsewhere")),
                profile: Some(Profile::Desk),
            },
        )
        .unwrap();
        assert_eq!(cfg.method, UpdateMethod::C);
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.out_dir, PathBuf::from("elsewhere"));
        assert_eq!(cfg.profile, Profile::Desk);
        // File keys still beat profile defaults.
        assert_eq!(cfg.episodes, 10);
        // Method C brings the penalty in.
        assert_eq!(cfg.env.reward.sigma, -10.0);
    }

    #[test]
    fn region_outside_reach_rejected() {
        assert!(load("rho_max = 2.0").is_err());
    }
}
