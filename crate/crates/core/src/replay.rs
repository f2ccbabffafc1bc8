//! Fixed-capacity FIFO experience store with uniform sampling, plus the
//! method-dependent admission rule that is the point of this project:
//! adaptive methods admit only settled, non-stuck transitions while uniform
//! methods admit every tick.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::Serialize;

use crate::env::{Action, Observation, StepOutcome};
use crate::{Error, Result};

/// One stored transition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Experience {
    pub s: Observation,
    pub a: Action,
    pub r: f64,
    pub s_next: Observation,
    /// True only for success terminals; budget exhaustion does not cut the
    /// bootstrap.
    pub done: bool,
}

/// The 2x2 experiment grid: {adaptive, uniform} buffer admission crossed
/// with {zero, negative} object-displacement penalty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum UpdateMethod {
    /// Adaptive admission, no displacement penalty.
    A,
    /// Per-tick admission, no displacement penalty.
    B,
    /// Adaptive admission with displacement penalty.
    C,
    /// Per-tick admission with displacement penalty.
    D,
}

impl UpdateMethod {
    pub const ALL: [UpdateMethod; 4] = [
        UpdateMethod::A,
        UpdateMethod::B,
        UpdateMethod::C,
        UpdateMethod::D,
    ];

    /// Adaptive methods store settled transitions only.
    pub fn adaptive(self) -> bool {
        matches!(self, UpdateMethod::A | UpdateMethod::C)
    }

    /// Methods C and D penalize object displacement (sigma < 0).
    pub fn object_penalty(self) -> bool {
        matches!(self, UpdateMethod::C | UpdateMethod::D)
    }
}

impl fmt::Display for UpdateMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            UpdateMethod::A => "A",
            UpdateMethod::B => "B",
            UpdateMethod::C => "C",
            UpdateMethod::D => "D",
        };
        f.write_str(s)
    }
}

impl FromStr for UpdateMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "A" | "a" => Ok(UpdateMethod::A),
            "B" | "b" => Ok(UpdateMethod::B),
            "C" | "c" => Ok(UpdateMethod::C),
            "D" | "d" => Ok(UpdateMethod::D),
            other => Err(Error::Config(format!(
                "unknown method {other:?}, expected one of A, B, C, D"
            ))),
        }
    }
}

/// Admission rule: uniform methods store every outcome; adaptive methods
/// store everything except boundary-stuck settle transitions, which carry
/// no useful experience.
pub fn admit(method: UpdateMethod, outcome: &StepOutcome) -> bool {
    if method.adaptive() {
        outcome.stored
    } else {
        true
    }
}

/// FIFO ring of experiences with uniform with-replacement sampling.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    storage: VecDeque<Experience>,
    inserts: u64,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self {
            capacity,
            storage: VecDeque::with_capacity(capacity.min(1 << 16)),
            inserts: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.storage.len()
    }

    pub fn is_empty(&self) -> bool {
        self.storage.is_empty()
    }

    /// Total pushes ever, independent of evictions.
    pub fn insert_count(&self) -> u64 {
        self.inserts
    }

    /// Appends an experience, evicting the oldest one at capacity.
    pub fn push(&mut self, exp: Experience) {
        if self.storage.len() == self.capacity {
            self.storage.pop_front();
        }
        self.storage.push_back(exp);
        self.inserts += 1;
    }

    pub fn iter(&self) -> impl Iterator<Item = &Experience> {
        self.storage.iter()
    }

    pub fn get(&self, idx: usize) -> Option<&Experience> {
        self.storage.get(idx)
    }

    /// `n` independent uniform draws with replacement. Deterministic given
    /// the rng state; fails on an empty buffer (with replacement, any
    /// non-empty buffer can serve any batch size).
    pub fn sample_uniform<'a, R: Rng>(&'a self, n: usize, rng: &mut R) -> Result<Vec<&'a Experience>> {
        assert!(n >= 1, "sample size must be >= 1");
        if self.storage.is_empty() {
            return Err(Error::InsufficientData {
                len: 0,
                requested: n,
            });
        }
        Ok((0..n)
            .map(|_| &self.storage[rng.gen_range(0..self.storage.len())])
            .collect())
    }
}
