//! Stochastic variational information maximisation.
//!
//! A decoder `q(a | s, s')` is fit by maximum likelihood on experienced
//! `(s, a, s')` triples. A normalized source `h(a | s)` and a scalar `ψ(s)`
//! are fit so that `log h(a | s) + ψ(s) ≈ β log q(a | s, s')`; `ψ(s) / β`
//! then estimates the empowerment of `s`. All three read the same learned
//! representation of the rendered observation.

mod loss;
mod model;
mod reference;
mod train;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gridworld::{render, rollout, ActionSequence, EnvState, GridSpec, Observation};

pub use loss::{decoder_loss, empowerment_estimate, energy, source_loss};
pub use model::{ModelGrads, SvimModel};
pub use reference::{exact_variational_reference, VariationalReference};
pub use train::{svim_train, svim_train_with, LogRecord, ReplayBuffer, RunLog};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvimConfig {
    /// Inverse temperature.
    pub beta: f64,
    pub horizon: usize,
    pub batch_size: usize,
    pub decoder_lr: f64,
    pub source_lr: f64,
    pub buffer_capacity: usize,
    /// Probability of replacing a source draw by a uniform sequence.
    pub exploration_mix: f64,
    pub total_steps: usize,
    pub seed: u64,
    /// Width of the hidden layer in the per-step and ψ networks.
    pub hidden: usize,
    /// Width of the state representation.
    pub features: usize,
    pub log_every: usize,
    /// Standardize pixels over the enumerated states before training.
    pub normalize_inputs: bool,
}

impl Default for SvimConfig {
    fn default() -> Self {
        Self {
            beta: 1.0,
            horizon: 3,
            batch_size: 64,
            decoder_lr: 0.05,
            source_lr: 0.02,
            buffer_capacity: 10_000,
            exploration_mix: 0.2,
            total_steps: 20_000,
            seed: 0,
            hidden: 100,
            features: 100,
            log_every: 100,
            normalize_inputs: true,
        }
    }
}

impl SvimConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.to_string()));
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return bad("beta must be positive");
        }
        if !(0.0..=1.0).contains(&self.exploration_mix) {
            return bad("exploration_mix must lie in [0, 1]");
        }
        if !(self.decoder_lr > 0.0 && self.source_lr > 0.0) {
            return bad("learning rates must be positive");
        }
        if self.batch_size == 0
            || self.buffer_capacity == 0
            || self.hidden == 0
            || self.features == 0
            || self.log_every == 0
        {
            return bad("batch_size, buffer_capacity, hidden, features and log_every must be positive");
        }
        if self.horizon == 0 {
            return bad("horizon must be positive");
        }
        Ok(())
    }
}

/// One `(s, a, s')` triple.
#[derive(Debug, Clone, PartialEq)]
pub struct Experience {
    pub obs: Arc<Observation>,
    pub seq: ActionSequence,
    pub next_obs: Arc<Observation>,
}

impl Experience {
    /// Renders `s` and the outcome of `seq` from it.
    pub fn from_rollout(spec: &GridSpec, s: &EnvState, seq: ActionSequence) -> Result<Self> {
        let next = rollout(spec, s, &seq)?;
        Ok(Self {
            obs: Arc::new(render(spec, s)?),
            seq,
            next_obs: Arc::new(render(spec, &next)?),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperienceBatch {
    items: Vec<Experience>,
}

impl ExperienceBatch {
    pub fn new(items: Vec<Experience>) -> Result<Self> {
        let Some(first) = items.first() else {
            return Err(Error::EmptyBatch);
        };
        let k = first.seq.len();
        if let Some(bad) = items.iter().find(|e| e.seq.len() != k) {
            return Err(Error::SequenceLength {
                expected: k,
                got: bad.seq.len(),
            });
        }
        Ok(Self { items })
    }

    pub fn items(&self) -> &[Experience] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}
