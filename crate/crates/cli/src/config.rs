use std::path::PathBuf;

use empowerment::gridworld::{Cell, EnvConfig, EnvState, GridSpec};
use empowerment::particles::ISConfig;
use empowerment::svim::SvimConfig;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const DEFAULT_HORIZON: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Solver {
    Pathcount,
    Ba,
    Svim,
    Particles,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaBlock {
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
}

fn default_tol() -> f64 {
    empowerment::channel::DEFAULT_TOL
}

fn default_max_iter() -> usize {
    empowerment::channel::DEFAULT_MAX_ITER
}

impl Default for BaBlock {
    fn default() -> Self {
        Self {
            tol: default_tol(),
            max_iter: default_max_iter(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentBlock {
    #[serde(default = "default_steps")]
    pub steps: usize,
    /// Also write the rendered observation of every visited state.
    #[serde(default)]
    pub frames: bool,
}

fn default_steps() -> usize {
    30
}

impl Default for AgentBlock {
    fn default() -> Self {
        Self {
            steps: default_steps(),
            frames: false,
        }
    }
}

/// One experiment file. Example:
///
/// ```toml
/// solver = "pathcount"
/// seed = 0
/// horizon = 3
///
/// [environment]
/// variant = "two_rooms"
/// width = 9
/// height = 9
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub solver: Solver,
    #[serde(default)]
    pub seed: u64,
    /// Horizon for the exact solvers and the particle estimator. The
    /// variational solver takes its horizon from `[svim]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    /// Start cell for `capacity` and `agent`; the layout's start if unset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<Cell>,
    /// Whether the agent starts holding the key (key-door only).
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub start_with_key: bool,
    /// Channel CSV to use instead of the environment for `capacity`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channel: Option<PathBuf>,
    /// Trained model for the variational solver outside `train`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot: Option<PathBuf>,
    pub environment: EnvConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ba: Option<BaBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub svim: Option<SvimConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub particles: Option<ISConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub agent: Option<AgentBlock>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        match self.solver {
            Solver::Svim => {
                let svim = self
                    .svim
                    .as_ref()
                    .ok_or_else(|| CliError::Config("solver \"svim\" needs an [svim] table".into()))?;
                svim.validate()?;
                if let Some(k) = self.horizon {
                    if k != svim.horizon {
                        return Err(CliError::Config(format!(
                            "horizon = {k} disagrees with svim.horizon = {}",
                            svim.horizon
                        )));
                    }
                }
            }
            Solver::Particles => {
                self.particles
                    .as_ref()
                    .ok_or_else(|| CliError::Config("solver \"particles\" needs a [particles] table".into()))?
                    .validate()?;
            }
            Solver::Pathcount | Solver::Ba => {}
        }
        Ok(())
    }

    /// Applies the command-line seed and copies the seed into the solver
    /// blocks, which then never disagree with the top level.
    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        if let Some(s) = seed {
            self.seed = s;
        }
        if let Some(svim) = &mut self.svim {
            svim.seed = self.seed;
        }
        if let Some(p) = &mut self.particles {
            p.seed = self.seed;
        }
        self
    }

    pub fn horizon(&self) -> usize {
        match (&self.svim, self.solver) {
            (Some(s), Solver::Svim) => s.horizon,
            _ => self.horizon.unwrap_or(DEFAULT_HORIZON),
        }
    }

    pub fn build_env(&self) -> Result<GridSpec, CliError> {
        Ok(self.environment.build()?)
    }

    pub fn start_state(&self, spec: &GridSpec) -> Result<EnvState, CliError> {
        let mut s = match self.start {
            Some(c) => spec.state_at(c),
            None => spec.initial_state(),
        };
        if self.start_with_key {
            s.has_key = true;
        }
        spec.validate_state(&s)?;
        Ok(s)
    }
}
