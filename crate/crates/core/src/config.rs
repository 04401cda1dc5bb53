//! Run configuration, read from JSON. Every field is optional; missing
//! fields take their defaults and unknown fields are rejected.
//!
//! ```json
//! {
//!   "generator": {"endpoint": "http://127.0.0.1:8000/v1/chat/completions", "model": "m", "timeout_secs": 60},
//!   "rewards": {"lambda1": 0.1, "lambda2": 0.9},
//!   "step_penalty": true,
//!   "grpo": {"n_tasks": 10, "train": {"iterations": 500, "learning_rate": 0.1}},
//!   "jobs": 4
//! }
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grpo::DemoConfig;
use crate::refine::HttpConfig;
use crate::rewards::RewardWeights;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("config: `{field}` {reason}")]
    Invalid { field: &'static str, reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub generator: HttpConfig,
    pub rewards: RewardWeights,
    pub step_penalty: bool,
    pub grpo: DemoConfig,
    pub jobs: usize,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            generator: HttpConfig::default(),
            rewards: RewardWeights::default(),
            step_penalty: true,
            grpo: DemoConfig::default(),
            jobs: 1,
        }
    }
}

fn invalid(field: &'static str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { field, reason: reason.into() }
}

impl Config {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let w = &self.rewards;
        for (field, v) in [("rewards.lambda1", w.lambda1), ("rewards.lambda2", w.lambda2)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(invalid(field, "must be a finite non-negative number"));
            }
        }
        if self.jobs == 0 {
            return Err(invalid("jobs", "must be at least 1"));
        }
        if self.generator.timeout_secs == 0 {
            return Err(invalid("generator.timeout_secs", "must be at least 1"));
        }
        if !(self.generator.temperature.is_finite() && self.generator.temperature >= 0.0) {
            return Err(invalid("generator.temperature", "must be a finite non-negative number"));
        }
        if self.generator.endpoint.is_empty() {
            return Err(invalid("generator.endpoint", "must not be empty"));
        }
        self.grpo.validate().map_err(|e| invalid("grpo", e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: Config = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Self::from_json(&text)
    }
}
