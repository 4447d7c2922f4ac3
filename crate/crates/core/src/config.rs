//! Scenario files.
//!
//! A scenario file is TOML with a `[sim]` table and at most one table per
//! scenario (`[aoi]`, `[event]`, `[task]`); nested tables such as
//! `[event.energy]` configure sub-models. Missing keys take their defaults,
//! unknown keys are rejected.
//!
//! ```toml
//! [sim]
//! seed = 7            # master seed; CONTEXTSIM_SEED overrides it
//! horizon = 10000     # slots (1 ms each)
//! replications = 20
//!
//! [aoi]
//! policy = "autonomous"   # optimal | autonomous | threshold
//! p = 0.4
//! N = 32
//! F = 2
//! epsilon = 0.5
//!
//! [event]
//! density = 150
//! policy = "context"      # blind | context
//! qlearn = "off"
//!
//! [event.energy]
//! harvest_rate = 0.02
//!
//! [task]
//! N = 4
//! q = 0.05
//! train_episodes = 800
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::aoi::AoiConfig;
use crate::error::ConfigError;
use crate::event::EventConfig;
use crate::sim::{ScenarioSpec, SimConfig};
use crate::task::TaskConfig;

/// Environment variable that replaces `sim.seed`.
pub const SEED_ENV: &str = "CONTEXTSIM_SEED";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioFile {
    pub sim: SimConfig,
    pub aoi: Option<AoiConfig>,
    pub event: Option<EventConfig>,
    pub task: Option<TaskConfig>,
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let file: ScenarioFile = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        file.validate()?;
        Ok(file)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Parse(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.sim.validate()?;
        for spec in self.scenarios() {
            spec.validate()?;
        }
        Ok(())
    }

    /// Configured scenarios in file order: aoi, event, task.
    pub fn scenarios(&self) -> Vec<ScenarioSpec> {
        let mut out = Vec::new();
        if let Some(c) = &self.aoi {
            out.push(ScenarioSpec::Aoi(c.clone()));
        }
        if let Some(c) = &self.event {
            out.push(ScenarioSpec::Event(c.clone()));
        }
        if let Some(c) = &self.task {
            out.push(ScenarioSpec::Task(c.clone()));
        }
        out
    }

    /// Applies `CONTEXTSIM_SEED` if it is set.
    pub fn apply_env(&mut self) -> Result<(), ConfigError> {
        if let Some(seed) = env_seed()? {
            self.sim.seed = seed;
        }
        Ok(())
    }
}

/// The seed in `CONTEXTSIM_SEED`, if set.
pub fn env_seed() -> Result<Option<u64>, ConfigError> {
    match std::env::var(SEED_ENV) {
        Ok(v) => parse_seed(&v).map(Some),
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(ConfigError::invalid("CONTEXTSIM_SEED", e.to_string())),
    }
}

/// Decimal or `0x`-prefixed hexadecimal.
pub fn parse_seed(text: &str) -> Result<u64, ConfigError> {
    let t = text.trim();
    let parsed = match t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => t.parse(),
    };
    parsed.map_err(|e| ConfigError::invalid("seed", format!("`{text}`: {e}")))
}
