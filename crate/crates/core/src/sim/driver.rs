use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{derive_seed, mean_ci95};
use crate::aoi::AoiConfig;
use crate::error::{ConfigError, SimError};
use crate::event::EventConfig;
use crate::report::{Metric, MetricsReport};
use crate::task::TaskConfig;

/// Run-level settings shared by every scenario.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub seed: u64,
    /// Slots per run.
    pub horizon: u64,
    pub replications: u32,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            horizon: 10_000,
            replications: 1,
        }
    }
}

impl SimConfig {
    pub fn new(seed: u64, horizon: u64, replications: u32) -> Self {
        Self {
            seed,
            horizon,
            replications,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.horizon == 0 {
            return Err(ConfigError::invalid("sim.horizon", "must be at least 1 slot"));
        }
        if self.replications == 0 {
            return Err(ConfigError::invalid("sim.replications", "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioSpec {
    Aoi(AoiConfig),
    Event(EventConfig),
    Task(TaskConfig),
}

impl ScenarioSpec {
    pub fn id(&self) -> &'static str {
        match self {
            ScenarioSpec::Aoi(_) => "aoi",
            ScenarioSpec::Event(_) => "event",
            ScenarioSpec::Task(_) => "task",
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        match self {
            ScenarioSpec::Aoi(c) => c.validate(),
            ScenarioSpec::Event(c) => c.validate(),
            ScenarioSpec::Task(c) => c.validate(),
        }
    }

    fn run_seeded(&self, seed: u64, horizon: u64) -> Result<MetricsReport, SimError> {
        match self {
            ScenarioSpec::Aoi(c) => crate::aoi::run(c, seed, horizon),
            ScenarioSpec::Event(c) => crate::event::run(c, seed, horizon),
            ScenarioSpec::Task(c) => crate::task::run(c, seed, horizon),
        }
    }
}

/// One run with `config.seed`.
pub fn run(config: &SimConfig, scenario: &ScenarioSpec) -> Result<MetricsReport, SimError> {
    config.validate()?;
    scenario.validate()?;
    scenario.run_seeded(config.seed, config.horizon)
}

/// Per-metric mean and 95% CI over replications.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub scenario: String,
    pub master_seed: u64,
    pub replications: u32,
    pub summary: Vec<Metric>,
    pub per_run: Vec<MetricsReport>,
}

impl AggregateReport {
    pub fn get(&self, name: &str) -> Option<&Metric> {
        self.summary.iter().find(|m| m.name == name)
    }

    pub fn mean(&self, name: &str) -> f64 {
        match self.get(name) {
            Some(m) => m.value,
            None => panic!("aggregate for `{}` has no metric `{name}`", self.scenario),
        }
    }

    /// Samples of metric `name`, one per replication.
    pub fn samples(&self, name: &str) -> Vec<f64> {
        self.per_run.iter().map(|r| r.value(name)).collect()
    }

    /// Aggregates finished runs; all runs must report the same metrics.
    pub fn from_runs(scenario: &str, master_seed: u64, runs: Vec<MetricsReport>) -> Self {
        let mut summary = Vec::new();
        if let Some(first) = runs.first() {
            for m in &first.metrics {
                let samples: Vec<f64> = runs.iter().map(|r| r.value(&m.name)).collect();
                let censored = runs.iter().any(|r| r.get(&m.name).is_some_and(|x| x.censored));
                summary.push(Metric::with_ci(&m.name, mean_ci95(&samples), m.unit, censored));
            }
        }
        Self {
            scenario: scenario.to_string(),
            master_seed,
            replications: runs.len() as u32,
            summary,
            per_run: runs,
        }
    }
}

/// `config.replications` independent runs; run `i` uses
/// `derive_seed(config.seed, i)`. Runs execute in parallel and are
/// aggregated in index order, so the result does not depend on scheduling.
pub fn replicate(config: &SimConfig, scenario: &ScenarioSpec) -> Result<AggregateReport, SimError> {
    config.validate()?;
    scenario.validate()?;
    let runs = (0..config.replications as u64)
        .into_par_iter()
        .map(|i| scenario.run_seeded(derive_seed(config.seed, i), config.horizon))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(AggregateReport::from_runs(scenario.id(), config.seed, runs))
}
