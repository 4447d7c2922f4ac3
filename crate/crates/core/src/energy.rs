//! Per-device energy storage.
//!
//! Levels are kept in integer micro-units of the normalized capacity
//! (1 unit = 1e-6 of a full store), so per-slot bookkeeping is exact and a
//! level can never go negative: an activity the store cannot pay for is
//! refused and leaves the level untouched.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_probability, ConfigError};

pub const UNITS_PER_CAPACITY: u64 = 1_000_000;

/// Amount of energy in micro-units of the normalized capacity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct Energy(pub u64);

impl Energy {
    pub const ZERO: Energy = Energy(0);
    pub const FULL: Energy = Energy(UNITS_PER_CAPACITY);

    /// Rounds a fraction of capacity to the nearest micro-unit.
    pub fn from_fraction(fraction: f64) -> Energy {
        Energy((fraction.max(0.0) * UNITS_PER_CAPACITY as f64).round() as u64)
    }

    pub fn as_fraction(self) -> f64 {
        self.0 as f64 / UNITS_PER_CAPACITY as f64
    }
}

impl std::ops::Add for Energy {
    type Output = Energy;
    fn add(self, rhs: Energy) -> Energy {
        Energy(self.0 + rhs.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Activity {
    Sense,
    Communicate,
    WurListen,
    TaskTx,
}

/// Costs per transmission interval, as fractions of capacity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConsumptionProfile {
    pub sense_compute: f64,
    pub communicate: f64,
    pub wur_listen: f64,
    pub e0_per_tx: f64,
}

impl Default for ConsumptionProfile {
    fn default() -> Self {
        Self {
            sense_compute: 0.01,
            communicate: 0.10,
            wur_listen: 0.0007,
            e0_per_tx: 0.10,
        }
    }
}

impl ConsumptionProfile {
    /// All activities free.
    pub fn zero() -> Self {
        Self {
            sense_compute: 0.0,
            communicate: 0.0,
            wur_listen: 0.0,
            e0_per_tx: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        for (field, v) in [
            ("energy.sense_compute", self.sense_compute),
            ("energy.communicate", self.communicate),
            ("energy.wur_listen", self.wur_listen),
            ("energy.e0_per_tx", self.e0_per_tx),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(ConfigError::invalid(field, format!("cost {v} must be finite and >= 0")));
            }
        }
        Ok(())
    }

    pub fn cost(&self, activity: Activity) -> Energy {
        Energy::from_fraction(match activity {
            Activity::Sense => self.sense_compute,
            Activity::Communicate => self.communicate,
            Activity::WurListen => self.wur_listen,
            Activity::TaskTx => self.e0_per_tx,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HarvestKind {
    None,
    Bernoulli,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarvestModel {
    pub kind: HarvestKind,
    /// Arrival probability per slot.
    pub rate: f64,
    /// Energy per arrival, fraction of capacity.
    pub quantum: f64,
}

impl Default for HarvestModel {
    fn default() -> Self {
        Self {
            kind: HarvestKind::Bernoulli,
            rate: 0.02,
            quantum: 0.01,
        }
    }
}

impl HarvestModel {
    pub fn none() -> Self {
        Self {
            kind: HarvestKind::None,
            rate: 0.0,
            quantum: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        check_probability("energy.harvest_rate", self.rate)?;
        if !(self.quantum.is_finite() && self.quantum >= 0.0) {
            return Err(ConfigError::invalid("energy.harvest_quantum", "must be finite and >= 0"));
        }
        Ok(())
    }
}

/// The `[energy]` configuration block: per-activity costs and harvesting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnergyConfig {
    pub sense_compute: f64,
    pub communicate: f64,
    pub wur_listen: f64,
    pub e0_per_tx: f64,
    pub harvest: HarvestKind,
    pub harvest_rate: f64,
    pub harvest_quantum: f64,
}

impl Default for EnergyConfig {
    fn default() -> Self {
        let costs = ConsumptionProfile::default();
        let harvest = HarvestModel::default();
        Self {
            sense_compute: costs.sense_compute,
            communicate: costs.communicate,
            wur_listen: costs.wur_listen,
            e0_per_tx: costs.e0_per_tx,
            harvest: harvest.kind,
            harvest_rate: harvest.rate,
            harvest_quantum: harvest.quantum,
        }
    }
}

impl EnergyConfig {
    /// No costs and no harvesting.
    pub fn free() -> Self {
        Self {
            harvest: HarvestKind::None,
            harvest_rate: 0.0,
            harvest_quantum: 0.0,
            ..Self::from_profile(&ConsumptionProfile::zero())
        }
    }

    fn from_profile(p: &ConsumptionProfile) -> Self {
        Self {
            sense_compute: p.sense_compute,
            communicate: p.communicate,
            wur_listen: p.wur_listen,
            e0_per_tx: p.e0_per_tx,
            ..Self::default()
        }
    }

    pub fn profile(&self) -> ConsumptionProfile {
        ConsumptionProfile {
            sense_compute: self.sense_compute,
            communicate: self.communicate,
            wur_listen: self.wur_listen,
            e0_per_tx: self.e0_per_tx,
        }
    }

    pub fn harvest_model(&self) -> HarvestModel {
        HarvestModel {
            kind: self.harvest,
            rate: self.harvest_rate,
            quantum: self.harvest_quantum,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.profile().validate()?;
        self.harvest_model().validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[must_use]
pub enum ConsumeOutcome {
    Consumed,
    Refused,
}

/// Energy store with capacity 1.0 (`Energy::FULL`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnergyState {
    level: Energy,
}

impl Default for EnergyState {
    fn default() -> Self {
        Self::full()
    }
}

impl EnergyState {
    pub fn full() -> Self {
        Self { level: Energy::FULL }
    }

    pub fn with_level(level: Energy) -> Self {
        Self {
            level: level.min(Energy::FULL),
        }
    }

    pub fn from_fraction(level: f64) -> Self {
        Self::with_level(Energy::from_fraction(level))
    }

    pub fn level(&self) -> Energy {
        self.level
    }

    pub fn fraction(&self) -> f64 {
        self.level.as_fraction()
    }

    /// Pays for `activity` if the store holds enough.
    pub fn consume(&mut self, activity: Activity, profile: &ConsumptionProfile) -> ConsumeOutcome {
        self.spend(profile.cost(activity))
    }

    pub fn spend(&mut self, cost: Energy) -> ConsumeOutcome {
        if self.level >= cost {
            self.level = Energy(self.level.0 - cost.0);
            ConsumeOutcome::Consumed
        } else {
            ConsumeOutcome::Refused
        }
    }

    /// Whether the store can pay `cost` right now.
    pub fn can_afford(&self, cost: Energy) -> bool {
        self.level >= cost
    }

    /// Below the wake-up receiver's listening cost: unusable for anything.
    pub fn is_depleted(&self, profile: &ConsumptionProfile) -> bool {
        self.level < profile.cost(Activity::WurListen)
    }

    /// One harvesting opportunity. Returns the energy actually stored.
    pub fn harvest<R: Rng + ?Sized>(&mut self, model: &HarvestModel, rng: &mut R) -> Energy {
        match model.kind {
            HarvestKind::None => Energy::ZERO,
            HarvestKind::Bernoulli => {
                let arrived = rng.random::<f64>() < model.rate;
                if arrived {
                    self.store(Energy::from_fraction(model.quantum))
                } else {
                    Energy::ZERO
                }
            }
        }
    }

    /// Adds `amount`, saturating at capacity. Returns the energy stored.
    pub fn store(&mut self, amount: Energy) -> Energy {
        let stored = amount.min(Energy(Energy::FULL.0 - self.level.0));
        self.level = self.level + stored;
        stored
    }
}
