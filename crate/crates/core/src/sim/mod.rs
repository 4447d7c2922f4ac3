//! Slotted simulation engine: time base, phase ordering, seeded RNG streams,
//! and the run / replicate drivers.
//!
//! One slot is one millisecond everywhere. Every scenario advances through the
//! same per-slot phase order (harvest, sense/generate, schedule,
//! transmit/resolve, metric update); [`SlotClock`] enforces it.

mod driver;
mod stats;

pub use driver::{replicate, run, AggregateReport, ScenarioSpec, SimConfig};
pub use stats::{mean_ci95, MeanCi};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Milliseconds per slot.
pub const SLOT_MS: f64 = 1.0;

/// Generator used for every random stream in the crate.
pub type SimRng = ChaCha8Rng;

/// Index of a slot within a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct SlotIndex(pub u64);

impl SlotIndex {
    pub fn get(self) -> u64 {
        self.0
    }

    pub fn as_ms(self) -> f64 {
        self.0 as f64 * SLOT_MS
    }
}

/// Phases of one slot, in the only order they may run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Phase {
    Harvest = 0,
    Sense = 1,
    Schedule = 2,
    Transmit = 3,
    Metrics = 4,
}

/// Slot counter with a phase tag.
///
/// `enter` panics if a phase is entered out of order, and `finish_slot`
/// panics unless the metric phase ran. Skipping a phase is allowed
/// (a scenario without energy harvesting never enters `Harvest`).
#[derive(Debug, Clone)]
pub struct SlotClock {
    now: SlotIndex,
    phase: Option<Phase>,
}

impl Default for SlotClock {
    fn default() -> Self {
        Self::new()
    }
}

impl SlotClock {
    pub fn new() -> Self {
        Self {
            now: SlotIndex(0),
            phase: None,
        }
    }

    pub fn now(&self) -> SlotIndex {
        self.now
    }

    pub fn phase(&self) -> Option<Phase> {
        self.phase
    }

    pub fn enter(&mut self, phase: Phase) {
        if let Some(current) = self.phase {
            assert!(
                phase > current,
                "slot {}: phase {:?} entered after {:?}",
                self.now.0,
                phase,
                current
            );
        }
        self.phase = Some(phase);
    }

    pub fn finish_slot(&mut self) {
        assert_eq!(
            self.phase,
            Some(Phase::Metrics),
            "slot {} finished before its metric update",
            self.now.0
        );
        self.phase = None;
        self.now = SlotIndex(self.now.0 + 1);
    }
}

/// Independent random streams of one run.
///
/// Each subsystem draws from its own ChaCha stream keyed by the run seed, so
/// adding draws in one subsystem leaves every other subsystem's draws intact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stream {
    Channel = 1,
    Generation = 2,
    Policy = 3,
    Harvest = 4,
    Events = 5,
    Placement = 6,
    Process = 7,
    Queries = 8,
    Training = 9,
    Phases = 10,
    Observation = 11,
    Tuning = 12,
}

/// Opens `stream` of the run seeded with `seed`.
pub fn stream_rng(seed: u64, stream: Stream) -> SimRng {
    let mut rng = SimRng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

/// SplitMix64 finalizer. A bijection on `u64`.
pub fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// Seed of replication `index` under `master`.
///
/// This is the `index + 1`-th output of a SplitMix64 generator started at
/// `master`. Distinct indices (modulo 2^64) give distinct seeds since the
/// finalizer is a bijection.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(master.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}
