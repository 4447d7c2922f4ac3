//! On-off erasure channel with all-or-nothing collisions over `F` orthogonal
//! channels.
//!
//! A device is connected to the edge node with probability `1 - epsilon` in a
//! slot. Erased transmissions never collide with anything; two or more
//! connected transmissions on one channel destroy each other.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_probability, ConfigError, SimError};
use crate::sim::SlotIndex;

pub type DeviceId = usize;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelConfig {
    /// Number of orthogonal channels, `F`.
    #[serde(rename = "F", alias = "num_channels")]
    pub num_channels: usize,
    /// Per-slot erasure probability, `epsilon`.
    #[serde(rename = "epsilon", alias = "erasure_prob")]
    pub erasure_prob: f64,
    /// Draw erasures independently per (device, channel) instead of per device.
    #[serde(default)]
    pub per_channel_erasure: bool,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            num_channels: 1,
            erasure_prob: 0.0,
            per_channel_erasure: false,
        }
    }
}

impl ChannelConfig {
    pub fn new(num_channels: usize, erasure_prob: f64) -> Self {
        Self {
            num_channels,
            erasure_prob,
            per_channel_erasure: false,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.num_channels == 0 {
            return Err(ConfigError::invalid("channel.F", "need at least one channel"));
        }
        check_probability("channel.epsilon", self.erasure_prob)
    }
}

/// Connectivity of every device for one slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Connectivity {
    links: Vec<bool>,
    /// 1 when the draw is per device, `F` when it is per (device, channel).
    stride: usize,
}

impl Connectivity {
    /// One connectivity flag per device, shared by all channels.
    pub fn per_device(flags: Vec<bool>) -> Self {
        Self {
            links: flags,
            stride: 1,
        }
    }

    pub fn all_connected(devices: usize) -> Self {
        Self::per_device(vec![true; devices])
    }

    pub fn num_devices(&self) -> usize {
        self.links.len() / self.stride
    }

    pub fn is_connected(&self, device: DeviceId, channel: usize) -> bool {
        if self.stride == 1 {
            self.links[device]
        } else {
            self.links[device * self.stride + channel]
        }
    }

    /// Device reachable on at least one channel.
    pub fn device_connected(&self, device: DeviceId) -> bool {
        let base = device * self.stride;
        self.links[base..base + self.stride].iter().any(|&c| c)
    }

    pub fn set_device(&mut self, device: DeviceId, connected: bool) {
        let base = device * self.stride;
        self.links[base..base + self.stride].fill(connected);
    }
}

/// Draws this slot's connectivity for `devices` devices.
pub fn sample_connectivity<R: Rng + ?Sized>(
    config: &ChannelConfig,
    rng: &mut R,
    devices: usize,
) -> Connectivity {
    let mut conn = Connectivity::all_connected(devices);
    sample_connectivity_into(config, rng, devices, &mut conn);
    conn
}

/// Allocation-free form of [`sample_connectivity`].
pub fn sample_connectivity_into<R: Rng + ?Sized>(
    config: &ChannelConfig,
    rng: &mut R,
    devices: usize,
    out: &mut Connectivity,
) {
    let stride = if config.per_channel_erasure {
        config.num_channels
    } else {
        1
    };
    out.stride = stride;
    out.links.clear();
    let eps = config.erasure_prob;
    for _ in 0..devices * stride {
        // One draw per link for every epsilon keeps coupled runs aligned.
        let u: f64 = rng.random();
        out.links.push(u >= eps);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TxAttempt {
    pub device: DeviceId,
    pub channel: usize,
    pub payload_gen_slot: SlotIndex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SlotOutcome {
    Delivered,
    Erased,
    Collided,
}

/// Resolves one slot; `outcomes[i]` belongs to `attempts[i]`.
pub fn resolve_slot(
    attempts: &[TxAttempt],
    connectivity: &Connectivity,
    num_channels: usize,
) -> Result<Vec<SlotOutcome>, SimError> {
    let mut outcomes = Vec::with_capacity(attempts.len());
    let mut scratch = Vec::new();
    resolve_slot_into(attempts, connectivity, num_channels, &mut outcomes, &mut scratch)?;
    Ok(outcomes)
}

/// Allocation-free form of [`resolve_slot`]; `scratch` is reused per call.
pub fn resolve_slot_into(
    attempts: &[TxAttempt],
    connectivity: &Connectivity,
    num_channels: usize,
    outcomes: &mut Vec<SlotOutcome>,
    scratch: &mut Vec<u32>,
) -> Result<(), SimError> {
    outcomes.clear();
    scratch.clear();
    scratch.resize(num_channels, 0);
    for (i, a) in attempts.iter().enumerate() {
        if a.channel >= num_channels {
            return Err(SimError::Logic(format!(
                "device {} attempted channel {} of {}",
                a.device, a.channel, num_channels
            )));
        }
        if attempts[..i].iter().any(|b| b.device == a.device) {
            return Err(SimError::Logic(format!(
                "device {} transmitted twice in one slot",
                a.device
            )));
        }
        if connectivity.is_connected(a.device, a.channel) {
            scratch[a.channel] += 1;
        }
    }
    for a in attempts {
        let outcome = if !connectivity.is_connected(a.device, a.channel) {
            SlotOutcome::Erased
        } else if scratch[a.channel] == 1 {
            SlotOutcome::Delivered
        } else {
            SlotOutcome::Collided
        };
        outcomes.push(outcome);
    }
    Ok(())
}
