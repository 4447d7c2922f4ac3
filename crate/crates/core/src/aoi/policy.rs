use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{Connectivity, DeviceId, TxAttempt};
use crate::sim::SlotIndex;

/// Centralized ranking: the `F` connected devices with the highest AoI each
/// get a channel and generate a fresh packet on request. Ties go to the
/// lowest device id.
pub fn schedule_optimal(aoi: &[u64], connectivity: &Connectivity, num_channels: usize, now: SlotIndex) -> Vec<TxAttempt> {
    let mut out = Vec::new();
    let mut order = Vec::new();
    schedule_optimal_into(aoi, connectivity, num_channels, now, &mut order, &mut out);
    out
}

pub(crate) fn schedule_optimal_into(
    aoi: &[u64],
    connectivity: &Connectivity,
    num_channels: usize,
    now: SlotIndex,
    order: &mut Vec<DeviceId>,
    out: &mut Vec<TxAttempt>,
) {
    out.clear();
    order.clear();
    order.extend((0..aoi.len()).filter(|&d| connectivity.device_connected(d)));
    order.sort_unstable_by(|&a, &b| aoi[b].cmp(&aoi[a]).then(a.cmp(&b)));
    let mut taken = 0u64;
    for &device in order.iter() {
        if out.len() == num_channels {
            break;
        }
        // Lowest free channel this device can reach.
        let free = (0..num_channels).find(|&ch| taken & (1 << ch) == 0 && connectivity.is_connected(device, ch));
        if let Some(channel) = free {
            taken |= 1 << channel;
            out.push(TxAttempt {
                device,
                channel,
                payload_gen_slot: now,
            });
        }
    }
}

/// When a device transmits under the threshold policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdMode {
    /// A packet is sent only in the slot it is generated in, if the device's
    /// AoI exceeds the threshold; otherwise it is dropped.
    #[default]
    OnGeneration,
    /// A buffered packet is sent in every slot the AoI exceeds the threshold,
    /// until it is delivered or replaced.
    Persistent,
}

/// Age threshold; `Threshold::NEVER` disables transmission entirely.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Threshold(pub u64);

impl Threshold {
    pub const NEVER: Threshold = Threshold(u64::MAX);

    pub fn admits(self, aoi: u64) -> bool {
        self != Self::NEVER && aoi > self.0
    }
}

impl Serialize for Threshold {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if *self == Self::NEVER {
            s.serialize_str("inf")
        } else {
            s.serialize_u64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for Threshold {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(u64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(n) => Ok(Threshold(n)),
            Raw::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

impl std::str::FromStr for Threshold {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "inf" | "never" => Ok(Threshold::NEVER),
            t => t.parse().map(Threshold).map_err(|e| format!("bad threshold `{s}`: {e}")),
        }
    }
}

/// Every device whose packet qualifies and whose AoI exceeds the threshold
/// transmits on a uniformly random channel, without sensing.
#[allow(clippy::too_many_arguments)]
pub fn schedule_threshold<R: Rng + ?Sized>(
    aoi: &[u64],
    buffer: &[Option<SlotIndex>],
    now: SlotIndex,
    threshold: Threshold,
    mode: ThresholdMode,
    num_channels: usize,
    rng: &mut R,
) -> Vec<TxAttempt> {
    let mut out = Vec::new();
    schedule_threshold_into(aoi, buffer, now, threshold, mode, num_channels, rng, &mut out);
    out
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn schedule_threshold_into<R: Rng + ?Sized>(
    aoi: &[u64],
    buffer: &[Option<SlotIndex>],
    now: SlotIndex,
    threshold: Threshold,
    mode: ThresholdMode,
    num_channels: usize,
    rng: &mut R,
    out: &mut Vec<TxAttempt>,
) {
    out.clear();
    for (device, (&age, packet)) in aoi.iter().zip(buffer).enumerate() {
        let Some(gen) = *packet else { continue };
        let eligible = match mode {
            ThresholdMode::OnGeneration => gen == now,
            ThresholdMode::Persistent => true,
        };
        if eligible && threshold.admits(age) {
            out.push(TxAttempt {
                device,
                channel: rng.random_range(0..num_channels),
                payload_gen_slot: gen,
            });
        }
    }
}

/// Mini-slot contention parameters of the autonomous policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AutonomousParams {
    /// Mini-slots per slot, `M`.
    pub minislots: u32,
    /// Jitter window, `J`: a uniform extra delay in `0..J` mini-slots.
    pub jitter: u32,
    /// Wait scale `C` in `wait = floor(C / aoi)`.
    pub wait_scale: u64,
}

impl AutonomousParams {
    /// `C = M - 1`, so a device with AoI 1 waits the full slot.
    pub fn new(minislots: u32, jitter: u32) -> Self {
        Self {
            minislots,
            jitter,
            wait_scale: minislots.saturating_sub(1) as u64,
        }
    }

    /// Backoff before jitter, in mini-slots; inversely proportional to AoI.
    pub fn wait(&self, aoi: u64) -> u32 {
        let w = self.wait_scale / aoi.max(1);
        w.min(self.minislots.saturating_sub(1) as u64) as u32
    }
}

/// A planned RTS: `device` will send it on `channel` at mini-slot `instant`
/// unless the channel is already taken by then.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RtsIntent {
    pub device: DeviceId,
    pub channel: usize,
    pub instant: u32,
    pub payload_gen_slot: SlotIndex,
}

/// Each device holding a packet draws a channel and a jitter and plans its
/// RTS at `wait(aoi) + jitter`.
pub fn schedule_autonomous<R: Rng + ?Sized>(
    aoi: &[u64],
    buffer: &[Option<SlotIndex>],
    params: &AutonomousParams,
    num_channels: usize,
    rng: &mut R,
) -> Vec<RtsIntent> {
    let mut out = Vec::new();
    schedule_autonomous_into(aoi, buffer, params, num_channels, rng, &mut out);
    out
}

pub(crate) fn schedule_autonomous_into<R: Rng + ?Sized>(
    aoi: &[u64],
    buffer: &[Option<SlotIndex>],
    params: &AutonomousParams,
    num_channels: usize,
    rng: &mut R,
    out: &mut Vec<RtsIntent>,
) {
    out.clear();
    for (device, (&age, packet)) in aoi.iter().zip(buffer).enumerate() {
        let Some(gen) = *packet else { continue };
        let channel = rng.random_range(0..num_channels);
        let jitter = if params.jitter > 1 {
            rng.random_range(0..params.jitter)
        } else {
            0
        };
        out.push(RtsIntent {
            device,
            channel,
            instant: params.wait(age) + jitter,
            payload_gen_slot: gen,
        });
    }
}

/// Plays out the RTS contention of one slot.
///
/// On each channel, the earliest RTS that reaches the edge node claims it and
/// every later contender senses the channel busy and stays silent. An RTS from
/// an erased device is not answered and leaves the channel idle. Connected
/// devices sending RTS at the same instant all transmit and collide.
///
/// Fills `attempts` with the data transmissions and returns the number of RTS
/// frames actually sent.
pub fn contend(intents: &[RtsIntent], connectivity: &Connectivity, num_channels: usize, attempts: &mut Vec<TxAttempt>) -> u64 {
    attempts.clear();
    let mut rts_sent = 0;
    for channel in 0..num_channels {
        let winning = intents
            .iter()
            .filter(|i| i.channel == channel && connectivity.is_connected(i.device, channel))
            .map(|i| i.instant)
            .min();
        for i in intents.iter().filter(|i| i.channel == channel) {
            match winning {
                Some(w) if i.instant > w => {}
                _ => rts_sent += 1,
            }
            if Some(i.instant) == winning && connectivity.is_connected(i.device, channel) {
                attempts.push(TxAttempt {
                    device: i.device,
                    channel,
                    payload_gen_slot: i.payload_gen_slot,
                });
            }
        }
    }
    // Keep attempts in device order, matching the other policies.
    attempts.sort_unstable_by_key(|a| a.device);
    rts_sent
}
