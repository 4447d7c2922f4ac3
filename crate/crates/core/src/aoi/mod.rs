//! Age-of-information scheduling over the erasure channel.
//!
//! Each device's AoI counts slots since the newest delivered update was
//! generated. Devices start with AoI 1 and an empty single-packet buffer
//! (a new packet replaces the buffered one). Three policies decide who
//! transmits: centralized [`PolicyKind::Optimal`] ranking, mini-slot
//! [`PolicyKind::Autonomous`] RTS contention, and the sensing-free
//! [`PolicyKind::Threshold`] rule.

mod chain;
mod policy;
mod tune;

pub use chain::{renewal_aaoi, renewal_paoi, ChainOracle};
pub use policy::{
    contend, schedule_autonomous, schedule_optimal, schedule_threshold, AutonomousParams, RtsIntent, Threshold,
    ThresholdMode,
};
pub use tune::{tune_threshold, TuneResult};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{resolve_slot_into, sample_connectivity_into, ChannelConfig, Connectivity, SlotOutcome, TxAttempt};
use crate::error::{check_probability, ConfigError, MetricError, SimError};
use crate::protocol::{FrameKind, FrameTrace};
use crate::report::{Metric, MetricsReport, Unit};
use crate::sim::{stream_rng, Phase, SimRng, SlotClock, SlotIndex, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyKind {
    #[default]
    Optimal,
    Autonomous,
    Threshold,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 3] = [PolicyKind::Optimal, PolicyKind::Autonomous, PolicyKind::Threshold];

    pub fn as_str(self) -> &'static str {
        match self {
            PolicyKind::Optimal => "optimal",
            PolicyKind::Autonomous => "autonomous",
            PolicyKind::Threshold => "threshold",
        }
    }
}

impl std::str::FromStr for PolicyKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "optimal" => Ok(PolicyKind::Optimal),
            "autonomous" => Ok(PolicyKind::Autonomous),
            "threshold" => Ok(PolicyKind::Threshold),
            _ => Err(format!("unknown policy `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AoiConfig {
    pub policy: PolicyKind,
    /// Per-slot packet generation probability.
    pub p: f64,
    #[serde(rename = "N")]
    pub num_devices: usize,
    #[serde(rename = "F")]
    pub num_channels: usize,
    pub epsilon: f64,
    pub per_channel_erasure: bool,
    pub threshold: Threshold,
    pub threshold_mode: ThresholdMode,
    /// Mini-slots per slot for autonomous contention.
    #[serde(rename = "M")]
    pub minislots: u32,
    /// Jitter window for autonomous contention.
    #[serde(rename = "J")]
    pub jitter: u32,
    /// Wait scale; `M - 1` when absent.
    #[serde(rename = "C")]
    pub wait_scale: Option<u64>,
    /// Leading fraction of the horizon left out of AAoI and PAoI.
    pub warmup_fraction: f64,
}

impl Default for AoiConfig {
    fn default() -> Self {
        Self {
            policy: PolicyKind::Optimal,
            p: 0.4,
            num_devices: 32,
            num_channels: 2,
            epsilon: 0.5,
            per_channel_erasure: false,
            threshold: Threshold(0),
            threshold_mode: ThresholdMode::OnGeneration,
            minislots: 1024,
            jitter: 4,
            wait_scale: None,
            warmup_fraction: 0.1,
        }
    }
}

impl AoiConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        check_probability("aoi.p", self.p)?;
        self.channel().validate()?;
        if self.num_devices == 0 {
            return Err(ConfigError::invalid("aoi.N", "need at least one device"));
        }
        if self.num_channels > 64 {
            return Err(ConfigError::invalid("aoi.F", "at most 64 channels"));
        }
        if self.minislots == 0 {
            return Err(ConfigError::invalid("aoi.M", "need at least one mini-slot"));
        }
        if self.jitter == 0 {
            return Err(ConfigError::invalid("aoi.J", "jitter window must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.warmup_fraction) {
            return Err(ConfigError::invalid("aoi.warmup_fraction", "must lie in [0, 1)"));
        }
        Ok(())
    }

    pub fn channel(&self) -> ChannelConfig {
        ChannelConfig {
            num_channels: self.num_channels,
            erasure_prob: self.epsilon,
            per_channel_erasure: self.per_channel_erasure,
        }
    }

    pub fn autonomous(&self) -> AutonomousParams {
        let mut params = AutonomousParams::new(self.minislots, self.jitter);
        if let Some(c) = self.wait_scale {
            params.wait_scale = c;
        }
        params
    }

    pub fn warmup_slots(&self, horizon: u64) -> u64 {
        (self.warmup_fraction * horizon as f64).floor() as u64
    }
}

/// Running AAoI / PAoI accumulator.
#[derive(Debug, Clone, PartialEq)]
pub struct AoiStats {
    warmup: u64,
    slots: u64,
    aoi_sum: u128,
    peak_sum: Vec<u64>,
    peak_count: Vec<u64>,
}

impl AoiStats {
    pub fn new(devices: usize, warmup: u64) -> Self {
        Self {
            warmup,
            slots: 0,
            aoi_sum: 0,
            peak_sum: vec![0; devices],
            peak_count: vec![0; devices],
        }
    }

    /// Records every device's AoI during slot `t`.
    pub fn record_slot(&mut self, t: SlotIndex, aoi: &[u64]) {
        if t.0 >= self.warmup {
            self.slots += 1;
            self.aoi_sum += aoi.iter().map(|&a| a as u128).sum::<u128>();
        }
    }

    /// Records the AoI a device had in slot `t`, just before a delivery resets it.
    pub fn record_peak(&mut self, t: SlotIndex, device: usize, aoi: u64) {
        if t.0 >= self.warmup {
            self.peak_sum[device] += aoi;
            self.peak_count[device] += 1;
        }
    }

    /// Sum of AoI over devices and recorded slots.
    pub fn aoi_sum(&self) -> u128 {
        self.aoi_sum
    }

    pub fn slots(&self) -> u64 {
        self.slots
    }

    pub fn deliveries(&self) -> u64 {
        self.peak_count.iter().sum()
    }

    /// Time-and-device average AoI past warm-up.
    pub fn aaoi(&self) -> Result<f64, MetricError> {
        if self.slots == 0 {
            return Err(MetricError::EmptyTrace("aaoi"));
        }
        Ok(self.aoi_sum as f64 / (self.slots as f64 * self.peak_sum.len() as f64))
    }

    /// Per-device mean peak AoI, averaged over devices with a delivery.
    pub fn paoi(&self) -> Result<f64, MetricError> {
        let per_device: Vec<f64> = self
            .peak_sum
            .iter()
            .zip(&self.peak_count)
            .filter(|(_, &n)| n > 0)
            .map(|(&s, &n)| s as f64 / n as f64)
            .collect();
        if per_device.is_empty() {
            return Err(MetricError::EmptyTrace("paoi"));
        }
        Ok(per_device.iter().sum::<f64>() / per_device.len() as f64)
    }
}

/// Per-slot randomness that is not policy-internal. Scripted runs supply it
/// directly; [`run`] draws it from the channel and generation streams.
#[derive(Debug, Clone, Copy)]
pub struct SlotDraws<'a> {
    pub connectivity: &'a Connectivity,
    /// Which devices generate a packet this slot (ignored by the optimal
    /// policy, whose devices generate on request).
    pub generated: &'a [bool],
}

/// The AoI network and its metrics, advanced one slot at a time.
#[derive(Debug, Clone)]
pub struct AoiSim {
    policy: PolicyKind,
    num_channels: usize,
    threshold: Threshold,
    mode: ThresholdMode,
    params: AutonomousParams,
    clock: SlotClock,
    aoi: Vec<u64>,
    buffer: Vec<Option<SlotIndex>>,
    stats: AoiStats,
    frames: FrameTrace,
    attempts: Vec<TxAttempt>,
    intents: Vec<RtsIntent>,
    outcomes: Vec<SlotOutcome>,
    order: Vec<usize>,
    scratch: Vec<u32>,
}

impl AoiSim {
    pub fn new(config: &AoiConfig, warmup: u64) -> Self {
        let n = config.num_devices;
        Self {
            policy: config.policy,
            num_channels: config.num_channels,
            threshold: config.threshold,
            mode: config.threshold_mode,
            params: config.autonomous(),
            clock: SlotClock::new(),
            aoi: vec![1; n],
            buffer: vec![None; n],
            stats: AoiStats::new(n, warmup),
            frames: FrameTrace::default(),
            attempts: Vec::new(),
            intents: Vec::new(),
            outcomes: Vec::new(),
            order: Vec::new(),
            scratch: Vec::new(),
        }
    }

    pub fn now(&self) -> SlotIndex {
        self.clock.now()
    }

    pub fn aoi(&self) -> &[u64] {
        &self.aoi
    }

    pub fn buffer(&self) -> &[Option<SlotIndex>] {
        &self.buffer
    }

    pub fn stats(&self) -> &AoiStats {
        &self.stats
    }

    pub fn frames(&self) -> &FrameTrace {
        &self.frames
    }

    /// Data transmissions of the last slot and their outcomes.
    pub fn last_slot(&self) -> (&[TxAttempt], &[SlotOutcome]) {
        (&self.attempts, &self.outcomes)
    }

    /// Advances one slot. `policy_rng` feeds channel choices and jitter.
    pub fn step<R: Rng + ?Sized>(&mut self, draws: SlotDraws<'_>, policy_rng: &mut R) -> Result<(), SimError> {
        let t = self.clock.now();
        let conn = draws.connectivity;

        self.clock.enter(Phase::Sense);
        if self.policy != PolicyKind::Optimal {
            generate_packets(&mut self.buffer, draws.generated, t);
        }

        self.clock.enter(Phase::Schedule);
        match self.policy {
            PolicyKind::Optimal => {
                policy::schedule_optimal_into(&self.aoi, conn, self.num_channels, t, &mut self.order, &mut self.attempts);
                self.frames.record_n(FrameKind::Poll, self.attempts.len() as u64);
            }
            PolicyKind::Threshold => policy::schedule_threshold_into(
                &self.aoi,
                &self.buffer,
                t,
                self.threshold,
                self.mode,
                self.num_channels,
                policy_rng,
                &mut self.attempts,
            ),
            PolicyKind::Autonomous => policy::schedule_autonomous_into(
                &self.aoi,
                &self.buffer,
                &self.params,
                self.num_channels,
                policy_rng,
                &mut self.intents,
            ),
        }

        self.clock.enter(Phase::Transmit);
        if self.policy == PolicyKind::Autonomous {
            let rts = contend(&self.intents, conn, self.num_channels, &mut self.attempts);
            self.frames.record_n(FrameKind::Rts, rts);
        }
        resolve_slot_into(&self.attempts, conn, self.num_channels, &mut self.outcomes, &mut self.scratch)?;

        self.clock.enter(Phase::Metrics);
        self.stats.record_slot(t, &self.aoi);
        for (a, o) in self.attempts.iter().zip(&self.outcomes) {
            if *o == SlotOutcome::Delivered {
                self.stats.record_peak(t, a.device, self.aoi[a.device]);
            }
        }
        update_aoi(&mut self.aoi, &mut self.buffer, &self.attempts, &self.outcomes, t);
        self.clock.finish_slot();
        Ok(())
    }
}

/// Gives each device flagged in `generated` a fresh packet stamped `now`,
/// replacing whatever it buffered.
pub fn generate_packets(buffer: &mut [Option<SlotIndex>], generated: &[bool], now: SlotIndex) {
    for (slot, &g) in buffer.iter_mut().zip(generated) {
        if g {
            *slot = Some(now);
        }
    }
}

/// AoI for slot `now + 1`: a delivered packet generated at `g` sets the
/// sender's AoI to `now - g + 1` and empties its buffer if that packet is
/// still there; every other AoI grows by one.
pub fn update_aoi(
    aoi: &mut [u64],
    buffer: &mut [Option<SlotIndex>],
    attempts: &[TxAttempt],
    outcomes: &[SlotOutcome],
    now: SlotIndex,
) {
    for a in aoi.iter_mut() {
        *a += 1;
    }
    for (att, o) in attempts.iter().zip(outcomes) {
        if *o == SlotOutcome::Delivered {
            aoi[att.device] = now.0 - att.payload_gen_slot.0 + 1;
            if buffer[att.device] == Some(att.payload_gen_slot) {
                buffer[att.device] = None;
            }
        }
    }
}

/// Draws each device's generation flag for one slot.
pub(crate) fn draw_generation(rng: &mut SimRng, p: f64, out: &mut [bool]) {
    for g in out.iter_mut() {
        *g = rng.random::<f64>() < p;
    }
}

/// Simulates `horizon` slots and reports AAoI, PAoI and signalling.
pub fn run(config: &AoiConfig, seed: u64, horizon: u64) -> Result<MetricsReport, SimError> {
    config.validate()?;
    let stats_sim = simulate(config, seed, horizon)?;
    let stats = stats_sim.stats();
    let mut report = MetricsReport::new("aoi", seed, horizon, serde_json::to_value(config).expect("config serializes"));
    report.push(Metric::point("aaoi", stats.aaoi()?, Unit::Slots));
    match stats.paoi() {
        Ok(v) => report.push(Metric::point("paoi", v, Unit::Slots)),
        Err(_) => {
            let bound = stats_sim.aoi().iter().copied().max().unwrap_or(0);
            report.push(Metric::censored("paoi", bound as f64, Unit::Slots));
        }
    }
    report.push(Metric::point(
        "delivery_rate",
        stats.deliveries() as f64 / stats.slots() as f64,
        Unit::Ratio,
    ));
    report.overhead = stats_sim.frames().overhead_bits();
    report.push(Metric::point("overhead_bits", report.overhead.total() as f64, Unit::Bits));
    Ok(report)
}

/// Runs the scenario and returns the final simulator state.
pub fn simulate(config: &AoiConfig, seed: u64, horizon: u64) -> Result<AoiSim, SimError> {
    config.validate()?;
    let channel = config.channel();
    let mut channel_rng = stream_rng(seed, Stream::Channel);
    let mut gen_rng = stream_rng(seed, Stream::Generation);
    let mut policy_rng = stream_rng(seed, Stream::Policy);
    let mut sim = AoiSim::new(config, config.warmup_slots(horizon));
    let mut conn = Connectivity::all_connected(config.num_devices);
    let mut generated = vec![false; config.num_devices];
    for _ in 0..horizon {
        sample_connectivity_into(&channel, &mut channel_rng, config.num_devices, &mut conn);
        if config.policy != PolicyKind::Optimal {
            draw_generation(&mut gen_rng, config.p, &mut generated);
        }
        sim.step(
            SlotDraws {
                connectivity: &conn,
                generated: &generated,
            },
            &mut policy_rng,
        )?;
    }
    Ok(sim)
}
