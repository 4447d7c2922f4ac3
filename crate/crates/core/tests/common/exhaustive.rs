//! Exhaustive enumeration of every per-slot draw pattern of a two-device,
//! one-channel AoI network, with exact integer weights.
//!
//! Each slot has four patterns (one bit per device). For the optimal policy
//! the bit is connectivity; for the threshold policy in on-generation mode
//! it is "generated and connected", the only combination that changes the
//! AoI (an erased send never collides and never delivers). At p = 1/2 and
//! eps = 1/2 a threshold bit is 1 with probability 1/4, so a pattern with
//! `z` zero bits has weight `3^z` out of `4^(2h)`; optimal patterns are
//! uniform, weight 1 out of `4^h`.

#![allow(dead_code)]

use contextsim::aoi::{AoiConfig, AoiSim, PolicyKind, SlotDraws, Threshold, ThresholdMode};
use contextsim::channel::Connectivity;
use contextsim::sim::{stream_rng, Stream};

pub const DEVICES: usize = 2;

fn patterns() -> [Vec<bool>; 4] {
    [0u32, 1, 2, 3].map(|b| (0..DEVICES).map(|i| b >> i & 1 == 1).collect())
}

pub fn config(policy: PolicyKind, threshold: Threshold) -> AoiConfig {
    AoiConfig {
        policy,
        threshold,
        threshold_mode: ThresholdMode::OnGeneration,
        p: 0.5,
        num_devices: DEVICES,
        num_channels: 1,
        epsilon: 0.5,
        warmup_fraction: 0.0,
        ..AoiConfig::default()
    }
}

/// Weight of one slot's pattern: uniform for the optimal policy, `3^zeros`
/// for the threshold policy.
fn weight(policy: PolicyKind, bits: &[bool]) -> u128 {
    match policy {
        PolicyKind::Threshold => 3u128.pow(bits.iter().filter(|b| !**b).count() as u32),
        _ => 1,
    }
}

struct Walk {
    policy: PolicyKind,
    pats: [Vec<bool>; 4],
    conns: Vec<Connectivity>,
    per_slot: u128,
    rng: contextsim::sim::SimRng,
    acc: u128,
}

impl Walk {
    fn go(&mut self, sim: &AoiSim, remaining: u32, w: u128) {
        if remaining == 1 {
            // The last slot records the AoI it starts with, whatever is drawn.
            let mut s = sim.clone();
            s.step(SlotDraws { connectivity: &self.conns[0], generated: &self.pats[0] }, &mut self.rng)
                .unwrap();
            self.acc += w * self.per_slot * s.stats().aoi_sum();
            return;
        }
        for k in 0..4 {
            let mut s = sim.clone();
            s.step(SlotDraws { connectivity: &self.conns[k], generated: &self.pats[k] }, &mut self.rng)
                .unwrap();
            let wk = weight(self.policy, &self.pats[k]);
            self.go(&s, remaining - 1, w * wk);
        }
    }
}

/// Sum over all patterns of `weight * (AoI summed over slots and devices)`,
/// and the total weight.
pub fn weighted_aoi_sum(policy: PolicyKind, threshold: Threshold, horizon: u32) -> (u128, u128) {
    assert!(horizon >= 1);
    let cfg = config(policy, threshold);
    let pats = patterns();
    let per_slot: u128 = pats.iter().map(|p| weight(policy, p)).sum();
    let mut walk = Walk {
        policy,
        conns: pats.iter().map(|p| Connectivity::per_device(p.clone())).collect(),
        pats,
        per_slot,
        rng: stream_rng(0, Stream::Policy),
        acc: 0,
    };
    walk.go(&AoiSim::new(&cfg, 0), horizon, 1);
    (walk.acc, per_slot.pow(horizon))
}

/// Mean-AAoI comparison in exact arithmetic: `a_sum / a_weight` versus
/// `b_sum / b_weight`, cross-multiplied.
pub fn cmp_means(a: (u128, u128), b: (u128, u128)) -> std::cmp::Ordering {
    (a.0 * b.1).cmp(&(b.0 * a.1))
}

/// Thresholds that behave differently within `horizon` slots, then never.
pub fn thresholds(horizon: u32) -> Vec<Threshold> {
    (0..horizon as u64).map(Threshold).chain([Threshold::NEVER]).collect()
}
