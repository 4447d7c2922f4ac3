use std::collections::VecDeque;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::arena::Point;
use crate::sim::SlotIndex;

/// Duty cycle: active for the first `active` slots of every `period`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DutyCycle {
    pub period: u32,
    pub active: u32,
}

impl DutyCycle {
    pub const fn new(period: u32, active: u32) -> Self {
        Self { period, active }
    }

    pub fn is_active(&self, t: SlotIndex, phase: u64) -> bool {
        (t.0 + phase) % (self.period as u64) < (self.active as u64)
    }

    pub fn fraction(&self) -> f64 {
        self.active as f64 / self.period as f64
    }
}

/// Parameters of the context-aware policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContextParams {
    /// Votes: at most this many most recent events.
    pub k: usize,
    /// Only events reported within this many slots vote.
    pub window: u64,
    /// Vote weight `max(0, 1 - d / bandwidth)`.
    pub bandwidth: f64,
    /// Likelihood bin edges; bin `i` selects duty level `i`.
    pub likelihood_edges: Vec<f64>,
    /// Duty levels, from least to most active.
    pub duty_levels: Vec<DutyCycle>,
    /// Level used while the edge has no event history.
    pub baseline_level: usize,
    /// Below this reported energy the level is capped at `low_water_level`.
    pub low_water: f64,
    pub low_water_level: usize,
    /// The wake-up receiver listens only while the store holds this much.
    pub wur_min: f64,
    /// Energy a device never spends into, except for WuR listening.
    pub reserve: f64,
    /// Wake-up candidates need at least this much reported energy.
    pub min_wake_energy: f64,
    /// Devices woken per reported event.
    pub wus_top_k: usize,
    pub w_proximity: f64,
    pub w_energy: f64,
    /// Slots between unsolicited context updates.
    pub heartbeat: u64,
    /// Slots between duty-level reassignments.
    pub reassign_period: u64,
}

impl Default for ContextParams {
    fn default() -> Self {
        Self {
            k: 8,
            window: 5000,
            bandwidth: 0.25,
            likelihood_edges: vec![0.05, 0.2, 0.4, 0.6],
            duty_levels: vec![
                DutyCycle::new(200, 1),
                DutyCycle::new(100, 1),
                DutyCycle::new(50, 1),
                DutyCycle::new(25, 1),
                DutyCycle::new(10, 1),
            ],
            baseline_level: 1,
            low_water: 0.3,
            low_water_level: 1,
            wur_min: 0.7,
            reserve: 0.02,
            min_wake_energy: 0.3,
            wus_top_k: 3,
            w_proximity: 1.0,
            w_energy: 1.0,
            heartbeat: 2000,
            reassign_period: 250,
        }
    }
}

impl ContextParams {
    pub fn max_level(&self) -> usize {
        self.duty_levels.len() - 1
    }
}

/// What the edge node knows: reported event locations and each device's
/// last reported (quantized) energy.
#[derive(Debug, Clone, Default)]
pub struct EdgeContext {
    history: VecDeque<(SlotIndex, Point)>,
    pub energy_q: Vec<u8>,
}

impl EdgeContext {
    pub fn new(devices: usize) -> Self {
        Self {
            history: VecDeque::new(),
            energy_q: vec![127; devices],
        }
    }

    pub fn record_event(&mut self, t: SlotIndex, center: Point, params: &ContextParams) {
        self.history.push_back((t, center));
        while self.history.len() > params.k {
            self.history.pop_front();
        }
    }

    pub fn history_len(&self) -> usize {
        self.history.len()
    }

    /// Distance-weighted vote of the recent events at `at`, in `[0, 1]`;
    /// `None` without history (every position equally likely).
    pub fn likelihood(&self, at: Point, now: SlotIndex, params: &ContextParams) -> Option<f64> {
        let recent: Vec<Point> = self
            .history
            .iter()
            .rev()
            .take(params.k)
            .filter(|(t, _)| now.0.saturating_sub(t.0) <= params.window)
            .map(|&(_, c)| c)
            .collect();
        if recent.is_empty() {
            return None;
        }
        let votes: f64 = recent
            .iter()
            .map(|c| (1.0 - c.dist(at) / params.bandwidth).max(0.0))
            .sum();
        Some(votes / recent.len() as f64)
    }

    pub fn energy_fraction(&self, device: usize) -> f64 {
        self.energy_q[device] as f64 / 127.0
    }
}

/// Bin of `likelihood` among `params.likelihood_edges`.
pub fn likelihood_bin(likelihood: f64, params: &ContextParams) -> usize {
    params.likelihood_edges.iter().filter(|&&e| likelihood >= e).count()
}

/// Duty level for a device: the likelihood bin (the baseline level without
/// history), capped while its reported energy is under the low-water mark.
pub fn duty_level(likelihood: Option<f64>, energy: f64, params: &ContextParams) -> usize {
    let level = match likelihood {
        None => params.baseline_level,
        Some(l) => likelihood_bin(l, params),
    }
    .min(params.max_level());
    if energy < params.low_water {
        level.min(params.low_water_level)
    } else {
        level
    }
}

/// A device the edge may wake.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WakeCandidate {
    pub device: usize,
    pub distance: f64,
    /// Last reported energy, fraction of capacity.
    pub energy: f64,
}

/// Picks up to `top_k` idle devices near a reported event, ranked by
/// `w_proximity * (1 - d / d_wus) + w_energy * energy`, lowest id first on
/// ties. Candidates out of range or under `min_wake_energy` are skipped.
pub fn select_wake_targets(candidates: &[WakeCandidate], d_wus: f64, params: &ContextParams) -> Vec<usize> {
    let score = |c: &WakeCandidate| params.w_proximity * (1.0 - c.distance / d_wus) + params.w_energy * c.energy;
    let mut eligible: Vec<&WakeCandidate> = candidates
        .iter()
        .filter(|c| c.distance <= d_wus && c.energy >= params.min_wake_energy)
        .collect();
    eligible.sort_by(|a, b| score(b).total_cmp(&score(a)).then(a.device.cmp(&b.device)));
    eligible.iter().take(params.wus_top_k).map(|c| c.device).collect()
}

/// Optional tabular refinement of the (likelihood bin, energy bin) to duty
/// level map, trained online.
#[derive(Debug, Clone)]
pub struct DutyLearner {
    q: Vec<f64>,
    levels: usize,
    likelihood_bins: usize,
    pub learning_rate: f64,
    pub discount: f64,
    pub exploration: f64,
    /// Reward per delivered report.
    pub detection_bonus: f64,
    /// Penalty per unit of capacity spent.
    pub energy_penalty: f64,
}

pub const ENERGY_BINS: usize = 4;

impl DutyLearner {
    pub fn new(params: &ContextParams) -> Self {
        let likelihood_bins = params.likelihood_edges.len() + 2;
        let levels = params.duty_levels.len();
        Self {
            q: vec![0.0; likelihood_bins * ENERGY_BINS * levels],
            levels,
            likelihood_bins,
            learning_rate: 0.1,
            discount: 0.9,
            exploration: 0.1,
            detection_bonus: 1.0,
            energy_penalty: 20.0,
        }
    }

    /// State index; the last likelihood bin stands for "no history".
    pub fn state(&self, likelihood: Option<f64>, energy: f64, params: &ContextParams) -> usize {
        let lb = match likelihood {
            None => self.likelihood_bins - 1,
            Some(l) => likelihood_bin(l, params),
        };
        let eb = ((energy * ENERGY_BINS as f64) as usize).min(ENERGY_BINS - 1);
        lb * ENERGY_BINS + eb
    }

    fn row(&self, state: usize) -> &[f64] {
        &self.q[state * self.levels..(state + 1) * self.levels]
    }

    pub fn greedy(&self, state: usize) -> usize {
        let row = self.row(state);
        let mut best = 0;
        for (i, &v) in row.iter().enumerate() {
            if v > row[best] {
                best = i;
            }
        }
        best
    }

    pub fn choose<R: Rng + ?Sized>(&self, state: usize, rng: &mut R) -> usize {
        if rng.random::<f64>() < self.exploration {
            rng.random_range(0..self.levels)
        } else {
            self.greedy(state)
        }
    }

    pub fn update(&mut self, state: usize, action: usize, reward: f64, next: usize) {
        let target = reward + self.discount * self.row(next).iter().cloned().fold(f64::MIN, f64::max);
        let q = &mut self.q[state * self.levels + action];
        *q += self.learning_rate * (target - *q);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_history_is_uniform() {
        let edge = EdgeContext::new(3);
        let params = ContextParams::default();
        assert_eq!(edge.likelihood(Point::new(0.3, 0.3), SlotIndex(100), &params), None);
        assert_eq!(duty_level(None, 1.0, &params), params.baseline_level);
    }

    #[test]
    fn hotspot_device_with_full_energy_gets_the_top_level() {
        let params = ContextParams::default();
        let mut edge = EdgeContext::new(1);
        let spot = Point::new(0.3, 0.3);
        for t in 0..5 {
            edge.record_event(SlotIndex(t * 10), spot, &params);
        }
        let l = edge.likelihood(spot, SlotIndex(60), &params).unwrap();
        assert_eq!(l, 1.0);
        assert_eq!(duty_level(Some(l), 1.0, &params), params.max_level());
        // Same place, drained store: capped.
        assert_eq!(duty_level(Some(l), 0.1, &params), params.low_water_level);
        // Far away: lowest level.
        let far = edge.likelihood(Point::new(0.9, 0.9), SlotIndex(60), &params).unwrap();
        assert_eq!(far, 0.0);
        assert_eq!(duty_level(Some(far), 1.0, &params), 0);
    }

    #[test]
    fn old_events_leave_the_window() {
        let params = ContextParams::default();
        let mut edge = EdgeContext::new(1);
        edge.record_event(SlotIndex(0), Point::new(0.5, 0.5), &params);
        assert!(edge.likelihood(Point::new(0.5, 0.5), SlotIndex(params.window), &params).is_some());
        assert!(edge.likelihood(Point::new(0.5, 0.5), SlotIndex(params.window + 1), &params).is_none());
    }

    #[test]
    fn higher_energy_wins_at_equal_distance() {
        let params = ContextParams {
            wus_top_k: 1,
            ..ContextParams::default()
        };
        let cands = [
            WakeCandidate { device: 0, distance: 0.1, energy: 0.2 },
            WakeCandidate { device: 1, distance: 0.1, energy: 0.9 },
        ];
        // Device 0 is also under the wake floor, so relax it to compare scores.
        let relaxed = ContextParams {
            min_wake_energy: 0.0,
            ..params.clone()
        };
        assert_eq!(select_wake_targets(&cands, 0.15, &relaxed), vec![1]);
        assert_eq!(select_wake_targets(&cands, 0.15, &params), vec![1]);
    }

    #[test]
    fn closer_device_wins_at_equal_energy() {
        let params = ContextParams {
            wus_top_k: 1,
            ..ContextParams::default()
        };
        let cands = [
            WakeCandidate { device: 0, distance: 0.12, energy: 0.8 },
            WakeCandidate { device: 1, distance: 0.02, energy: 0.8 },
            WakeCandidate { device: 2, distance: 0.5, energy: 1.0 },
        ];
        assert_eq!(select_wake_targets(&cands, 0.15, &params), vec![1]);
    }

    #[test]
    fn duty_cycle_windows() {
        let d = DutyCycle::new(10, 3);
        let active: Vec<u64> = (0..20).filter(|&t| d.is_active(SlotIndex(t), 4)).collect();
        assert_eq!(active, vec![6, 7, 8, 16, 17, 18]);
    }

    #[test]
    fn learner_prefers_rewarded_level() {
        let params = ContextParams::default();
        let mut l = DutyLearner::new(&params);
        let s = l.state(Some(0.7), 0.9, &params);
        for _ in 0..200 {
            l.update(s, 3, 1.0, s);
            l.update(s, 1, -1.0, s);
        }
        assert_eq!(l.greedy(s), 3);
    }
}
