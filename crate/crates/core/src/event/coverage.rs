use serde::{Deserialize, Serialize};

use super::arena::{Arena, Point};
use crate::sim::{SlotIndex, SLOT_MS};

/// Depleted-coverage tiers, as fractions of the arena.
pub const MTTF_TIERS: [f64; 3] = [0.10, 0.25, 0.50];

/// Fraction of the arena whose nearest device is depleted, estimated on a
/// regular grid of cell centers. The per-device share of grid points is
/// fixed at placement, so an update costs O(1).
#[derive(Debug, Clone)]
pub struct DepletedCoverage {
    owned: Vec<u32>,
    depleted: Vec<bool>,
    depleted_points: u64,
    total_points: u64,
}

impl DepletedCoverage {
    pub fn new(arena: &Arena, resolution: usize) -> Self {
        let mut owned = vec![0u32; arena.len()];
        if !arena.is_empty() {
            for i in 0..resolution {
                for j in 0..resolution {
                    let p = Point::new((i as f64 + 0.5) / resolution as f64, (j as f64 + 0.5) / resolution as f64);
                    let nearest = (0..arena.len())
                        .min_by(|&a, &b| arena.positions[a].dist(p).total_cmp(&arena.positions[b].dist(p)))
                        .expect("non-empty arena");
                    owned[nearest] += 1;
                }
            }
        }
        Self {
            depleted: vec![false; arena.len()],
            owned,
            depleted_points: 0,
            total_points: (resolution * resolution) as u64,
        }
    }

    pub fn set_depleted(&mut self, device: usize, depleted: bool) {
        if self.depleted[device] != depleted {
            self.depleted[device] = depleted;
            let share = self.owned[device] as u64;
            if depleted {
                self.depleted_points += share;
            } else {
                self.depleted_points -= share;
            }
        }
    }

    pub fn fraction(&self) -> f64 {
        if self.total_points == 0 {
            return 0.0;
        }
        self.depleted_points as f64 / self.total_points as f64
    }

    /// Grid points owned by each device.
    pub fn shares(&self) -> &[u32] {
        &self.owned
    }
}

/// Time until depleted coverage first exceeds a tier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mttf {
    pub tier: f64,
    pub seconds: f64,
    /// Never crossed: `seconds` is the horizon, a lower bound.
    pub censored: bool,
}

/// Records the first slot at which coverage exceeds each tier.
#[derive(Debug, Clone, PartialEq)]
pub struct MttfTracker {
    tiers: Vec<f64>,
    crossed: Vec<Option<SlotIndex>>,
}

impl MttfTracker {
    pub fn new(tiers: &[f64]) -> Self {
        Self {
            tiers: tiers.to_vec(),
            crossed: vec![None; tiers.len()],
        }
    }

    pub fn observe(&mut self, t: SlotIndex, coverage: f64) {
        for (tier, crossed) in self.tiers.iter().zip(self.crossed.iter_mut()) {
            if crossed.is_none() && coverage > *tier {
                *crossed = Some(t);
            }
        }
    }

    pub fn finish(&self, horizon: u64) -> Vec<Mttf> {
        self.tiers
            .iter()
            .zip(&self.crossed)
            .map(|(&tier, crossed)| match crossed {
                Some(t) => Mttf {
                    tier,
                    seconds: t.as_ms() / 1000.0,
                    censored: false,
                },
                None => Mttf {
                    tier,
                    seconds: horizon as f64 * SLOT_MS / 1000.0,
                    censored: true,
                },
            })
            .collect()
    }
}

/// MTTF per tier from a per-slot depleted-coverage series.
pub fn compute_mttf(coverage: &[f64], tiers: &[f64]) -> Vec<Mttf> {
    let mut tracker = MttfTracker::new(tiers);
    for (t, &c) in coverage.iter().enumerate() {
        tracker.observe(SlotIndex(t as u64), c);
    }
    tracker.finish(coverage.len() as u64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{stream_rng, Stream};

    #[test]
    fn no_depletion_censors_every_tier() {
        let m = compute_mttf(&[0.0; 500], &MTTF_TIERS);
        assert!(m.iter().all(|x| x.censored && x.seconds == 0.5));
    }

    #[test]
    fn total_depletion_at_one_slot() {
        let mut series = vec![0.0; 300];
        series[120..].fill(1.0);
        let m = compute_mttf(&series, &MTTF_TIERS);
        assert!(m.iter().all(|x| !x.censored && x.seconds == 0.120));
    }

    #[test]
    fn grid_shares_partition_the_arena() {
        let mut rng = stream_rng(1, Stream::Placement);
        let arena = Arena::uniform(60.0, 0.08, &mut rng);
        let mut cov = DepletedCoverage::new(&arena, 100);
        assert_eq!(cov.shares().iter().map(|&s| s as u64).sum::<u64>(), 10_000);
        for d in 0..arena.len() {
            cov.set_depleted(d, true);
        }
        assert_eq!(cov.fraction(), 1.0);
        cov.set_depleted(0, false);
        cov.set_depleted(0, false);
        assert!(cov.fraction() < 1.0);
        cov.set_depleted(0, true);
        assert_eq!(cov.fraction(), 1.0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn tiers_are_ordered(series in proptest::collection::vec(0.0f64..=1.0, 1..200)) {
                let m = compute_mttf(&series, &MTTF_TIERS);
                prop_assert!(m[0].seconds <= m[1].seconds && m[1].seconds <= m[2].seconds);
            }
        }
    }
}
