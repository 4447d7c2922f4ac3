use rand::Rng;
use rayon::prelude::*;

use super::{simulate, AoiConfig, PolicyKind, Threshold};
use crate::error::SimError;
use crate::sim::{derive_seed, stream_rng, Stream};

#[derive(Debug, Clone, PartialEq)]
pub struct TuneResult {
    pub best: Threshold,
    /// Mean AAoI of every grid point, in grid order.
    pub curve: Vec<(Threshold, f64)>,
}

/// Picks the age threshold with the lowest mean AAoI over `reps` runs of
/// `horizon` slots. Every grid point sees the same replication seeds, drawn
/// from the tuning stream of `seed`. Ties go to the smallest threshold.
pub fn tune_threshold(
    config: &AoiConfig,
    grid: &[Threshold],
    reps: u32,
    horizon: u64,
    seed: u64,
) -> Result<TuneResult, SimError> {
    assert!(!grid.is_empty(), "threshold grid must not be empty");
    let master = stream_rng(seed, Stream::Tuning).random::<u64>();
    let curve = grid
        .par_iter()
        .map(|&threshold| {
            let cfg = AoiConfig {
                policy: PolicyKind::Threshold,
                threshold,
                ..config.clone()
            };
            let mut total = 0.0;
            for i in 0..reps as u64 {
                total += simulate(&cfg, derive_seed(master, i), horizon)?.stats().aaoi()?;
            }
            Ok((threshold, total / reps as f64))
        })
        .collect::<Result<Vec<_>, SimError>>()?;
    let best = curve
        .iter()
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
        .map(|&(t, _)| t)
        .expect("non-empty grid");
    Ok(TuneResult { best, curve })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_point_grid() {
        let r = tune_threshold(&AoiConfig::default(), &[Threshold(7)], 1, 200, 1).unwrap();
        assert_eq!(r.best, Threshold(7));
    }

    #[test]
    fn monotone_curve_returns_endpoint() {
        // A lone device on a perfect channel: every threshold step adds
        // delay, so AAoI increases along the grid.
        let cfg = AoiConfig {
            num_devices: 1,
            num_channels: 1,
            epsilon: 0.0,
            p: 1.0,
            ..AoiConfig::default()
        };
        let grid: Vec<_> = (0..6).map(Threshold).collect();
        let r = tune_threshold(&cfg, &grid, 2, 500, 3).unwrap();
        assert!(r.curve.windows(2).all(|w| w[0].1 < w[1].1));
        assert_eq!(r.best, Threshold(0));
    }
}
