use super::ThresholdMode;

/// Exact stationary AoI of one device on one channel under the threshold
/// policy, from the explicit finite Markov chain.
///
/// The chain state is `(aoi, buffered packet age)`, with AoI clamped at
/// `a_max`. In the clamp state the remaining excess over `a_max` is
/// geometric with the clamp state's exit probability, which is exact when
/// that probability does not depend on the buffer (always true in
/// [`ThresholdMode::OnGeneration`]).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainOracle {
    pub p: f64,
    pub epsilon: f64,
    pub threshold: u64,
    pub mode: ThresholdMode,
    pub a_max: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainSolution {
    pub aaoi: f64,
    pub paoi: f64,
    /// Stationary probability of the clamp state.
    pub tail_mass: f64,
    pub iterations: usize,
}

impl ChainOracle {
    pub fn new(p: f64, epsilon: f64, threshold: u64) -> Self {
        Self {
            p,
            epsilon,
            threshold,
            mode: ThresholdMode::OnGeneration,
            a_max: 50,
        }
    }

    /// Buffer ages tracked: `None` plus `0..a_max`.
    fn buffer_states(&self) -> usize {
        match self.mode {
            ThresholdMode::OnGeneration => 1,
            ThresholdMode::Persistent => self.a_max as usize + 1,
        }
    }

    fn index(&self, aoi: u64, buf: usize) -> usize {
        (aoi as usize - 1) * self.buffer_states() + buf
    }

    /// Successors of state `(aoi, buf)` as `(aoi', buf', prob, delivered)`.
    /// `buf` is 0 for an empty buffer and `k + 1` for a packet of age `k`.
    fn transitions(&self, aoi: u64, buf: usize, out: &mut Vec<(u64, usize, f64, bool)>) {
        out.clear();
        let succ = 1.0 - self.epsilon;
        let next_aoi = (aoi + 1).min(self.a_max);
        let admitted = aoi > self.threshold;
        match self.mode {
            ThresholdMode::OnGeneration => {
                let q = if admitted { self.p * succ } else { 0.0 };
                if q > 0.0 {
                    out.push((1, 0, q, true));
                }
                out.push((next_aoi, 0, 1.0 - q, false));
            }
            ThresholdMode::Persistent => {
                let age_cap = self.a_max as usize;
                let aged = |b: usize| if b == 0 { 0 } else { (b + 1).min(age_cap) };
                // Generated this slot: packet of age 0 replaces the buffer.
                let branch = |packet: usize, prob: f64, out: &mut Vec<_>| {
                    if prob == 0.0 {
                        return;
                    }
                    if packet != 0 && admitted {
                        let delivered_aoi = (packet as u64).min(self.a_max);
                        out.push((delivered_aoi, 0, prob * succ, true));
                        out.push((next_aoi, aged(packet), prob * self.epsilon, false));
                    } else {
                        out.push((next_aoi, aged(packet), prob, false));
                    }
                };
                branch(1, self.p, out);
                branch(buf, 1.0 - self.p, out);
            }
        }
    }

    pub fn solve(&self) -> ChainSolution {
        let a_max = self.a_max;
        let nb = self.buffer_states();
        let n = a_max as usize * nb;
        let mut pi = vec![0.0; n];
        pi[self.index(1, 0)] = 1.0;
        let mut next = vec![0.0; n];
        let mut tr = Vec::new();
        let mut iterations = 0;
        // Lazy chain (P + I) / 2: same stationary law, never periodic.
        loop {
            next.iter_mut().for_each(|x| *x = 0.0);
            for aoi in 1..=a_max {
                for buf in 0..nb {
                    let mass = pi[self.index(aoi, buf)];
                    if mass == 0.0 {
                        continue;
                    }
                    next[self.index(aoi, buf)] += 0.5 * mass;
                    self.transitions(aoi, buf, &mut tr);
                    for &(a, b, prob, _) in &tr {
                        next[self.index(a, b)] += 0.5 * mass * prob;
                    }
                }
            }
            let diff: f64 = pi.iter().zip(&next).map(|(x, y)| (x - y).abs()).sum();
            std::mem::swap(&mut pi, &mut next);
            iterations += 1;
            if diff < 1e-14 || iterations >= 1_000_000 {
                break;
            }
        }

        // Exit probability of the clamp state, conditional on being in it.
        let mut clamp_mass = 0.0;
        let mut clamp_exit = 0.0;
        for buf in 0..nb {
            let mass = pi[self.index(a_max, buf)];
            clamp_mass += mass;
            self.transitions(a_max, buf, &mut tr);
            clamp_exit += mass * tr.iter().filter(|t| t.0 != a_max).map(|t| t.2).sum::<f64>();
        }
        let tail_excess = if clamp_mass > 0.0 && clamp_exit > 0.0 {
            let q = clamp_exit / clamp_mass;
            (1.0 - q) / q
        } else {
            0.0
        };

        let mut aaoi = 0.0;
        let mut peak_mass = 0.0;
        let mut peak_sum = 0.0;
        for aoi in 1..=a_max {
            let level = if aoi == a_max { aoi as f64 + tail_excess } else { aoi as f64 };
            for buf in 0..nb {
                let mass = pi[self.index(aoi, buf)];
                aaoi += mass * level;
                self.transitions(aoi, buf, &mut tr);
                let deliver: f64 = tr.iter().filter(|t| t.3).map(|t| t.2).sum();
                peak_mass += mass * deliver;
                peak_sum += mass * deliver * level;
            }
        }
        ChainSolution {
            aaoi,
            paoi: if peak_mass > 0.0 { peak_sum / peak_mass } else { f64::INFINITY },
            tail_mass: clamp_mass,
            iterations,
        }
    }
}

/// Renewal form of the same quantity for [`ThresholdMode::OnGeneration`]:
/// the AoI at delivery is `L = threshold + G`, `G ~ Geometric(p (1 - eps))`
/// on `{1, 2, ..}`, and AoI sweeps `1..=L` each cycle, so
/// `AAoI = E[L (L + 1)] / (2 E[L])`.
pub fn renewal_aaoi(p: f64, epsilon: f64, threshold: u64) -> f64 {
    let q = p * (1.0 - epsilon);
    let th = threshold as f64;
    let el = th + 1.0 / q;
    let el2 = th * th + 2.0 * th / q + (2.0 - q) / (q * q);
    (el2 + el) / (2.0 * el)
}

/// Mean peak AoI `E[L]` of the renewal cycle above.
pub fn renewal_paoi(p: f64, epsilon: f64, threshold: u64) -> f64 {
    threshold as f64 + 1.0 / (p * (1.0 - epsilon))
}
