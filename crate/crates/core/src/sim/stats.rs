/// Sample mean with a 95% normal-approximation confidence interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanCi {
    pub mean: f64,
    pub half_width: f64,
    pub n: usize,
}

impl MeanCi {
    pub fn low(&self) -> f64 {
        self.mean - self.half_width
    }

    pub fn high(&self) -> f64 {
        self.mean + self.half_width
    }

    /// True when the two intervals share no point.
    pub fn separated_from(&self, other: &MeanCi) -> bool {
        self.high() < other.low() || other.high() < self.low()
    }
}

const Z_95: f64 = 1.959_963_984_540_054;

/// Mean and 95% CI of `samples`; a single sample has half-width 0.
pub fn mean_ci95(samples: &[f64]) -> MeanCi {
    let n = samples.len();
    if n == 0 {
        return MeanCi {
            mean: f64::NAN,
            half_width: f64::NAN,
            n,
        };
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return MeanCi {
            mean,
            half_width: 0.0,
            n,
        };
    }
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    MeanCi {
        mean,
        half_width: Z_95 * (var / n as f64).sqrt(),
        n,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_sample_has_zero_width() {
        let ci = mean_ci95(&[4.5]);
        assert_eq!(ci.mean, 4.5);
        assert_eq!(ci.half_width, 0.0);
    }

    #[test]
    fn known_interval() {
        // sd = 1, n = 4 => half width = 1.96 * 0.5
        let ci = mean_ci95(&[1.0, 2.0, 3.0, 2.0]);
        assert!((ci.mean - 2.0).abs() < 1e-12);
        let sd = (2.0f64 / 3.0).sqrt();
        assert!((ci.half_width - Z_95 * sd / 2.0).abs() < 1e-12);
    }

    #[test]
    fn separation() {
        let a = MeanCi { mean: 1.0, half_width: 0.1, n: 2 };
        let b = MeanCi { mean: 1.3, half_width: 0.1, n: 2 };
        let c = MeanCi { mean: 1.15, half_width: 0.1, n: 2 };
        assert!(a.separated_from(&b));
        assert!(!a.separated_from(&c));
    }
}
