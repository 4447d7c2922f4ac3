use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

/// Per-component dynamics `x' = a x + b x / (1 + x^2) + w`, `w ~ N(0, q_proc)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProcessModel {
    pub a: f64,
    pub b: f64,
    /// Noise variance of each component (the covariance is `q_proc * I`).
    pub q_proc: f64,
}

impl ProcessModel {
    pub fn f(&self, x: &DVector<f64>) -> DVector<f64> {
        x.map(|xi| self.a * xi + self.b * xi / (1.0 + xi * xi))
    }

    pub fn noise_cov(&self, n: usize) -> DMatrix<f64> {
        DMatrix::from_diagonal_element(n, n, self.q_proc)
    }

    pub fn step<R: Rng + ?Sized>(&self, x: &DVector<f64>, rng: &mut R) -> DVector<f64> {
        let sd = self.q_proc.sqrt();
        self.f(x).map(|m| m + sd * rng.sample::<f64, _>(StandardNormal))
    }
}

/// Device `i` measures `c x_i + d x_i^2 + v`, `v ~ N(0, r)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservationModel {
    pub c: f64,
    pub d: f64,
    pub r: f64,
}

impl ObservationModel {
    pub fn h(&self, xi: f64) -> f64 {
        self.c * xi + self.d * xi * xi
    }

    pub fn observe<R: Rng + ?Sized>(&self, xi: f64, rng: &mut R) -> f64 {
        let v: f64 = StandardNormal.sample(rng);
        self.h(xi) + self.r.sqrt() * v
    }
}
