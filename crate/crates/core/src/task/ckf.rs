//! Cubature Kalman filter with scalar measurements.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FilterError {
    #[error("non-finite {0}")]
    NonFinite(&'static str),
    #[error("innovation variance {0} is not positive")]
    NonPositiveInnovation(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CubatureRule {
    /// Third-degree spherical-radial rule: `2n` points at radius `sqrt(n)`.
    #[default]
    Cubature,
    /// Spherical rule combined with a two-point Gauss-Laguerre radial rule:
    /// `4n` points on two shells.
    Quadrature,
}

impl CubatureRule {
    /// Unit points and weights for dimension `n`.
    pub fn points(self, n: usize) -> (Vec<(usize, f64)>, Vec<f64>) {
        let radii: Vec<(f64, f64)> = match self {
            CubatureRule::Cubature => vec![((n as f64).sqrt(), 1.0)],
            CubatureRule::Quadrature => {
                // Roots of the generalized Laguerre polynomial L_2^(alpha),
                // alpha = n/2 - 1, with weights matching its first two moments.
                let alpha = n as f64 / 2.0 - 1.0;
                let l1 = alpha + 2.0 - (alpha + 2.0).sqrt();
                let l2 = alpha + 2.0 + (alpha + 2.0).sqrt();
                let w1 = (alpha + 1.0 - l2) / (l1 - l2);
                vec![((2.0 * l1).sqrt(), w1), ((2.0 * l2).sqrt(), 1.0 - w1)]
            }
        };
        let mut pts = Vec::new();
        let mut weights = Vec::new();
        for (radius, w) in radii {
            for i in 0..n {
                for sign in [1.0, -1.0] {
                    pts.push((i, sign * radius));
                    weights.push(w / (2 * n) as f64);
                }
            }
        }
        (pts, weights)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EstimateKind {
    Prior,
    Posterior,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
    pub kind: EstimateKind,
}

impl Estimate {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Self {
        Self {
            mean,
            cov,
            kind: EstimateKind::Posterior,
        }
    }

    /// Smallest eigenvalue of the covariance.
    pub fn min_eigenvalue(&self) -> f64 {
        self.cov.clone().symmetric_eigen().eigenvalues.min()
    }

    pub fn is_symmetric(&self) -> bool {
        self.cov == self.cov.transpose()
    }
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// A factor `S` with `S S^T = P` for symmetric PSD `P`: Cholesky, then a
/// clamped eigen-decomposition for singular matrices, then Cholesky with
/// diagonal jitter.
pub fn sqrt_psd(p: &DMatrix<f64>) -> Result<DMatrix<f64>, FilterError> {
    if !p.iter().all(|v| v.is_finite()) {
        return Err(FilterError::NonFinite("covariance"));
    }
    if let Some(chol) = p.clone().cholesky() {
        return Ok(chol.l());
    }
    let eig = p.clone().symmetric_eigen();
    if eig.eigenvalues.iter().all(|v| v.is_finite()) {
        let d = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
        return Ok(&eig.eigenvectors * DMatrix::from_diagonal(&d));
    }
    let n = p.nrows();
    let scale = (p.trace() / n as f64).abs().max(1.0);
    let mut jitter = 1e-12 * scale;
    for _ in 0..8 {
        let jittered = p + DMatrix::identity(n, n) * jitter;
        if let Some(chol) = jittered.cholesky() {
            return Ok(chol.l());
        }
        jitter *= 10.0;
    }
    Err(FilterError::NonFinite("covariance factor"))
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Ckf {
    pub rule: CubatureRule,
}

impl Ckf {
    pub fn new(rule: CubatureRule) -> Self {
        Self { rule }
    }

    fn sigma_points(&self, est: &Estimate) -> Result<(Vec<DVector<f64>>, Vec<f64>), FilterError> {
        let s = sqrt_psd(&est.cov)?;
        let (pts, w) = self.rule.points(est.mean.len());
        let x = pts
            .iter()
            .map(|&(i, r)| &est.mean + s.column(i) * r)
            .collect();
        Ok((x, w))
    }

    /// Prior for the next step under `x' = f(x) + w`, `w ~ N(0, q)`.
    pub fn predict<F>(&self, est: &Estimate, f: F, q: &DMatrix<f64>) -> Result<Estimate, FilterError>
    where
        F: Fn(&DVector<f64>) -> DVector<f64>,
    {
        let (pts, w) = self.sigma_points(est)?;
        let prop: Vec<DVector<f64>> = pts.iter().map(&f).collect();
        let n = est.mean.len();
        let mut mean = DVector::zeros(n);
        for (y, wi) in prop.iter().zip(&w) {
            mean += y * *wi;
        }
        let mut cov = q.clone();
        for (y, wi) in prop.iter().zip(&w) {
            let d = y - &mean;
            cov += &d * d.transpose() * *wi;
        }
        let out = Estimate {
            mean,
            cov: symmetrize(&cov),
            kind: EstimateKind::Prior,
        };
        check_finite(&out)?;
        Ok(out)
    }

    /// Posterior after a scalar measurement `y = h(x) + v`, `v ~ N(0, r)`.
    pub fn update<H>(&self, est: &Estimate, y: f64, h: H, r: f64) -> Result<Estimate, FilterError>
    where
        H: Fn(&DVector<f64>) -> f64,
    {
        let (pts, w) = self.sigma_points(est)?;
        let z: Vec<f64> = pts.iter().map(&h).collect();
        let z_hat: f64 = z.iter().zip(&w).map(|(zi, wi)| zi * wi).sum();
        let mut pzz = r;
        let mut pxz = DVector::zeros(est.mean.len());
        for ((x, zi), wi) in pts.iter().zip(&z).zip(&w) {
            let dz = zi - z_hat;
            pzz += wi * dz * dz;
            pxz += (x - &est.mean) * (wi * dz);
        }
        if !pzz.is_finite() {
            return Err(FilterError::NonFinite("innovation variance"));
        }
        if pzz <= 0.0 {
            return Err(FilterError::NonPositiveInnovation(pzz));
        }
        let gain = &pxz / pzz;
        let mean = &est.mean + &gain * (y - z_hat);
        let cov = &est.cov - &gain * gain.transpose() * pzz;
        let out = Estimate {
            mean,
            cov: symmetrize(&cov),
            kind: EstimateKind::Posterior,
        };
        check_finite(&out)?;
        Ok(out)
    }
}

fn check_finite(est: &Estimate) -> Result<(), FilterError> {
    if !est.mean.iter().all(|v| v.is_finite()) {
        return Err(FilterError::NonFinite("state mean"));
    }
    if !est.cov.iter().all(|v| v.is_finite()) {
        return Err(FilterError::NonFinite("covariance"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear_f(a: &DMatrix<f64>) -> impl Fn(&DVector<f64>) -> DVector<f64> + '_ {
        move |x| a * x
    }

    fn kf_predict(m: &DVector<f64>, p: &DMatrix<f64>, a: &DMatrix<f64>, q: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
        (a * m, a * p * a.transpose() + q)
    }

    fn kf_update(m: &DVector<f64>, p: &DMatrix<f64>, hrow: &DVector<f64>, y: f64, r: f64) -> (DVector<f64>, DMatrix<f64>) {
        let s = (hrow.transpose() * p * hrow)[0] + r;
        let k = p * hrow / s;
        let innov = y - hrow.dot(m);
        (m + &k * innov, p - &k * k.transpose() * s)
    }

    fn case() -> (Estimate, DMatrix<f64>, DMatrix<f64>) {
        let mean = DVector::from_vec(vec![0.3, -1.2, 2.0]);
        let cov = DMatrix::from_row_slice(3, 3, &[2.0, 0.3, 0.1, 0.3, 1.0, -0.2, 0.1, -0.2, 0.5]);
        let a = DMatrix::from_row_slice(3, 3, &[0.9, 0.1, 0.0, 0.0, 0.8, 0.2, 0.1, 0.0, 0.7]);
        let q = DMatrix::from_diagonal_element(3, 3, 0.05);
        (Estimate::new(mean, cov), a, q)
    }

    #[test]
    fn weights_sum_to_one_and_match_the_covariance() {
        for rule in [CubatureRule::Cubature, CubatureRule::Quadrature] {
            for n in 1..6 {
                let (pts, w) = rule.points(n);
                assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                for i in 0..n {
                    let second: f64 = pts.iter().zip(&w).filter(|((j, _), _)| *j == i).map(|((_, r), wi)| r * r * wi).sum();
                    assert!((second - 1.0).abs() < 1e-12, "{rule:?} n={n}");
                }
            }
        }
    }

    #[test]
    fn linear_prediction_matches_kalman() {
        for rule in [CubatureRule::Cubature, CubatureRule::Quadrature] {
            let (est, a, q) = case();
            let prior = Ckf::new(rule).predict(&est, linear_f(&a), &q).unwrap();
            let (m, p) = kf_predict(&est.mean, &est.cov, &a, &q);
            assert!((prior.mean - m).amax() < 1e-9);
            assert!((prior.cov - p).amax() < 1e-9);
        }
    }

    #[test]
    fn linear_update_matches_kalman() {
        let (est, _, _) = case();
        let hrow = DVector::from_vec(vec![0.0, 1.0, 0.5]);
        let post = Ckf::default().update(&est, 0.7, |x| hrow.dot(x), 0.4).unwrap();
        let (m, p) = kf_update(&est.mean, &est.cov, &hrow, 0.7, 0.4);
        assert!((&post.mean - m).amax() < 1e-9);
        assert!((&post.cov - p).amax() < 1e-9);
        assert!(post.cov.trace() <= est.cov.trace() + 1e-12);
    }

    #[test]
    fn identity_without_noise_keeps_the_covariance() {
        let (est, _, _) = case();
        let q = DMatrix::zeros(3, 3);
        let prior = Ckf::default().predict(&est, |x| x.clone(), &q).unwrap();
        assert!((prior.cov - &est.cov).amax() < 1e-12);
        assert!((prior.mean - &est.mean).amax() < 1e-12);
    }

    #[test]
    fn point_prior_maps_the_mean() {
        let est = Estimate::new(DVector::from_vec(vec![0.5, -2.0]), DMatrix::zeros(2, 2));
        let f = |x: &DVector<f64>| x.map(|v| 0.9 * v + 5.0 * v / (1.0 + v * v));
        let prior = Ckf::default().predict(&est, f, &DMatrix::zeros(2, 2)).unwrap();
        assert!((prior.mean - f(&est.mean)).amax() < 1e-12);
    }

    #[test]
    fn huge_measurement_noise_leaves_the_prior() {
        let (est, _, _) = case();
        let post = Ckf::default().update(&est, 3.0, |x| x[0] + 0.05 * x[0] * x[0], 1e18).unwrap();
        assert!((&post.mean - &est.mean).amax() < 1e-12);
        assert!((&post.cov - &est.cov).amax() < 1e-12);
    }

    #[test]
    fn non_finite_state_is_an_error() {
        let est = Estimate::new(DVector::from_vec(vec![f64::NAN]), DMatrix::identity(1, 1));
        assert!(Ckf::default().predict(&est, |x| x.clone(), &DMatrix::zeros(1, 1)).is_err());
        let bad = Estimate::new(DVector::zeros(1), DMatrix::from_element(1, 1, f64::INFINITY));
        assert_eq!(sqrt_psd(&bad.cov), Err(FilterError::NonFinite("covariance")));
    }

    #[test]
    fn zero_measurement_noise_and_flat_h_is_rejected() {
        let est = Estimate::new(DVector::zeros(1), DMatrix::identity(1, 1));
        assert!(matches!(
            Ckf::default().update(&est, 0.0, |_| 1.0, 0.0),
            Err(FilterError::NonPositiveInnovation(_))
        ));
    }

    #[test]
    fn singular_covariance_factors() {
        let p = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let s = sqrt_psd(&p).unwrap();
        assert!((&s * s.transpose() - p).amax() < 1e-12);
    }
}
