//! Unscented transform of a 3D Gaussian through an arbitrary map into 2D.

use nalgebra::{Cholesky, Matrix2, Matrix3, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use super::SplatError;

/// Sigma-point spread/prior parameters. λ = α²·(3 + κ) − 3 is derived.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UtParams {
    pub alpha: f64,
    pub beta: f64,
    pub kappa: f64,
}

impl Default for UtParams {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: 2.0,
            kappa: 0.0,
        }
    }
}

impl UtParams {
    pub fn new(alpha: f64, beta: f64, kappa: f64) -> Result<Self, SplatError> {
        let p = Self { alpha, beta, kappa };
        if !(3.0 + p.lambda() > 0.0) {
            return Err(SplatError::BadParams(format!(
                "3 + lambda must be positive, got lambda = {}",
                p.lambda()
            )));
        }
        Ok(p)
    }

    pub fn lambda(&self) -> f64 {
        self.alpha * self.alpha * (3.0 + self.kappa) - 3.0
    }

    /// Mean weights (w₀, w₁..₆) and covariance weights (w₀, w₁..₆).
    pub fn weights(&self) -> ((f64, f64), (f64, f64)) {
        let lambda = self.lambda();
        let w0_mean = lambda / (lambda + 3.0);
        let wi = 1.0 / (2.0 * (lambda + 3.0));
        let w0_cov = w0_mean + (1.0 - self.alpha * self.alpha + self.beta);
        ((w0_mean, wi), (w0_cov, wi))
    }
}

/// The 7 sigma points of N(mean, cov): x₀ = μ, x_k = μ ± √(3+λ)·L[:,k] with
/// Σ = L·Lᵀ. Errors when Σ has no Cholesky factor.
pub fn sigma_points(mean: &Vector3<f64>, cov: &Matrix3<f64>, params: &UtParams) -> Result<[Vector3<f64>; 7], SplatError> {
    let chol = Cholesky::new(*cov).ok_or(SplatError::NonPsdCovariance)?;
    let l = chol.l();
    let s = (3.0 + params.lambda()).sqrt();
    let mut pts = [*mean; 7];
    for k in 0..3 {
        let step = s * l.column(k);
        pts[1 + k] = mean + step;
        pts[4 + k] = mean - step;
    }
    Ok(pts)
}

/// Push N(mean, cov) through `f`. Returns `Ok(None)` when any sigma point
/// fails to map (e.g. behind the camera).
pub fn unscented_transform_2d(
    mean: &Vector3<f64>,
    cov: &Matrix3<f64>,
    params: &UtParams,
    f: impl Fn(&Vector3<f64>) -> Option<Vector2<f64>>,
) -> Result<Option<(Vector2<f64>, Matrix2<f64>)>, SplatError> {
    let pts = sigma_points(mean, cov, params)?;
    let mut projected = [Vector2::zeros(); 7];
    for (out, p) in projected.iter_mut().zip(&pts) {
        match f(p) {
            Some(v) => *out = v,
            None => return Ok(None),
        }
    }
    let ((w0m, wim), (w0c, wic)) = params.weights();
    let mut mean2 = projected[0] * w0m;
    for v in &projected[1..] {
        mean2 += v * wim;
    }
    let mut cov2 = Matrix2::zeros();
    for (k, v) in projected.iter().enumerate() {
        let w = if k == 0 { w0c } else { wic };
        let d = v - mean2;
        cov2 += w * d * d.transpose();
    }
    Ok(Some((mean2, cov2)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;
    use nalgebra::Matrix2x3;

    #[test]
    fn default_weights() {
        // alpha=1, beta=2, kappa=0 => lambda=0:
        //   w0_mean = 0, wi_mean = 1/6, w0_cov = 2, wi_cov = 1/6
        let p = UtParams::default();
        assert_eq!(p.lambda(), 0.0);
        let ((w0m, wim), (w0c, wic)) = p.weights();
        assert_eq!(w0m, 0.0);
        assert!((wim - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(w0c, 2.0);
        assert!((wic - 1.0 / 6.0).abs() < 1e-15);
        // mean weights sum to 1
        assert!((w0m + 6.0 * wim - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_degenerate_spread() {
        assert!(UtParams::new(0.0, 2.0, -3.0).is_err());
    }

    fn random_psd(rng: &mut SplitMix64) -> Matrix3<f64> {
        let a = Matrix3::from_fn(|_, _| rng.uniform(-1.0, 1.0));
        a * a.transpose() + Matrix3::identity() * 0.01
    }

    #[test]
    fn exact_for_affine_maps() {
        let mut rng = SplitMix64::new(123);
        for _ in 0..50 {
            let mean = Vector3::new(rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0));
            let cov = random_psd(&mut rng);
            let a = Matrix2x3::from_fn(|_, _| rng.uniform(-1.0, 1.0));
            let b = Vector2::new(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
            let (m2, c2) = unscented_transform_2d(&mean, &cov, &UtParams::default(), |x| Some(a * x + b))
                .unwrap()
                .unwrap();
            let want_mean = a * mean + b;
            let want_cov = a * cov * a.transpose();
            assert!((m2 - want_mean).norm() < 1e-9, "mean {m2} vs {want_mean}");
            assert!((c2 - want_cov).norm() < 1e-9, "cov {c2} vs {want_cov}");
        }
    }

    #[test]
    fn unmappable_sigma_point_culls() {
        let r = unscented_transform_2d(&Vector3::zeros(), &Matrix3::identity(), &UtParams::default(), |p| {
            (p.x < 0.5).then(|| Vector2::new(p.x, p.y))
        })
        .unwrap();
        assert!(r.is_none());
    }

    #[test]
    fn non_psd_is_error() {
        let bad = Matrix3::new(1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 1.0);
        assert!(unscented_transform_2d(&Vector3::zeros(), &bad, &UtParams::default(), |p| Some(p.xy())).is_err());
    }
}
