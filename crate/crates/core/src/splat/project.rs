//! Projection of 3D Gaussians to 2D image-plane conics.

use nalgebra::{Matrix2, Vector2};

use super::{GaussianPrimitive, SplatError, UtParams};
use crate::geom::CameraModel;

/// A Gaussian projected to the image plane: pixel mean, 2×2 covariance, and
/// the camera-frame depth used for compositing order.
#[derive(Debug, Clone, Copy)]
pub struct ProjectedSplat {
    pub mean: Vector2<f64>,
    pub cov: Matrix2<f64>,
    pub z: f64,
}

/// EWA projection: linearize the full camera map (perspective + distortion)
/// at the Gaussian mean, Σ′ = J·W·Σ·Wᵀ·Jᵀ. `None` when behind the camera.
pub fn project_ewa(g: &GaussianPrimitive, cam: &CameraModel) -> Option<ProjectedSplat> {
    let x_cam = cam.pose.apply(&g.mean);
    let pix = cam.project_camera_frame(&x_cam)?;
    let w = cam.pose.rotation;
    let sigma_cam = w * g.covariance * w.transpose();
    let j = cam.projection_jacobian(&x_cam);
    let cov = j * sigma_cam * j.transpose();
    Some(ProjectedSplat {
        mean: Vector2::new(pix.u, pix.v),
        cov: 0.5 * (cov + cov.transpose()),
        z: pix.depth,
    })
}

/// Unscented-transform projection: push the 7 sigma points through the full
/// nonlinear camera map. `Ok(None)` when any sigma point is behind the
/// camera; `Err` when the covariance has no Cholesky factor.
pub fn project_ut(g: &GaussianPrimitive, cam: &CameraModel, params: &UtParams) -> Result<Option<ProjectedSplat>, SplatError> {
    let x_cam = cam.pose.apply(&g.mean);
    if x_cam.z <= crate::geom::Z_NEAR {
        return Ok(None);
    }
    let projected = super::unscented_transform_2d(&g.mean, &g.covariance, params, |p| {
        cam.project(p).map(|pix| Vector2::new(pix.u, pix.v))
    })?;
    Ok(projected.map(|(mean, cov)| ProjectedSplat {
        mean,
        cov,
        z: x_cam.z,
    }))
}
