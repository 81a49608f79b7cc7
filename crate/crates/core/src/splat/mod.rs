//! Gaussian splatting of occupancy grids into sparse depth/semantic point
//! maps, with EWA-linearized and unscented-transform projection back ends.

mod maps;
mod project;
mod raster;
mod ut;

pub use maps::{read_depth_raw, write_depth_pgm16, write_depth_raw, write_semantic_pgm8, write_semantic_ppm};
pub use project::{project_ewa, project_ut, ProjectedSplat};
pub use raster::{rasterize, render_views, Backend, RasterDiagnostics, RenderOptions, RenderResult, RenderedMaps};
pub use ut::{unscented_transform_2d, UtParams};

use nalgebra::{Cholesky, Matrix3, Vector3};
use thiserror::Error;

use crate::grid::SemanticOccupancyGrid;

#[derive(Debug, Error)]
pub enum SplatError {
    #[error("covariance is not symmetric positive-definite")]
    NonPsdCovariance,
    #[error("invalid parameter: {0}")]
    BadParams(String),
}

/// One 3D Gaussian: position, covariance, opacity, and semantic class.
#[derive(Debug, Clone)]
pub struct GaussianPrimitive {
    pub mean: Vector3<f64>,
    pub covariance: Matrix3<f64>,
    pub opacity: f64,
    pub class_id: u8,
}

impl GaussianPrimitive {
    pub fn new(mean: Vector3<f64>, covariance: Matrix3<f64>, opacity: f64, class_id: u8) -> Result<Self, SplatError> {
        if (covariance - covariance.transpose()).norm() > 1e-12 {
            return Err(SplatError::NonPsdCovariance);
        }
        if Cholesky::new(covariance).is_none() {
            return Err(SplatError::NonPsdCovariance);
        }
        if !(opacity > 0.0 && opacity <= 1.0) {
            return Err(SplatError::BadParams(format!("opacity must be in (0,1], got {opacity}")));
        }
        Ok(Self {
            mean,
            covariance,
            opacity,
            class_id,
        })
    }

    /// Isotropic Gaussian with standard deviation `scale` per axis.
    pub fn isotropic(mean: Vector3<f64>, scale: f64, opacity: f64, class_id: u8) -> Result<Self, SplatError> {
        if !(scale > 0.0) {
            return Err(SplatError::BadParams(format!("scale must be positive, got {scale}")));
        }
        Self::new(mean, Matrix3::identity() * scale * scale, opacity, class_id)
    }
}

/// One Gaussian per non-empty voxel: mean at the voxel center, Σ = scale²·I,
/// class from the voxel.
pub fn occupancy_to_gaussians(
    grid: &SemanticOccupancyGrid,
    scale: f64,
    opacity: f64,
) -> Result<Vec<GaussianPrimitive>, SplatError> {
    if !(scale > 0.0) {
        return Err(SplatError::BadParams(format!("scale must be positive, got {scale}")));
    }
    if !(opacity > 0.0 && opacity <= 1.0) {
        return Err(SplatError::BadParams(format!("opacity must be in (0,1], got {opacity}")));
    }
    let cov = Matrix3::identity() * scale * scale;
    Ok(grid
        .occupied_indices()
        .into_iter()
        .map(|i| GaussianPrimitive {
            mean: grid.voxel_to_world_center(grid.voxel_of_linear(i)),
            covariance: cov,
            opacity,
            class_id: grid.classes()[i],
        })
        .collect())
}
