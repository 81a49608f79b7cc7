//! Rigid transforms, oriented boxes, camera models, and LiDAR rig geometry
//! shared by every pipeline.

mod camera;
mod obb;
mod rig;
mod transform;

pub use camera::{CameraModel, Distortion, PixelPoint, Z_NEAR};
pub use obb::OrientedBox;
pub use rig::{fan_pattern, LidarRig, LidarSensor, Ray};
pub use transform::{PoseJson, RigidTransform};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeomError {
    #[error("rotation matrix is not orthonormal with det +1 (deviation {0:.3e})")]
    NotARotation(f64),
    #[error("half extents must be strictly positive, got {0:?}")]
    BadHalfExtents([f64; 3]),
    #[error("camera intrinsics invalid: {0}")]
    BadIntrinsics(String),
    #[error("lidar rig invalid: {0}")]
    BadRig(String),
    #[error("no sensor selected")]
    NoSensorSelected,
}
