use nalgebra::{Matrix2, Matrix2x3, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use super::{GeomError, RigidTransform};

/// Default near-plane: camera-frame points with z at or below this are
/// reported as behind the camera.
pub const Z_NEAR: f64 = 1e-4;

/// Brown-Conrady distortion coefficients. All zero = pure pinhole.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Distortion {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub p1: f64,
    pub p2: f64,
}

impl Distortion {
    pub fn is_zero(&self) -> bool {
        self.k1 == 0.0 && self.k2 == 0.0 && self.k3 == 0.0 && self.p1 == 0.0 && self.p2 == 0.0
    }

    /// Map normalized image coordinates through the distortion model.
    pub fn apply(&self, n: Vector2<f64>) -> Vector2<f64> {
        let (x, y) = (n.x, n.y);
        let r2 = x * x + y * y;
        let radial = 1.0 + r2 * (self.k1 + r2 * (self.k2 + r2 * self.k3));
        Vector2::new(
            x * radial + 2.0 * self.p1 * x * y + self.p2 * (r2 + 2.0 * x * x),
            y * radial + self.p1 * (r2 + 2.0 * y * y) + 2.0 * self.p2 * x * y,
        )
    }

    /// Jacobian of `apply` at `n`.
    pub fn jacobian(&self, n: Vector2<f64>) -> Matrix2<f64> {
        let (x, y) = (n.x, n.y);
        let r2 = x * x + y * y;
        let radial = 1.0 + r2 * (self.k1 + r2 * (self.k2 + r2 * self.k3));
        let dr = self.k1 + 2.0 * self.k2 * r2 + 3.0 * self.k3 * r2 * r2;
        let dxx = radial + 2.0 * x * x * dr + 2.0 * self.p1 * y + 6.0 * self.p2 * x;
        let dxy = 2.0 * x * y * dr + 2.0 * self.p1 * x + 2.0 * self.p2 * y;
        let dyy = radial + 2.0 * y * y * dr + 6.0 * self.p1 * y + 2.0 * self.p2 * x;
        Matrix2::new(dxx, dxy, dxy, dyy)
    }
}

/// A projected point: pixel coordinates plus camera-frame depth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelPoint {
    pub u: f64,
    pub v: f64,
    pub depth: f64,
}

/// Pinhole camera with Brown-Conrady distortion. `pose` maps world → camera.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraModel {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
    #[serde(default)]
    pub distortion: Distortion,
    pub pose: RigidTransform,
}

impl CameraModel {
    pub fn new(
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        width: u32,
        height: u32,
        distortion: Distortion,
        pose: RigidTransform,
    ) -> Result<Self, GeomError> {
        if !(fx > 0.0 && fy > 0.0) {
            return Err(GeomError::BadIntrinsics(format!("fx/fy must be positive, got {fx}/{fy}")));
        }
        if width < 1 || height < 1 {
            return Err(GeomError::BadIntrinsics(format!("image size must be >= 1, got {width}x{height}")));
        }
        Ok(Self {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
            distortion,
            pose,
        })
    }

    /// Project a world point. `None` when the point is behind the near plane.
    pub fn project(&self, x_world: &Vector3<f64>) -> Option<PixelPoint> {
        self.project_camera_frame(&self.pose.apply(x_world))
    }

    /// Project a camera-frame point.
    pub fn project_camera_frame(&self, x_cam: &Vector3<f64>) -> Option<PixelPoint> {
        if x_cam.z <= Z_NEAR {
            return None;
        }
        let n = Vector2::new(x_cam.x / x_cam.z, x_cam.y / x_cam.z);
        let d = self.distortion.apply(n);
        Some(PixelPoint {
            u: self.fx * d.x + self.cx,
            v: self.fy * d.y + self.cy,
            depth: x_cam.z,
        })
    }

    /// Jacobian of the full projection (perspective + distortion + intrinsics)
    /// with respect to the camera-frame point, evaluated at `x_cam`.
    pub fn projection_jacobian(&self, x_cam: &Vector3<f64>) -> Matrix2x3<f64> {
        let z = x_cam.z;
        let n = Vector2::new(x_cam.x / z, x_cam.y / z);
        let persp = Matrix2x3::new(1.0 / z, 0.0, -x_cam.x / (z * z), 0.0, 1.0 / z, -x_cam.y / (z * z));
        let dist = self.distortion.jacobian(n);
        let focal = Matrix2::new(self.fx, 0.0, 0.0, self.fy);
        focal * dist * persp
    }
}
