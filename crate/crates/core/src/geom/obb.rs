use nalgebra::{Matrix3, Vector3};

use super::{GeomError, RigidTransform};

/// Oriented bounding box with a semantic class and a track identity.
#[derive(Debug, Clone, PartialEq)]
pub struct OrientedBox {
    pub center: Vector3<f64>,
    pub rotation: Matrix3<f64>,
    pub half_extents: Vector3<f64>,
    pub class_id: u8,
    pub track_id: String,
}

impl OrientedBox {
    pub fn new(
        center: Vector3<f64>,
        rotation: Matrix3<f64>,
        half_extents: Vector3<f64>,
        class_id: u8,
        track_id: impl Into<String>,
    ) -> Result<Self, GeomError> {
        if !(half_extents.x > 0.0 && half_extents.y > 0.0 && half_extents.z > 0.0) {
            return Err(GeomError::BadHalfExtents([half_extents.x, half_extents.y, half_extents.z]));
        }
        // Reuse the rotation validity check.
        RigidTransform::new(rotation, center)?;
        Ok(Self {
            center,
            rotation,
            half_extents,
            class_id,
            track_id: track_id.into(),
        })
    }

    /// World → box-local: p_local = Rᵀ·(p − c).
    pub fn to_local(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation.transpose() * (p - self.center)
    }

    /// Box-local → world.
    pub fn to_world(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.center
    }

    /// Inclusive containment test.
    pub fn contains(&self, p: &Vector3<f64>) -> bool {
        let l = self.to_local(p);
        l.x.abs() <= self.half_extents.x && l.y.abs() <= self.half_extents.y && l.z.abs() <= self.half_extents.z
    }

    /// The box pose as a rigid transform (local → world).
    pub fn pose(&self) -> RigidTransform {
        RigidTransform {
            rotation: self.rotation,
            translation: self.center,
        }
    }

    /// Signed distance to the box surface (negative inside).
    pub fn signed_distance(&self, p: &Vector3<f64>) -> f64 {
        let l = self.to_local(p);
        let q = Vector3::new(
            l.x.abs() - self.half_extents.x,
            l.y.abs() - self.half_extents.y,
            l.z.abs() - self.half_extents.z,
        );
        let outside = Vector3::new(q.x.max(0.0), q.y.max(0.0), q.z.max(0.0)).norm();
        let inside = q.x.max(q.y).max(q.z).min(0.0);
        outside + inside
    }
}
