use nalgebra::{Matrix3, Quaternion, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use super::GeomError;

const ROTATION_TOL: f64 = 1e-9;

/// Proper rigid motion: p' = R·p + t.
///
/// Rotations are stored as matrices for fast application and serialized as
/// normalized quaternions (w, x, y, z) for compact, exactly round-tripping IO.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl RigidTransform {
    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    /// Build from parts, checking R·Rᵀ = I and det R = +1 within 1e-9.
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self, GeomError> {
        let dev = (rotation * rotation.transpose() - Matrix3::identity()).norm();
        let det_dev = (rotation.determinant() - 1.0).abs();
        if dev > ROTATION_TOL || det_dev > ROTATION_TOL {
            return Err(GeomError::NotARotation(dev.max(det_dev)));
        }
        Ok(Self { rotation, translation })
    }

    pub fn from_translation(translation: Vector3<f64>) -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation,
        }
    }

    /// Rotation about +z by `angle` radians (counter-clockwise).
    pub fn rotation_z(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self {
            rotation: Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0),
            translation: Vector3::zeros(),
        }
    }

    pub fn from_quaternion(wxyz: [f64; 4], translation: Vector3<f64>) -> Self {
        let q = UnitQuaternion::from_quaternion(Quaternion::new(wxyz[0], wxyz[1], wxyz[2], wxyz[3]));
        Self {
            rotation: q.to_rotation_matrix().into_inner(),
            translation,
        }
    }

    /// Normalized quaternion (w, x, y, z) with non-negative w.
    pub fn to_quaternion(&self) -> [f64; 4] {
        let q = UnitQuaternion::from_matrix(&self.rotation);
        let q = if q.w < 0.0 { -q.into_inner() } else { q.into_inner() };
        [q.w, q.i, q.j, q.k]
    }

    pub fn apply(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    /// Rotate a direction vector (no translation).
    pub fn apply_dir(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * v
    }

    /// `self ∘ other`: apply `other` first, then `self`.
    pub fn compose(&self, other: &Self) -> Self {
        Self {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        Self {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    /// Rotation angle (radians) of the relative transform `self⁻¹ ∘ other`
    /// plus translation distance; a scalar measure of how far apart two
    /// transforms are.
    pub fn delta(&self, other: &Self) -> (f64, f64) {
        let rel = self.inverse().compose(other);
        let trace = rel.rotation.trace();
        let angle = ((trace - 1.0) / 2.0).clamp(-1.0, 1.0).acos();
        (angle, rel.translation.norm())
    }
}

/// Wire form: quaternion + translation.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoseJson {
    /// (w, x, y, z), normalized.
    pub quaternion: [f64; 4],
    pub translation: [f64; 3],
}

impl From<&RigidTransform> for PoseJson {
    fn from(t: &RigidTransform) -> Self {
        Self {
            quaternion: t.to_quaternion(),
            translation: [t.translation.x, t.translation.y, t.translation.z],
        }
    }
}

impl From<&PoseJson> for RigidTransform {
    fn from(p: &PoseJson) -> Self {
        RigidTransform::from_quaternion(p.quaternion, Vector3::new(p.translation[0], p.translation[1], p.translation[2]))
    }
}

impl Serialize for RigidTransform {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        PoseJson::from(self).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for RigidTransform {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let p = PoseJson::deserialize(deserializer)?;
        Ok(RigidTransform::from(&p))
    }
}
