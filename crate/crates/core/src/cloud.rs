//! Unordered point clouds with optional intensity and semantic labels.

use nalgebra::Vector3;

use crate::geom::{OrientedBox, RigidTransform};

/// A point cloud. The optional channels, when present, run parallel to
/// `points` with identical length.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointCloud {
    pub points: Vec<Vector3<f64>>,
    pub intensity: Option<Vec<f32>>,
    pub labels: Option<Vec<u8>>,
}

impl PointCloud {
    pub fn from_points(points: Vec<Vector3<f64>>) -> Self {
        Self {
            points,
            intensity: None,
            labels: None,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Keep the points at `indices` (with their attributes), in order.
    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            points: indices.iter().map(|&i| self.points[i]).collect(),
            intensity: self.intensity.as_ref().map(|v| indices.iter().map(|&i| v[i]).collect()),
            labels: self.labels.as_ref().map(|v| indices.iter().map(|&i| v[i]).collect()),
        }
    }

    /// Append `other`, carrying attribute channels through. A channel present
    /// on only one side is padded with zeros on the other.
    pub fn extend(&mut self, other: &Self) {
        let n_self = self.len();
        let n_other = other.len();
        self.points.extend_from_slice(&other.points);
        merge_channel(&mut self.intensity, &other.intensity, n_self, n_other, 0.0f32);
        merge_channel(&mut self.labels, &other.labels, n_self, n_other, 0u8);
    }
}

fn merge_channel<T: Copy>(dst: &mut Option<Vec<T>>, src: &Option<Vec<T>>, n_dst: usize, n_src: usize, fill: T) {
    match (dst.as_mut(), src) {
        (None, None) => {}
        (Some(d), Some(s)) => d.extend_from_slice(s),
        (Some(d), None) => d.extend(std::iter::repeat(fill).take(n_src)),
        (None, Some(s)) => {
            let mut v = vec![fill; n_dst];
            v.extend_from_slice(s);
            *dst = Some(v);
        }
    }
}

/// Apply a rigid transform to every point; attributes carry through unchanged.
pub fn transform_points(cloud: &PointCloud, t: &RigidTransform) -> PointCloud {
    PointCloud {
        points: cloud.points.iter().map(|p| t.apply(p)).collect(),
        intensity: cloud.intensity.clone(),
        labels: cloud.labels.clone(),
    }
}

/// Express world-frame points in a box's local frame:
/// p_local = R_objᵀ·(p_world − c_obj).
pub fn to_box_frame(cloud: &PointCloud, b: &OrientedBox) -> PointCloud {
    PointCloud {
        points: cloud.points.iter().map(|p| b.to_local(p)).collect(),
        intensity: cloud.intensity.clone(),
        labels: cloud.labels.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Matrix3;

    fn sample_cloud() -> PointCloud {
        PointCloud {
            points: vec![Vector3::new(0.0, 0.0, 0.0), Vector3::new(1.0, 0.0, 0.0), Vector3::new(0.0, 2.0, 1.0)],
            intensity: Some(vec![0.1, 0.5, 0.9]),
            labels: Some(vec![1, 2, 3]),
        }
    }

    #[test]
    fn identity_transform_is_noop() {
        let c = sample_cloud();
        assert_eq!(transform_points(&c, &RigidTransform::identity()), c);
    }

    #[test]
    fn pure_translation() {
        let c = PointCloud::from_points(vec![Vector3::zeros()]);
        let t = RigidTransform::from_translation(Vector3::new(1.0, 0.0, 0.0));
        assert_eq!(transform_points(&c, &t).points[0], Vector3::new(1.0, 0.0, 0.0));
    }

    #[test]
    fn rz90_spins_points() {
        let c = PointCloud::from_points(vec![Vector3::new(1.0, 0.0, 0.0)]);
        let t = RigidTransform::rotation_z(std::f64::consts::FRAC_PI_2);
        assert!((transform_points(&c, &t).points[0] - Vector3::new(0.0, 1.0, 0.0)).norm() < 1e-9);
    }

    #[test]
    fn group_action_composition() {
        let c = sample_cloud();
        let t1 = RigidTransform::rotation_z(0.3).compose(&RigidTransform::from_translation(Vector3::new(1.0, 2.0, 3.0)));
        let t2 = RigidTransform::rotation_z(-1.1).compose(&RigidTransform::from_translation(Vector3::new(-2.0, 0.0, 1.0)));
        let a = transform_points(&transform_points(&c, &t1), &t2);
        let b = transform_points(&c, &t2.compose(&t1));
        for (pa, pb) in a.points.iter().zip(&b.points) {
            assert!((pa - pb).norm() < 1e-9);
        }
    }

    #[test]
    fn box_frame_roundtrip() {
        let b = OrientedBox::new(
            Vector3::new(2.0, 0.0, 0.0),
            Matrix3::identity(),
            Vector3::new(1.0, 1.0, 1.0),
            0,
            "t",
        )
        .unwrap();
        let c = PointCloud::from_points(vec![Vector3::new(3.0, 0.0, 0.0), b.center]);
        let local = to_box_frame(&c, &b);
        assert!((local.points[0] - Vector3::new(1.0, 0.0, 0.0)).norm() < 1e-12);
        assert!(local.points[1].norm() < 1e-12);
        let back = transform_points(&local, &b.pose());
        for (pa, pb) in back.points.iter().zip(&c.points) {
            assert!((pa - pb).norm() < 1e-9);
        }
    }

    #[test]
    fn empty_in_empty_out() {
        let c = PointCloud::default();
        assert!(transform_points(&c, &RigidTransform::rotation_z(1.0)).is_empty());
    }

    #[test]
    fn extend_pads_missing_channels() {
        let mut a = PointCloud::from_points(vec![Vector3::zeros()]);
        let b = sample_cloud();
        a.extend(&b);
        assert_eq!(a.len(), 4);
        assert_eq!(a.intensity.as_ref().unwrap()[0], 0.0);
        assert_eq!(a.labels.as_ref().unwrap()[1], 1);
    }
}
