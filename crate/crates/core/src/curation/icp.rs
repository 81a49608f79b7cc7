//! Point-to-point ICP with voxel downsampling and an adaptive
//! correspondence radius, solved in closed form per iteration.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::CurationError;
use crate::cloud::PointCloud;
use crate::geom::RigidTransform;
use crate::kdtree::KdTree;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IcpParams {
    /// Downsample cell (meters); 0 disables downsampling.
    pub downsample: f64,
    pub max_iterations: usize,
    /// Stop when rotation angle + translation of the update fall below this.
    pub convergence: f64,
    pub radius_start: f64,
    pub radius_shrink: f64,
    pub radius_floor: f64,
}

impl Default for IcpParams {
    fn default() -> Self {
        Self {
            downsample: 0.5,
            max_iterations: 50,
            convergence: 1e-4,
            radius_start: 2.0,
            radius_shrink: 0.9,
            radius_floor: 0.3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct IcpResult {
    /// Refinement composed with the initial guess (maps source → target).
    pub transform: RigidTransform,
    /// RMS correspondence distance at the final pose.
    pub rmse: f64,
    pub iterations: usize,
}

/// Centroid-per-cell voxel downsampling. Output order follows the sorted
/// cell keys, so it is independent of input point order up to summation
/// within a cell.
pub fn voxel_downsample(points: &[Vector3<f64>], cell: f64) -> Vec<Vector3<f64>> {
    if cell <= 0.0 || points.is_empty() {
        return points.to_vec();
    }
    let key = |p: &Vector3<f64>| {
        (
            (p.x / cell).floor() as i64,
            (p.y / cell).floor() as i64,
            (p.z / cell).floor() as i64,
        )
    };
    let mut keyed: Vec<((i64, i64, i64), usize)> = points.iter().map(|p| (key(p), 0)).collect();
    for (i, k) in keyed.iter_mut().enumerate() {
        k.1 = i;
    }
    keyed.sort();
    let mut out = Vec::new();
    let mut i = 0;
    while i < keyed.len() {
        let cell_key = keyed[i].0;
        let mut sum = Vector3::zeros();
        let mut count = 0usize;
        while i < keyed.len() && keyed[i].0 == cell_key {
            sum += points[keyed[i].1];
            count += 1;
            i += 1;
        }
        out.push(sum / count as f64);
    }
    out
}

/// Closed-form rigid fit from paired points via the cross-covariance SVD.
fn kabsch(source: &[Vector3<f64>], target: &[Vector3<f64>]) -> RigidTransform {
    let n = source.len() as f64;
    let s_mean = source.iter().sum::<Vector3<f64>>() / n;
    let t_mean = target.iter().sum::<Vector3<f64>>() / n;
    let mut h = Matrix3::zeros();
    for (s, t) in source.iter().zip(target) {
        h += (s - s_mean) * (t - t_mean).transpose();
    }
    let svd = h.svd(true, true);
    let u = svd.u.unwrap();
    let v = svd.v_t.unwrap().transpose();
    let d = (v * u.transpose()).determinant();
    let fix = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, d.signum()));
    let rotation = v * fix * u.transpose();
    RigidTransform {
        rotation,
        translation: t_mean - rotation * s_mean,
    }
}

pub fn icp_register(
    source: &PointCloud,
    target: &PointCloud,
    init: &RigidTransform,
    params: &IcpParams,
) -> Result<IcpResult, CurationError> {
    for cloud in [source, target] {
        if cloud.len() < 10 {
            return Err(CurationError::TooFewPoints {
                got: cloud.len(),
                need: 10,
            });
        }
    }
    let src = voxel_downsample(&source.points, params.downsample);
    let tgt = voxel_downsample(&target.points, params.downsample);
    let tree = KdTree::build(&tgt);

    let mut transform = *init;
    let mut radius = params.radius_start;
    let mut iterations = 0;
    let mut moved: Vec<Vector3<f64>> = Vec::with_capacity(src.len());
    for iter in 0..params.max_iterations {
        iterations = iter + 1;
        moved.clear();
        moved.extend(src.iter().map(|p| transform.apply(p)));
        let mut pairs_src = Vec::new();
        let mut pairs_tgt = Vec::new();
        for p in &moved {
            if let Some((j, _)) = tree.nearest_within(p, radius) {
                pairs_src.push(*p);
                pairs_tgt.push(tgt[j]);
            }
        }
        if pairs_src.is_empty() {
            return Err(CurationError::RegistrationDiverged { iteration: iter });
        }
        let update = kabsch(&pairs_src, &pairs_tgt);
        transform = update.compose(&transform);
        let (angle, dist) = RigidTransform::identity().delta(&update);
        radius = (radius * params.radius_shrink).max(params.radius_floor);
        if angle + dist < params.convergence {
            break;
        }
    }

    // RMSE over correspondences at the final pose.
    let mut sq_sum = 0.0;
    let mut count = 0usize;
    for p in &src {
        let q = transform.apply(p);
        if let Some((j, _)) = tree.nearest_within(&q, radius.max(params.radius_floor)) {
            sq_sum += (q - tgt[j]).norm_squared();
            count += 1;
        }
    }
    let rmse = if count > 0 { (sq_sum / count as f64).sqrt() } else { f64::INFINITY };
    Ok(IcpResult {
        transform,
        rmse,
        iterations,
    })
}
