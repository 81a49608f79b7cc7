//! Surface densification by TSDF fusion and zero-crossing extraction.
//!
//! Each input point splats a truncated signed-distance update into a small
//! neighborhood along its estimated normal; sensor origins, when available,
//! orient the normals and carve free space along the rays. The densified
//! output is the centers of voxels straddling the zero crossing, which fills
//! sampling holes up to the truncation width and sits on the input surface.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::kdtree::KdTree;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DensifyParams {
    /// Fusion grid resolution (meters); typically half the occupancy voxel.
    pub tsdf_voxel: f64,
    /// Truncation band in fusion voxels.
    pub truncation_voxels: f64,
    /// Below this many points the input is passed through unchanged.
    pub min_points: usize,
    /// Neighbors for normal estimation.
    pub normal_k: usize,
    /// Carve free space along sensor rays when origins are available.
    pub carve: bool,
}

impl Default for DensifyParams {
    fn default() -> Self {
        Self {
            tsdf_voxel: 0.125,
            truncation_voxels: 3.0,
            min_points: 50,
            normal_k: 12,
            carve: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DensifyOutcome {
    pub cloud: PointCloud,
    /// Input was too small and passed through unchanged.
    pub passthrough: bool,
}

struct Fusion {
    dims: [usize; 3],
    origin: Vector3<f64>,
    voxel: f64,
    value: Vec<f32>,
    weight: Vec<f32>,
}

impl Fusion {
    #[inline]
    fn index(&self, v: [usize; 3]) -> usize {
        (v[2] * self.dims[1] + v[1]) * self.dims[0] + v[0]
    }

    #[inline]
    fn voxel_of(&self, p: &Vector3<f64>) -> Option<[usize; 3]> {
        let mut v = [0usize; 3];
        for a in 0..3 {
            let f = ((p[a] - self.origin[a]) / self.voxel).floor();
            if f < 0.0 || f >= self.dims[a] as f64 {
                return None;
            }
            v[a] = f as usize;
        }
        Some(v)
    }

    fn center(&self, v: [usize; 3]) -> Vector3<f64> {
        Vector3::new(
            self.origin.x + (v[0] as f64 + 0.5) * self.voxel,
            self.origin.y + (v[1] as f64 + 0.5) * self.voxel,
            self.origin.z + (v[2] as f64 + 0.5) * self.voxel,
        )
    }

    fn update(&mut self, v: [usize; 3], value: f64, weight: f64) {
        let i = self.index(v);
        let w_old = self.weight[i] as f64;
        let w_new = w_old + weight;
        self.value[i] = (((self.value[i] as f64) * w_old + value * weight) / w_new) as f32;
        self.weight[i] = w_new as f32;
    }
}

/// Estimate unit normals from local PCA; oriented toward the per-point
/// sensor origin when given, toward +z otherwise.
fn estimate_normals(points: &[Vector3<f64>], origins: Option<&[Vector3<f64>]>, k: usize) -> Vec<Vector3<f64>> {
    let tree = KdTree::build(points);
    let k = k.min(points.len() - 1).max(3);
    points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let nn = tree.k_nearest(p, k, Some(i));
            let mut mean = *p;
            for &(j, _) in &nn {
                mean += points[j];
            }
            mean /= (nn.len() + 1) as f64;
            let mut cov = Matrix3::zeros();
            let d0 = p - mean;
            cov += d0 * d0.transpose();
            for &(j, _) in &nn {
                let d = points[j] - mean;
                cov += d * d.transpose();
            }
            let eig = nalgebra::SymmetricEigen::new(cov);
            let mut min_idx = 0;
            for a in 1..3 {
                if eig.eigenvalues[a] < eig.eigenvalues[min_idx] {
                    min_idx = a;
                }
            }
            let mut n: Vector3<f64> = eig.eigenvectors.column(min_idx).into();
            let toward = match origins {
                Some(o) => o[i] - p,
                None => Vector3::new(0.0, 0.0, 1.0),
            };
            if n.dot(&toward) < 0.0 {
                n = -n;
            }
            n
        })
        .collect()
}

/// Densify a point cloud. `origins`, when present, is the per-point sensor
/// position (same frame as the points) used for normal orientation and
/// free-space carving.
pub fn densify(points: &PointCloud, origins: Option<&[Vector3<f64>]>, params: &DensifyParams) -> DensifyOutcome {
    if points.len() < params.min_points {
        return DensifyOutcome {
            cloud: points.clone(),
            passthrough: true,
        };
    }
    if let Some(o) = origins {
        assert_eq!(o.len(), points.len(), "origins must align with points");
    }
    let voxel = params.tsdf_voxel;
    let trunc = params.truncation_voxels * voxel;

    // Fusion grid over the padded bounding box.
    let mut lo = points.points[0];
    let mut hi = points.points[0];
    for p in &points.points {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    lo -= Vector3::repeat(trunc + voxel);
    hi += Vector3::repeat(trunc + voxel);
    let dims = [
        ((hi.x - lo.x) / voxel).ceil() as usize + 1,
        ((hi.y - lo.y) / voxel).ceil() as usize + 1,
        ((hi.z - lo.z) / voxel).ceil() as usize + 1,
    ];
    let n = dims[0] * dims[1] * dims[2];
    let mut fusion = Fusion {
        dims,
        origin: lo,
        voxel,
        value: vec![0.0; n],
        weight: vec![0.0; n],
    };

    let normals = estimate_normals(&points.points, origins, params.normal_k);

    // Splat pass: signed distance to the tangent plane within the truncation
    // ball around each point.
    let reach = params.truncation_voxels.ceil() as i64;
    for (p, normal) in points.points.iter().zip(&normals) {
        let Some(center_voxel) = fusion.voxel_of(p) else { continue };
        for dz in -reach..=reach {
            for dy in -reach..=reach {
                for dx in -reach..=reach {
                    let v = [
                        center_voxel[0] as i64 + dx,
                        center_voxel[1] as i64 + dy,
                        center_voxel[2] as i64 + dz,
                    ];
                    if v.iter().zip(&fusion.dims).any(|(&c, &d)| c < 0 || c >= d as i64) {
                        continue;
                    }
                    let v = [v[0] as usize, v[1] as usize, v[2] as usize];
                    let offset = fusion.center(v) - p;
                    let along = offset.dot(normal);
                    if along.abs() > trunc {
                        continue;
                    }
                    let lateral = (offset - normal * along).norm();
                    if lateral > trunc {
                        continue;
                    }
                    fusion.update(v, along, 1.0);
                }
            }
        }
    }

    // Carving pass: free space along the sensor rays, stopping short of the
    // truncation band so it cannot corrupt the surface.
    if params.carve {
        if let Some(origins) = origins {
            let step = 0.5 * voxel;
            for (p, o) in points.points.iter().zip(origins) {
                let to_point = p - o;
                let dist = to_point.norm();
                if dist <= trunc + step {
                    continue;
                }
                let dir = to_point / dist;
                let mut t = step;
                let t_end = dist - trunc;
                while t < t_end {
                    if let Some(v) = fusion.voxel_of(&(o + dir * t)) {
                        fusion.update(v, trunc, 0.1);
                    }
                    t += step;
                }
            }
        }
    }

    // Zero-crossing extraction: inside voxels with an observed outside
    // face-neighbor.
    let mut out = Vec::new();
    for z in 0..dims[2] {
        for y in 0..dims[1] {
            for x in 0..dims[0] {
                let i = fusion.index([x, y, z]);
                if fusion.weight[i] == 0.0 || fusion.value[i] > 0.0 {
                    continue;
                }
                let mut crossing = false;
                for (dx, dy, dz) in [(1i64, 0i64, 0i64), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1)] {
                    let (nx, ny, nz) = (x as i64 + dx, y as i64 + dy, z as i64 + dz);
                    if nx < 0 || ny < 0 || nz < 0 || nx >= dims[0] as i64 || ny >= dims[1] as i64 || nz >= dims[2] as i64 {
                        continue;
                    }
                    let j = fusion.index([nx as usize, ny as usize, nz as usize]);
                    if fusion.weight[j] > 0.0 && fusion.value[j] > 0.0 {
                        crossing = true;
                        break;
                    }
                }
                if crossing {
                    out.push(fusion.center([x, y, z]));
                }
            }
        }
    }
    DensifyOutcome {
        cloud: PointCloud::from_points(out),
        passthrough: false,
    }
}
