//! Signed distance field derived from an occupancy grid.
//!
//! Per voxel the field stores d_occ − d_empty (distance to the nearest
//! occupied center minus distance to the nearest empty center): positive in
//! free space, negative inside occupancy, zero-crossing at the surface.
//! Values between centers are trilinearly interpolated; queries outside the
//! grid extrapolate by adding the distance to the interpolation domain.

use nalgebra::Vector3;

use super::LidarError;
use crate::grid::{distance_to_empty, unsigned_distance_field, SemanticOccupancyGrid};

#[derive(Debug, Clone)]
pub struct OccupancyField {
    dims: [usize; 3],
    voxel_size: Vector3<f64>,
    origin: Vector3<f64>,
    /// f32 keeps the working set half-sized; centimeter-scale precision is
    /// far below the voxel quantization this field carries anyway.
    sdf: Vec<f32>,
}

impl OccupancyField {
    pub fn build(grid: &SemanticOccupancyGrid) -> Result<Self, LidarError> {
        use rayon::prelude::*;
        let d_occ = unsigned_distance_field(grid).map_err(|_| LidarError::EmptyGrid)?;
        // A grid with no empty voxel degenerates to sdf == 0 everywhere;
        // every ray then renders no surface and is dropped.
        let sdf: Vec<f32> = match distance_to_empty(grid) {
            Some(d_empty) => d_occ
                .par_iter()
                .zip(d_empty.par_iter())
                .map(|(o, e)| (o - e) as f32)
                .collect(),
            None => vec![0.0; d_occ.len()],
        };
        Ok(Self {
            dims: grid.dims(),
            voxel_size: grid.voxel_size(),
            origin: grid.origin(),
            sdf,
        })
    }

    #[inline]
    fn value(&self, v: [usize; 3]) -> f64 {
        self.sdf[(v[2] * self.dims[1] + v[1]) * self.dims[0] + v[0]] as f64
    }

    /// Signed distance at an arbitrary world point.
    pub fn sdf_at(&self, p: &Vector3<f64>) -> f64 {
        // Interpolation domain spans the voxel centers.
        let mut clamped = *p;
        let mut outside = 0.0f64;
        for a in 0..3 {
            let lo = self.origin[a] + 0.5 * self.voxel_size[a];
            let hi = self.origin[a] + (self.dims[a] as f64 - 0.5) * self.voxel_size[a];
            if clamped[a] < lo {
                outside += (lo - clamped[a]) * (lo - clamped[a]);
                clamped[a] = lo;
            } else if clamped[a] > hi {
                outside += (clamped[a] - hi) * (clamped[a] - hi);
                clamped[a] = hi;
            }
        }
        self.trilinear(&clamped) + outside.sqrt()
    }

    fn trilinear(&self, p: &Vector3<f64>) -> f64 {
        self.trilinear_with_gradient(p).0
    }

    /// Trilinear value plus its exact gradient within the cell.
    fn trilinear_with_gradient(&self, p: &Vector3<f64>) -> (f64, Vector3<f64>) {
        let mut base = [0usize; 3];
        let mut upper = [0usize; 3];
        let mut frac = [0f64; 3];
        for a in 0..3 {
            let g = (p[a] - self.origin[a]) / self.voxel_size[a] - 0.5;
            let g = g.clamp(0.0, (self.dims[a] - 1) as f64);
            let i = (g.floor() as usize).min(self.dims[a] - 1);
            let i1 = (i + 1).min(self.dims[a] - 1);
            base[a] = i;
            upper[a] = i1;
            frac[a] = if i1 == i { 0.0 } else { g - i as f64 };
        }
        let at = |x: usize, y: usize, z: usize| self.value([x, y, z]);
        let c000 = at(base[0], base[1], base[2]);
        let c100 = at(upper[0], base[1], base[2]);
        let c010 = at(base[0], upper[1], base[2]);
        let c110 = at(upper[0], upper[1], base[2]);
        let c001 = at(base[0], base[1], upper[2]);
        let c101 = at(upper[0], base[1], upper[2]);
        let c011 = at(base[0], upper[1], upper[2]);
        let c111 = at(upper[0], upper[1], upper[2]);
        let (fx, fy, fz) = (frac[0], frac[1], frac[2]);

        let c00 = c000 + (c100 - c000) * fx;
        let c10 = c010 + (c110 - c010) * fx;
        let c01 = c001 + (c101 - c001) * fx;
        let c11 = c011 + (c111 - c011) * fx;
        let c0 = c00 + (c10 - c00) * fy;
        let c1 = c01 + (c11 - c01) * fy;
        let value = c0 + (c1 - c0) * fz;

        let gx = ((c100 - c000) * (1.0 - fy) + (c110 - c010) * fy) * (1.0 - fz)
            + ((c101 - c001) * (1.0 - fy) + (c111 - c011) * fy) * fz;
        let gy = (c10 - c00) * (1.0 - fz) + (c11 - c01) * fz;
        let gz = c1 - c0;
        let gradient = Vector3::new(
            gx / self.voxel_size.x,
            gy / self.voxel_size.y,
            gz / self.voxel_size.z,
        );
        (value, gradient)
    }

    /// Signed distance and its gradient; outside the grid the distance term
    /// to the interpolation domain dominates the clamped axes.
    pub fn value_and_gradient(&self, p: &Vector3<f64>) -> (f64, Vector3<f64>) {
        let mut clamped = *p;
        let mut outside2 = 0.0f64;
        let mut clamped_axis = [false; 3];
        for a in 0..3 {
            let lo = self.origin[a] + 0.5 * self.voxel_size[a];
            let hi = self.origin[a] + (self.dims[a] as f64 - 0.5) * self.voxel_size[a];
            if clamped[a] < lo {
                outside2 += (lo - clamped[a]) * (lo - clamped[a]);
                clamped[a] = lo;
                clamped_axis[a] = true;
            } else if clamped[a] > hi {
                outside2 += (clamped[a] - hi) * (clamped[a] - hi);
                clamped[a] = hi;
                clamped_axis[a] = true;
            }
        }
        let (inner, mut gradient) = self.trilinear_with_gradient(&clamped);
        if outside2 == 0.0 {
            return (inner, gradient);
        }
        let dist = outside2.sqrt();
        for a in 0..3 {
            if clamped_axis[a] {
                gradient[a] = (p[a] - clamped[a]) / dist;
            }
        }
        (inner + dist, gradient)
    }

    /// Gradient of the interpolated field.
    pub fn gradient(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.value_and_gradient(p).1
    }

    /// Geometry feature at a sample position: (f, ∇f).
    pub fn geometry_feature(&self, p: &Vector3<f64>) -> [f64; 4] {
        let (f, g) = self.value_and_gradient(p);
        [f, g.x, g.y, g.z]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid_with_block() -> SemanticOccupancyGrid {
        let mut g =
            SemanticOccupancyGrid::empty([12, 12, 12], Vector3::new(0.25, 0.25, 0.25), Vector3::zeros()).unwrap();
        // 4x4x4 occupied block in the middle
        for x in 4..8 {
            for y in 4..8 {
                for z in 4..8 {
                    g.set([x, y, z], 2);
                }
            }
        }
        g
    }

    #[test]
    fn sign_convention() {
        let g = grid_with_block();
        let f = OccupancyField::build(&g).unwrap();
        // deep inside the block
        let inside = g.voxel_to_world_center([5, 5, 5]);
        assert!(f.sdf_at(&inside) < 0.0);
        // far outside
        let outside = g.voxel_to_world_center([0, 0, 0]);
        assert!(f.sdf_at(&outside) > 0.0);
    }

    #[test]
    fn isolated_voxel_distance_scale() {
        let mut g =
            SemanticOccupancyGrid::empty([9, 9, 9], Vector3::new(0.25, 0.25, 0.25), Vector3::zeros()).unwrap();
        g.set([4, 4, 4], 1);
        let f = OccupancyField::build(&g).unwrap();
        let p = g.voxel_to_world_center([5, 4, 4]);
        let v = f.sdf_at(&p);
        // one voxel away from an isolated occupied voxel: ~voxel_size within 25%
        assert!((v - 0.25).abs() <= 0.25 * 0.25, "got {v}");
    }

    #[test]
    fn lipschitz_along_segments() {
        let g = grid_with_block();
        let f = OccupancyField::build(&g).unwrap();
        let o = Vector3::new(0.1, 0.2, 0.3);
        let dir = Vector3::new(0.7, 0.5, 0.2).normalize();
        let step = 0.05;
        let mut last = f.sdf_at(&o);
        for i in 1..60 {
            let v = f.sdf_at(&(o + dir * (i as f64 * step)));
            assert!((v - last).abs() <= step + 0.25 + 1e-9);
            last = v;
        }
    }

    #[test]
    fn continuous_across_grid_boundary() {
        let g = grid_with_block();
        let f = OccupancyField::build(&g).unwrap();
        // straddle the -x face of the interpolation domain
        let lo_x = 0.125;
        let a = f.sdf_at(&Vector3::new(lo_x - 1e-6, 1.0, 1.0));
        let b = f.sdf_at(&Vector3::new(lo_x + 1e-6, 1.0, 1.0));
        assert!((a - b).abs() < 1e-4);
    }

    #[test]
    fn empty_grid_errors() {
        let g = SemanticOccupancyGrid::empty([4, 4, 4], Vector3::new(0.25, 0.25, 0.25), Vector3::zeros()).unwrap();
        assert!(matches!(OccupancyField::build(&g), Err(LidarError::EmptyGrid)));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let g = grid_with_block();
        let f = OccupancyField::build(&g).unwrap();
        let mut rng = crate::rng::SplitMix64::new(3);
        for _ in 0..50 {
            // stay inside one interpolation cell so the finite difference
            // sees the same trilinear patch
            let p = Vector3::new(rng.uniform(0.5, 2.4), rng.uniform(0.5, 2.4), rng.uniform(0.5, 2.4));
            let (_, grad) = f.value_and_gradient(&p);
            let h = 1e-7;
            for a in 0..3 {
                let mut pp = p;
                let mut pm = p;
                pp[a] += h;
                pm[a] -= h;
                let fd = (f.sdf_at(&pp) - f.sdf_at(&pm)) / (2.0 * h);
                assert!((grad[a] - fd).abs() < 1e-5, "axis {a}: {} vs {}", grad[a], fd);
            }
        }
    }

    #[test]
    fn gradient_points_away_from_block() {
        let g = grid_with_block();
        let f = OccupancyField::build(&g).unwrap();
        let center = g.voxel_to_world_center([5, 5, 5]);
        let probe = g.voxel_to_world_center([10, 5, 5]);
        let grad = f.gradient(&probe);
        assert!(grad.dot(&(probe - center)) > 0.0);
    }
}
