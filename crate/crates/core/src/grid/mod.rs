//! Dense semantic occupancy grids: voxelization, distance fields, IoU
//! metrics, and the OCCG file format.

mod class_table;
mod dist;
mod iou;
mod occg;

pub use class_table::{ClassDef, ClassTable};
pub use dist::{distance_to_empty, unsigned_distance_field};
pub use iou::{iou_miou, IouReport};

use nalgebra::Vector3;
use thiserror::Error;

use crate::cloud::PointCloud;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("grid dims must all be >= 1, got {0:?}")]
    BadDims([usize; 3]),
    #[error("voxel size components must be positive, got {0:?}")]
    BadVoxelSize([f64; 3]),
    #[error("grid dims mismatch: {0:?} vs {1:?}")]
    DimsMismatch([usize; 3], [usize; 3]),
    #[error("no occupied voxels")]
    NoOccupiedVoxels,
    #[error("occg: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Dense H×W×D grid of semantic class ids. Class 0 means empty.
///
/// Axes: index 0 (H) runs along world x, index 1 (W) along y, index 2 (D)
/// along z. Linear layout is x-fastest: `index = (z·W + y)·H + x`.
/// `origin` is the world position of the min corner of voxel (0,0,0).
#[derive(Debug, Clone, PartialEq)]
pub struct SemanticOccupancyGrid {
    dims: [usize; 3],
    voxel_size: Vector3<f64>,
    origin: Vector3<f64>,
    classes: Vec<u8>,
}

impl SemanticOccupancyGrid {
    pub fn empty(dims: [usize; 3], voxel_size: Vector3<f64>, origin: Vector3<f64>) -> Result<Self, GridError> {
        if dims.iter().any(|&d| d < 1) {
            return Err(GridError::BadDims(dims));
        }
        if !(voxel_size.x > 0.0 && voxel_size.y > 0.0 && voxel_size.z > 0.0) {
            return Err(GridError::BadVoxelSize([voxel_size.x, voxel_size.y, voxel_size.z]));
        }
        Ok(Self {
            classes: vec![0; dims[0] * dims[1] * dims[2]],
            dims,
            voxel_size,
            origin,
        })
    }

    pub fn from_parts(
        dims: [usize; 3],
        voxel_size: Vector3<f64>,
        origin: Vector3<f64>,
        classes: Vec<u8>,
    ) -> Result<Self, GridError> {
        let mut g = Self::empty(dims, voxel_size, origin)?;
        if classes.len() != g.classes.len() {
            return Err(GridError::Format(format!(
                "payload length {} does not match dims {:?}",
                classes.len(),
                dims
            )));
        }
        g.classes = classes;
        Ok(g)
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn voxel_size(&self) -> Vector3<f64> {
        self.voxel_size
    }

    pub fn origin(&self) -> Vector3<f64> {
        self.origin
    }

    pub fn classes(&self) -> &[u8] {
        &self.classes
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    #[inline]
    pub fn linear_index(&self, v: [usize; 3]) -> usize {
        (v[2] * self.dims[1] + v[1]) * self.dims[0] + v[0]
    }

    #[inline]
    pub fn voxel_of_linear(&self, idx: usize) -> [usize; 3] {
        let x = idx % self.dims[0];
        let rest = idx / self.dims[0];
        [x, rest % self.dims[1], rest / self.dims[1]]
    }

    #[inline]
    pub fn get(&self, v: [usize; 3]) -> u8 {
        self.classes[self.linear_index(v)]
    }

    #[inline]
    pub fn set(&mut self, v: [usize; 3], class: u8) {
        let i = self.linear_index(v);
        self.classes[i] = class;
    }

    #[inline]
    pub fn in_bounds(&self, v: [i64; 3]) -> bool {
        (0..3).all(|a| v[a] >= 0 && (v[a] as usize) < self.dims[a])
    }

    /// Voxel containing a world point, or `None` when out of bounds.
    pub fn world_to_voxel(&self, p: &Vector3<f64>) -> Option<[usize; 3]> {
        let mut v = [0usize; 3];
        for a in 0..3 {
            let f = ((p[a] - self.origin[a]) / self.voxel_size[a]).floor();
            if f < 0.0 || f >= self.dims[a] as f64 {
                return None;
            }
            v[a] = f as usize;
        }
        Some(v)
    }

    /// World position of a voxel's center.
    pub fn voxel_to_world_center(&self, v: [usize; 3]) -> Vector3<f64> {
        Vector3::new(
            self.origin.x + (v[0] as f64 + 0.5) * self.voxel_size.x,
            self.origin.y + (v[1] as f64 + 0.5) * self.voxel_size.y,
            self.origin.z + (v[2] as f64 + 0.5) * self.voxel_size.z,
        )
    }

    /// Class at a world position (0 when outside the grid).
    pub fn class_at(&self, p: &Vector3<f64>) -> u8 {
        self.world_to_voxel(p).map_or(0, |v| self.get(v))
    }

    pub fn occupied_count(&self) -> usize {
        self.classes.iter().filter(|&&c| c != 0).count()
    }

    /// Linear indices of all occupied voxels, ascending.
    pub fn occupied_indices(&self) -> Vec<usize> {
        self.classes
            .iter()
            .enumerate()
            .filter_map(|(i, &c)| (c != 0).then_some(i))
            .collect()
    }
}

/// Result of voxelizing a point cloud.
#[derive(Debug, Clone)]
pub struct VoxelizeResult {
    pub grid: SemanticOccupancyGrid,
    /// Points that fell outside the grid bounds.
    pub out_of_bounds: usize,
}

/// Voxelize a labeled cloud: a voxel is non-empty iff at least one point
/// falls in it; its class is the majority label, ties broken by the smallest
/// class id. Unlabeled clouds mark every hit voxel with class 1.
pub fn voxelize(
    cloud: &PointCloud,
    dims: [usize; 3],
    voxel_size: Vector3<f64>,
    origin: Vector3<f64>,
) -> Result<VoxelizeResult, GridError> {
    let mut grid = SemanticOccupancyGrid::empty(dims, voxel_size, origin)?;
    let mut hits: Vec<(u32, u8)> = Vec::with_capacity(cloud.len());
    let mut out_of_bounds = 0usize;
    for (i, p) in cloud.points.iter().enumerate() {
        match grid.world_to_voxel(p) {
            Some(v) => {
                let label = cloud.labels.as_ref().map_or(1, |l| l[i]);
                hits.push((grid.linear_index(v) as u32, label));
            }
            None => out_of_bounds += 1,
        }
    }
    // Sorting by (voxel, class) makes the majority + smallest-id-tie rule
    // independent of input point order.
    hits.sort_unstable();
    let mut i = 0;
    while i < hits.len() {
        let voxel = hits[i].0;
        let mut best_class = hits[i].1;
        let mut best_count = 0usize;
        let mut j = i;
        while j < hits.len() && hits[j].0 == voxel {
            let class = hits[j].1;
            let mut count = 0;
            while j < hits.len() && hits[j].0 == voxel && hits[j].1 == class {
                count += 1;
                j += 1;
            }
            if count > best_count {
                best_count = count;
                best_class = class;
            }
        }
        grid.classes[voxel as usize] = best_class;
        i = j;
    }
    Ok(VoxelizeResult { grid, out_of_bounds })
}
