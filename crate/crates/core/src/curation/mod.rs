//! The occupancy curation pipeline: statistical filtering, ICP registration,
//! separate foreground/background aggregation, TSDF densification, hybrid
//! semantic labeling, and spatio-temporal scenario classification.

mod aggregate;
mod densify;
mod filter;
mod icp;
mod label;
mod pipeline;
mod scenario;
mod separate;

pub use aggregate::{aggregate_background, aggregate_object, aggregate_object_with_origins, AggregatedBackground};
pub use densify::{densify, DensifyOutcome, DensifyParams};
pub use filter::{statistical_filter, statistical_filter_with, FilterMode, FilterOutcome, FilterParams};
pub use icp::{icp_register, voxel_downsample, IcpParams, IcpResult};
pub use label::hybrid_label;
pub use pipeline::{curate, CurationConfig, CurationReport};
pub use scenario::{classify_scenario, ScenarioKind};
pub use separate::{separate, Separated};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cloud::PointCloud;
use crate::geom::{OrientedBox, RigidTransform};

#[derive(Debug, Error)]
pub enum CurationError {
    #[error("point cloud too small: {got} points, need {need}")]
    TooFewPoints { got: usize, need: usize },
    #[error("registration diverged at iteration {iteration}: no correspondences")]
    RegistrationDiverged { iteration: usize },
    #[error("unknown track id {0}")]
    UnknownTrack(String),
    #[error("cannot estimate speed from a single frame")]
    SingleFrame,
    #[error("clip invalid: {0}")]
    BadClip(String),
    #[error("{stage} failed at frame {frame}: {source}")]
    Stage {
        stage: &'static str,
        frame: usize,
        #[source]
        source: Box<CurationError>,
    },
    #[error(transparent)]
    Grid(#[from] crate::grid::GridError),
}

/// One frame of a scenario clip. The sweep is in the ego frame; boxes are in
/// the world frame.
#[derive(Debug, Clone)]
pub struct Frame {
    pub timestamp: f64,
    /// Ego → world.
    pub ego_pose: RigidTransform,
    pub sweep: PointCloud,
    pub boxes: Vec<OrientedBox>,
}

/// An ordered multi-frame clip plus its BEV background-label map.
#[derive(Debug, Clone)]
pub struct ScenarioClip {
    pub frames: Vec<Frame>,
    pub bev: BevMap,
}

impl ScenarioClip {
    pub fn validate(&self) -> Result<(), CurationError> {
        if self.frames.is_empty() {
            return Err(CurationError::BadClip("clip has no frames".into()));
        }
        for w in self.frames.windows(2) {
            if w[1].timestamp <= w[0].timestamp {
                return Err(CurationError::BadClip(format!(
                    "timestamps not strictly increasing: {} then {}",
                    w[0].timestamp, w[1].timestamp
                )));
            }
        }
        Ok(())
    }

    /// All track ids seen in the clip, sorted.
    pub fn track_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self
            .frames
            .iter()
            .flat_map(|f| f.boxes.iter().map(|b| b.track_id.clone()))
            .collect();
        ids.sort();
        ids.dedup();
        ids
    }
}

/// Bird's-eye-view map of background class labels.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BevMap {
    pub rows: usize,
    pub cols: usize,
    pub cell_size: f64,
    /// World (x, y) of the min corner of cell (0, 0).
    pub origin: [f64; 2],
    /// Row-major rows × cols; rows bin y, columns bin x.
    pub labels: Vec<u8>,
}

impl BevMap {
    /// Label at a world position, `None` outside the map extent.
    pub fn label_at(&self, x: f64, y: f64) -> Option<u8> {
        let col = ((x - self.origin[0]) / self.cell_size).floor();
        let row = ((y - self.origin[1]) / self.cell_size).floor();
        if col < 0.0 || row < 0.0 || col >= self.cols as f64 || row >= self.rows as f64 {
            return None;
        }
        Some(self.labels[row as usize * self.cols + col as usize])
    }

    pub fn uniform(rows: usize, cols: usize, cell_size: f64, origin: [f64; 2], label: u8) -> Self {
        Self {
            rows,
            cols,
            cell_size,
            origin,
            labels: vec![label; rows * cols],
        }
    }
}
