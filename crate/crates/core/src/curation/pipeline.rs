//! The end-to-end curation pipeline: separate → filter → aggregate →
//! densify → re-pose → voxelize → hybrid label.

use std::collections::BTreeMap;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::{
    aggregate_background, aggregate_object_with_origins, densify, hybrid_label, CurationError, DensifyParams,
    FilterParams, IcpParams, ScenarioClip,
};
use crate::cloud::transform_points;
use crate::grid::{voxelize, SemanticOccupancyGrid};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurationConfig {
    pub filter: FilterParams,
    pub icp: IcpParams,
    pub icp_enabled: bool,
    pub densify: DensifyParams,
    pub dims: [usize; 3],
    pub voxel_size: [f64; 3],
    /// Grid origin. Absolute when set; otherwise the reference ego position
    /// plus `origin_offset`.
    pub origin: Option<[f64; 3]>,
    pub origin_offset: [f64; 3],
    /// Reference frame index; default is the middle frame.
    pub reference_frame: Option<usize>,
    /// Class for occupied voxels not covered by a box or a BEV label.
    pub fallback_class: u8,
    /// Scenario thresholds (m/s), used by scenario filtering.
    pub theta_ego: f64,
    pub theta_other: f64,
}

impl Default for CurationConfig {
    fn default() -> Self {
        Self {
            filter: FilterParams::default(),
            icp: IcpParams::default(),
            icp_enabled: true,
            densify: DensifyParams::default(),
            dims: [400, 400, 32],
            voxel_size: [0.25, 0.25, 0.25],
            origin: None,
            origin_offset: [-50.0, -50.0, -4.0],
            reference_frame: None,
            fallback_class: 8,
            theta_ego: 0.5,
            theta_other: 0.5,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct CurationReport {
    pub frames: usize,
    pub reference_frame: usize,
    pub background_points: usize,
    pub background_densified: usize,
    pub filter_warnings: usize,
    pub tracks: BTreeMap<String, TrackReport>,
    pub voxelized_out_of_bounds: usize,
    pub occupied_voxels: usize,
    pub grid_origin: [f64; 3],
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct TrackReport {
    pub aggregated_points: usize,
    pub densified_points: usize,
    /// Frame whose box pose placed the object into the grid.
    pub placement_frame: usize,
    pub densify_passthrough: bool,
}

/// Run the full curation pipeline on a clip.
pub fn curate(clip: &ScenarioClip, config: &CurationConfig) -> Result<(SemanticOccupancyGrid, CurationReport), CurationError> {
    clip.validate()?;
    let reference = match config.reference_frame {
        Some(i) if i < clip.frames.len() => i,
        Some(i) => {
            return Err(CurationError::BadClip(format!(
                "reference frame {i} out of range ({} frames)",
                clip.frames.len()
            )))
        }
        None => clip.frames.len() / 2,
    };
    let mut report = CurationReport {
        frames: clip.frames.len(),
        reference_frame: reference,
        ..Default::default()
    };

    // Background: filter, transform, refine, densify in the world frame.
    let bg = aggregate_background(clip, &config.filter, &config.icp, config.icp_enabled)?;
    report.background_points = bg.cloud.len();
    report.filter_warnings = bg.filter_warnings;
    let bg_dense = densify(&bg.cloud, Some(&bg.origins), &config.densify);
    report.background_densified = bg_dense.cloud.len();

    // Foreground: aggregate per track in box-local frames, densify, re-pose
    // at the reference frame (nearest frame carrying the track otherwise).
    let mut combined = bg_dense.cloud;
    for track in clip.track_ids() {
        let (local, origins) = aggregate_object_with_origins(clip, &track)?;
        let dense = densify(&local, Some(&origins), &config.densify);
        let placement = placement_frame(clip, &track, reference);
        let b = clip.frames[placement]
            .boxes
            .iter()
            .find(|b| b.track_id == track)
            .expect("placement frame carries the track");
        let world = transform_points(&dense.cloud, &b.pose());
        report.tracks.insert(
            track.clone(),
            TrackReport {
                aggregated_points: local.len(),
                densified_points: dense.cloud.len(),
                placement_frame: placement,
                densify_passthrough: dense.passthrough,
            },
        );
        combined.extend(&world);
    }

    // Voxelize (binary) and hybrid-label at the reference frame.
    let origin = grid_origin(clip, reference, config);
    let voxel_size = Vector3::new(config.voxel_size[0], config.voxel_size[1], config.voxel_size[2]);
    let mut binary = combined;
    binary.labels = None;
    let vox = voxelize(&binary, config.dims, voxel_size, origin)?;
    report.voxelized_out_of_bounds = vox.out_of_bounds;
    let labeled = hybrid_label(&vox.grid, &clip.frames[reference].boxes, &clip.bev, config.fallback_class);
    report.occupied_voxels = labeled.occupied_count();
    report.grid_origin = [origin.x, origin.y, origin.z];
    Ok((labeled, report))
}

/// Frame used to place a densified object into the output grid: the
/// reference frame when the track appears there, else the nearest frame
/// that carries it (earlier frame on ties).
fn placement_frame(clip: &ScenarioClip, track: &str, reference: usize) -> usize {
    let carrying: Vec<usize> = clip
        .frames
        .iter()
        .enumerate()
        .filter_map(|(i, f)| f.boxes.iter().any(|b| b.track_id == track).then_some(i))
        .collect();
    *carrying
        .iter()
        .min_by_key(|&&i| (i.abs_diff(reference), i))
        .expect("track exists in at least one frame")
}

fn grid_origin(clip: &ScenarioClip, reference: usize, config: &CurationConfig) -> Vector3<f64> {
    match config.origin {
        Some(o) => Vector3::new(o[0], o[1], o[2]),
        None => {
            let e = clip.frames[reference].ego_pose.translation;
            Vector3::new(
                e.x + config.origin_offset[0],
                e.y + config.origin_offset[1],
                e.z + config.origin_offset[2],
            )
        }
    }
}
