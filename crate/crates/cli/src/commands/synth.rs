//! `occuforge synth <scene> --out <dir>`: synthetic scenes with ground
//! truth, plus the rig/camera/manifest files the other commands consume.

use std::path::Path;

use nalgebra::Vector3;
use occuforge_core::geom::{CameraModel, Distortion, PoseJson, RigidTransform};
use occuforge_core::grid::ClassTable;
use occuforge_core::io::{write_pgm8, write_ply_cloud};
use occuforge_core::synth::{box_street_scene, moving_box_clip, wall_scene, MovingBoxParams};

use super::{ensure_dir, write_json};
use crate::config::PipelineConfig;
use crate::error::CliError;
use crate::schemas::{BevEntry, BoxEntry, CamerasFile, FanSpec, FrameEntry, ManifestFile, RigFile, SensorEntry};

pub fn run(scene: &str, out_dir: &Path, config: &PipelineConfig) -> Result<(), CliError> {
    ensure_dir(out_dir)?;
    match scene {
        "wall" => grid_scene(out_dir, config, wall_scene(20.0).grid),
        "box-street" => grid_scene(out_dir, config, box_street_scene().grid),
        "moving-box" => moving_box(out_dir, config),
        other => Err(CliError::Usage(format!(
            "unknown scene \"{other}\" (expected wall, box-street, or moving-box)"
        ))),
    }
}

/// Shared emit path for the grid-only scenes: ground-truth OCCG plus rig,
/// camera, and class-table files so render/lidar can run directly.
fn grid_scene(out_dir: &Path, config: &PipelineConfig, grid: occuforge_core::grid::SemanticOccupancyGrid) -> Result<(), CliError> {
    let occg = out_dir.join("scene.occg");
    let occupied = grid.occupied_count();
    grid.save_occg(&occg).map_err(CliError::compute)?;
    ClassTable::default()
        .save(&out_dir.join("classes.json"))
        .map_err(CliError::compute)?;

    // two-sensor rig: a wide forward fan plus a roof sensor
    let rig = RigFile {
        sensors: vec![
            SensorEntry {
                origin: [0.5, 0.0, 1.8],
                orientation: [1.0, 0.0, 0.0, 0.0],
                max_range: 60.0,
                pattern: None,
                fan: Some(FanSpec {
                    rows: 64,
                    cols: 1024,
                    el_min_deg: -14.0,
                    el_max_deg: 2.0,
                    az_min_deg: -60.0,
                    az_max_deg: 60.0,
                }),
            },
            SensorEntry {
                origin: [0.0, 0.0, 2.2],
                orientation: [1.0, 0.0, 0.0, 0.0],
                max_range: 60.0,
                pattern: None,
                fan: Some(FanSpec {
                    rows: 32,
                    cols: 512,
                    el_min_deg: -20.0,
                    el_max_deg: -3.0,
                    az_min_deg: -180.0,
                    az_max_deg: 180.0,
                }),
            },
        ],
    };
    rig.save(&out_dir.join("rig.json"))?;

    // forward camera: world +x is the optical axis, z up
    let world_to_cam = RigidTransform::new(
        nalgebra::Matrix3::new(0.0, -1.0, 0.0, 0.0, 0.0, -1.0, 1.0, 0.0, 0.0),
        Vector3::new(0.0, 1.2, 0.0),
    )
    .expect("axis permutation is a rotation");
    let camera = CameraModel::new(
        500.0,
        500.0,
        320.0,
        180.0,
        640,
        360,
        Distortion {
            k1: -0.15,
            ..Default::default()
        },
        world_to_cam,
    )
    .expect("camera is valid");
    CamerasFile { cameras: vec![camera] }.save(&out_dir.join("cameras.json"))?;

    config.echo(out_dir)?;
    eprintln!("wrote {} ({occupied} occupied voxels)", occg.display());
    Ok(())
}

fn moving_box(out_dir: &Path, config: &PipelineConfig) -> Result<(), CliError> {
    let params = MovingBoxParams {
        seed: config.seed,
        ..Default::default()
    };
    let mb = moving_box_clip(&params);

    // sweeps
    let mut frame_entries = Vec::new();
    for (i, frame) in mb.clip.frames.iter().enumerate() {
        let rel = format!("sweep_{i}.ply");
        write_ply_cloud(&out_dir.join(&rel), &frame.sweep, config.io.ply_binary).map_err(CliError::compute)?;
        frame_entries.push(FrameEntry {
            timestamp: frame.timestamp,
            ego_pose: PoseJson::from(&frame.ego_pose),
            sweep: rel,
            boxes: frame
                .boxes
                .iter()
                .map(|b| {
                    let pose = b.pose();
                    BoxEntry {
                        center: [b.center.x, b.center.y, b.center.z],
                        quaternion: pose.to_quaternion(),
                        half_extents: [b.half_extents.x, b.half_extents.y, b.half_extents.z],
                        class: b.class_id,
                        track_id: b.track_id.clone(),
                    }
                })
                .collect(),
        });
    }

    // BEV map
    let bev = &mb.clip.bev;
    write_pgm8(&out_dir.join("bev.pgm"), bev.cols, bev.rows, &bev.labels).map_err(CliError::compute)?;

    mb.class_table
        .save(&out_dir.join("classes.json"))
        .map_err(CliError::compute)?;
    let manifest = ManifestFile {
        frames: frame_entries,
        bev: BevEntry {
            image: "bev.pgm".into(),
            cell_size: bev.cell_size,
            origin: bev.origin,
        },
        class_table: Some("classes.json".into()),
    };
    manifest.save(&out_dir.join("manifest.json"))?;

    // ground truth + the curation config that reproduces its frame
    mb.ground_truth
        .save_occg(&out_dir.join("ground_truth.occg"))
        .map_err(CliError::compute)?;
    let mut resolved = config.clone();
    resolved.curation = mb.config.clone();
    resolved.echo(out_dir)?;
    write_json(&out_dir.join("scene.json"), &serde_json::json!({
        "scene": "moving-box",
        "frames": mb.clip.frames.len(),
        "seed": params.seed,
        "ground_truth": "ground_truth.occg",
        "manifest": "manifest.json",
    }))?;
    eprintln!("wrote manifest with {} frames to {}", mb.clip.frames.len(), out_dir.display());
    Ok(())
}
