//! `occuforge lidar <occ> <rig> --out <dir> [--sensors 0,1]`

use std::path::Path;

use occuforge_core::geom::RigidTransform;
use occuforge_core::grid::SemanticOccupancyGrid;
use occuforge_core::io::{write_ply, Column};
use occuforge_core::lidar::{simulate, smoothness_loss, write_rmap};
use serde::Serialize;

use super::{ensure_dir, write_json};
use crate::commands::render::load_sidecar_table;
use crate::config::PipelineConfig;
use crate::error::CliError;
use crate::schemas::{file_digest, RigFile};

#[derive(Serialize)]
struct LidarReport {
    occ: String,
    occ_digest: String,
    sensors: Vec<usize>,
    seed: u64,
    rays: usize,
    returns: usize,
    dropped_by_prior: usize,
    dropped_by_render: usize,
    smoothness: f64,
    smoothness_pairs: usize,
    ply: String,
    rmap: String,
}

pub fn parse_sensor_list(arg: Option<&str>, n_sensors: usize) -> Result<Vec<usize>, CliError> {
    let list: Vec<usize> = match arg {
        None => (0..n_sensors).collect(),
        Some(s) => s
            .split(',')
            .map(|tok| {
                tok.trim()
                    .parse::<usize>()
                    .map_err(|_| CliError::Usage(format!("bad sensor index \"{tok}\"")))
            })
            .collect::<Result<_, _>>()?,
    };
    for &i in &list {
        if i >= n_sensors {
            return Err(CliError::Usage(format!("sensor index {i} out of range (rig has {n_sensors})")));
        }
    }
    if list.is_empty() {
        return Err(CliError::Usage("no sensor selected".into()));
    }
    Ok(list)
}

pub fn run(
    occ_path: &Path,
    rig_path: &Path,
    out_dir: &Path,
    sensors: Option<&str>,
    config: &PipelineConfig,
) -> Result<(), CliError> {
    ensure_dir(out_dir)?;
    let grid = SemanticOccupancyGrid::load_occg(occ_path)
        .map_err(|e| CliError::Usage(format!("occ {}: {e}", occ_path.display())))?;
    let rig_file = RigFile::load(rig_path)?;
    let rig = rig_file.to_rig()?;
    let active = parse_sensor_list(sensors, rig.sensors.len())?;
    let table = load_sidecar_table(occ_path);

    let result = simulate(
        &grid,
        &rig,
        &RigidTransform::identity(),
        &active,
        &config.lidar,
        &table,
        config.seed,
    )
    .map_err(CliError::compute)?;

    let ply_path = out_dir.join("points.ply");
    let columns = vec![
        Column::f32("x", result.cloud.points.iter().map(|p| p.x as f32).collect()),
        Column::f32("y", result.cloud.points.iter().map(|p| p.y as f32).collect()),
        Column::f32("z", result.cloud.points.iter().map(|p| p.z as f32).collect()),
        Column::f32("intensity", result.cloud.intensity.clone().unwrap_or_default()),
        Column::f32("drop_prob", result.point_drop_prob.clone()),
        Column::u8("sensor_id", result.point_sensor.clone()),
        Column::u32("ray_id", result.point_ray.clone()),
    ];
    write_ply(&ply_path, &columns, config.io.ply_binary).map_err(CliError::compute)?;

    let rmap_path = out_dir.join("range.rmap");
    write_rmap(&rmap_path, &result.range_map).map_err(CliError::compute)?;

    let (smoothness, pairs) = smoothness_loss(&result.range_map);
    let dropped_by_prior = result.records.iter().filter(|r| r.dropped_by_prior).count();
    let dropped_by_render = result.records.iter().filter(|r| r.dropped_by_render).count();

    config.echo(out_dir)?;
    write_json(
        &out_dir.join("report.json"),
        &LidarReport {
            occ: occ_path.display().to_string(),
            occ_digest: file_digest(occ_path)?,
            sensors: active.clone(),
            seed: config.seed,
            rays: result.records.len(),
            returns: result.cloud.len(),
            dropped_by_prior,
            dropped_by_render,
            smoothness,
            smoothness_pairs: pairs,
            ply: ply_path.display().to_string(),
            rmap: rmap_path.display().to_string(),
        },
    )?;
    eprintln!(
        "simulated {} rays -> {} returns (L_s = {smoothness:.6})",
        result.records.len(),
        result.cloud.len()
    );
    Ok(())
}
