//! `occuforge render <occ> <cameras> --out <dir>`

use std::path::Path;

use occuforge_core::grid::{ClassTable, SemanticOccupancyGrid};
use occuforge_core::splat::{
    occupancy_to_gaussians, rasterize, write_depth_pgm16, write_depth_raw, write_semantic_pgm8, write_semantic_ppm,
};
use serde::Serialize;

use super::{ensure_dir, write_json};
use crate::config::PipelineConfig;
use crate::error::CliError;
use crate::schemas::{file_digest, CamerasFile};

#[derive(Serialize)]
struct RenderReport {
    occ: String,
    occ_digest: String,
    gaussians: usize,
    views: Vec<ViewReport>,
}

#[derive(Serialize)]
struct ViewReport {
    camera: usize,
    depth_pgm: String,
    depth_raw: String,
    semantic_pgm: String,
    semantic_ppm: String,
    coverage_fraction: f64,
    culled: usize,
    skipped_singular: usize,
}

pub fn run(occ_path: &Path, cameras_path: &Path, out_dir: &Path, config: &PipelineConfig) -> Result<(), CliError> {
    config.render.validate()?;
    ensure_dir(out_dir)?;
    let grid = SemanticOccupancyGrid::load_occg(occ_path)
        .map_err(|e| CliError::Usage(format!("occ {}: {e}", occ_path.display())))?;
    let cameras = CamerasFile::load(cameras_path)?;
    if cameras.cameras.is_empty() {
        return Err(CliError::Usage("cameras file lists no cameras".into()));
    }
    let table = load_sidecar_table(occ_path);

    let gaussians =
        occupancy_to_gaussians(&grid, config.render.gaussian_scale, config.render.opacity).map_err(CliError::compute)?;
    let options = config.render.options();
    let mut views = Vec::new();
    for (i, cam) in cameras.cameras.iter().enumerate() {
        let result = rasterize(&gaussians, cam, &options).map_err(CliError::compute)?;
        let stem = format!("cam{i}");
        let depth_pgm = out_dir.join(format!("{stem}_depth.pgm"));
        let depth_raw = out_dir.join(format!("{stem}_depth.bin"));
        let semantic_pgm = out_dir.join(format!("{stem}_semantic.pgm"));
        let semantic_ppm = out_dir.join(format!("{stem}_semantic.ppm"));
        write_depth_pgm16(&depth_pgm, &result.maps).map_err(CliError::compute)?;
        write_depth_raw(&depth_raw, &result.maps).map_err(CliError::compute)?;
        write_semantic_pgm8(&semantic_pgm, &result.maps).map_err(CliError::compute)?;
        write_semantic_ppm(&semantic_ppm, &result.maps, &table).map_err(CliError::compute)?;
        views.push(ViewReport {
            camera: i,
            depth_pgm: depth_pgm.display().to_string(),
            depth_raw: depth_raw.display().to_string(),
            semantic_pgm: semantic_pgm.display().to_string(),
            semantic_ppm: semantic_ppm.display().to_string(),
            coverage_fraction: result.maps.coverage_fraction(),
            culled: result.diagnostics.culled,
            skipped_singular: result.diagnostics.skipped_singular,
        });
    }

    config.echo(out_dir)?;
    write_json(
        &out_dir.join("report.json"),
        &RenderReport {
            occ: occ_path.display().to_string(),
            occ_digest: file_digest(occ_path)?,
            gaussians: gaussians.len(),
            views,
        },
    )?;
    eprintln!("rendered {} gaussians into {} view(s)", gaussians.len(), cameras.cameras.len());
    Ok(())
}

/// `classes.json` next to the OCCG file, or the built-in table.
pub fn load_sidecar_table(occ_path: &Path) -> ClassTable {
    let sidecar = occ_path.parent().unwrap_or(Path::new(".")).join("classes.json");
    ClassTable::load(&sidecar).unwrap_or_default()
}
