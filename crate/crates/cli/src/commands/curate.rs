//! `occuforge curate <manifest> --out <dir>`

use std::path::Path;

use occuforge_core::curation::curate;
use occuforge_core::grid::ClassTable;
use serde::Serialize;

use super::{ensure_dir, write_json};
use crate::config::PipelineConfig;
use crate::error::CliError;
use crate::schemas::{file_digest, ManifestFile};

#[derive(Serialize)]
struct CurateReport<'a> {
    manifest: String,
    manifest_digest: String,
    occg: String,
    #[serde(flatten)]
    pipeline: &'a occuforge_core::curation::CurationReport,
}

pub fn run(manifest_path: &Path, out_dir: &Path, config: &PipelineConfig) -> Result<(), CliError> {
    ensure_dir(out_dir)?;
    let manifest = ManifestFile::load(manifest_path)?;
    let clip = manifest.to_clip(manifest_path)?;
    let table = match &manifest.class_table {
        Some(rel) => {
            let path = manifest_path.parent().unwrap_or(Path::new(".")).join(rel);
            ClassTable::load(&path).map_err(|e| CliError::Usage(format!("class table {}: {e}", path.display())))?
        }
        None => ClassTable::default(),
    };
    table.validate().map_err(CliError::compute)?;

    let (grid, report) = curate(&clip, &config.curation).map_err(CliError::compute)?;
    let occg_path = out_dir.join("curated.occg");
    grid.save_occg(&occg_path).map_err(CliError::compute)?;
    table
        .save(&out_dir.join("classes.json"))
        .map_err(CliError::compute)?;

    config.echo(out_dir)?;
    write_json(
        &out_dir.join("report.json"),
        &CurateReport {
            manifest: manifest_path.display().to_string(),
            manifest_digest: file_digest(manifest_path)?,
            occg: occg_path.display().to_string(),
            pipeline: &report,
        },
    )?;
    eprintln!(
        "curated {} frames -> {} occupied voxels -> {}",
        report.frames,
        report.occupied_voxels,
        occg_path.display()
    );
    Ok(())
}
