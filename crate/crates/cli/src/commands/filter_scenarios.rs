//! `occuforge filter-scenarios <dir> --out <file>`: classify every manifest
//! in a directory as Spatial / Temporal / Neither.

use std::path::Path;

use occuforge_core::curation::{classify_scenario, ScenarioKind};
use serde::Serialize;

use super::write_json;
use crate::config::PipelineConfig;
use crate::error::CliError;
use crate::schemas::ManifestFile;

#[derive(Serialize, Default)]
struct ScenarioLists {
    spatial: Vec<String>,
    temporal: Vec<String>,
    neither: Vec<String>,
    errors: Vec<String>,
    theta_ego: f64,
    theta_other: f64,
}

pub fn run(dir: &Path, out: &Path, config: &PipelineConfig) -> Result<(), CliError> {
    let mut manifests: Vec<_> = std::fs::read_dir(dir)
        .map_err(CliError::io(dir))?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| {
            p.extension().is_some_and(|x| x == "json")
                && p.file_name().is_some_and(|n| n.to_string_lossy().contains("manifest"))
        })
        .collect();
    manifests.sort();
    if manifests.is_empty() {
        return Err(CliError::Usage(format!("no *manifest*.json files under {}", dir.display())));
    }

    let mut lists = ScenarioLists {
        theta_ego: config.curation.theta_ego,
        theta_other: config.curation.theta_other,
        ..Default::default()
    };
    for path in manifests {
        let name = path.display().to_string();
        let outcome = ManifestFile::load(&path)
            .and_then(|m| m.to_clip(&path))
            .and_then(|clip| {
                classify_scenario(&clip, config.curation.theta_ego, config.curation.theta_other)
                    .map_err(CliError::compute)
            });
        match outcome {
            Ok(ScenarioKind::Spatial) => lists.spatial.push(name),
            Ok(ScenarioKind::Temporal) => lists.temporal.push(name),
            Ok(ScenarioKind::Neither) => lists.neither.push(name),
            Err(e) => lists.errors.push(format!("{name}: {e}")),
        }
    }
    write_json(out, &lists)?;
    println!("{}", serde_json::to_string_pretty(&lists).unwrap());
    Ok(())
}
