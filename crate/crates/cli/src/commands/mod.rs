pub mod curate;
pub mod eval;
pub mod filter_scenarios;
pub mod lidar;
pub mod render;
pub mod synth;

use std::path::Path;

use crate::error::CliError;

pub fn ensure_dir(path: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(path).map_err(CliError::io(path))
}

pub fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("report serializes");
    std::fs::write(path, text).map_err(CliError::io(path))
}
