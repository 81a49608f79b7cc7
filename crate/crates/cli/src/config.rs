//! Pipeline configuration: JSON file + dotted-key command-line overrides,
//! with every default materialized so the resolved form reproduces a run.

use std::path::Path;

use occuforge_core::curation::CurationConfig;
use occuforge_core::lidar::LidarConfig;
use occuforge_core::metrics::BevBinning;
use occuforge_core::splat::{Backend, RenderOptions, UtParams};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    /// Worker threads; 0 = all cores.
    pub threads: usize,
    pub curation: CurationConfig,
    pub render: RenderConfig,
    pub lidar: LidarConfig,
    pub metrics: MetricsConfig,
    pub io: IoConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RenderConfig {
    pub projection: Backend,
    pub gaussian_scale: f64,
    pub opacity: f64,
    pub tile: usize,
    pub alpha_min: f64,
    pub normalize_depth: bool,
    pub transmittance_stop: f64,
    pub ut: UtParams,
}

impl Default for RenderConfig {
    fn default() -> Self {
        Self {
            projection: Backend::Ut,
            gaussian_scale: 0.01,
            opacity: 0.99,
            tile: 16,
            alpha_min: 1.0 / 255.0,
            normalize_depth: true,
            transmittance_stop: 1e-12,
            ut: UtParams::default(),
        }
    }
}

impl RenderConfig {
    pub fn options(&self) -> RenderOptions {
        RenderOptions {
            backend: self.projection,
            ut: self.ut,
            tile: self.tile,
            alpha_min: self.alpha_min,
            normalize_depth: self.normalize_depth,
            transmittance_stop: self.transmittance_stop,
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if !(self.gaussian_scale > 0.0) {
            return Err(CliError::Usage(format!(
                "render.gaussian_scale must be positive, got {}",
                self.gaussian_scale
            )));
        }
        if !(self.opacity > 0.0 && self.opacity <= 1.0) {
            return Err(CliError::Usage(format!("render.opacity must be in (0,1], got {}", self.opacity)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsConfig {
    pub bev: BevBinning,
    /// MMD kernel bandwidth; null = median pairwise distance.
    pub mmd_sigma: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IoConfig {
    /// Write binary (rather than ASCII) PLY.
    pub ply_binary: bool,
}

impl Default for IoConfig {
    fn default() -> Self {
        Self { ply_binary: true }
    }
}

impl PipelineConfig {
    /// Load a config file (or defaults), then apply `key.path=value`
    /// overrides. Unknown keys are rejected.
    pub fn resolve(path: Option<&Path>, overrides: &[String]) -> Result<Self, CliError> {
        let mut value = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(CliError::io(p))?;
                serde_json::from_str::<serde_json::Value>(&text)
                    .map_err(|e| CliError::Usage(format!("config {}: {e}", p.display())))?
            }
            None => serde_json::to_value(Self::default()).expect("default config serializes"),
        };
        for item in overrides {
            apply_override(&mut value, item)?;
        }
        // Fill defaults for any omitted sections by deserializing.
        serde_json::from_value(value).map_err(|e| CliError::Usage(format!("config: {e}")))
    }

    pub fn to_pretty_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Write the fully-resolved config next to the outputs and echo it.
    pub fn echo(&self, out_dir: &Path) -> Result<(), CliError> {
        let text = self.to_pretty_json();
        let path = out_dir.join("resolved_config.json");
        std::fs::write(&path, &text).map_err(CliError::io(&path))?;
        println!("{text}");
        Ok(())
    }
}

fn apply_override(root: &mut serde_json::Value, item: &str) -> Result<(), CliError> {
    let (key, raw) = item
        .split_once('=')
        .ok_or_else(|| CliError::Usage(format!("--set expects key.path=value, got \"{item}\"")))?;
    let parsed: serde_json::Value = match serde_json::from_str(raw) {
        Ok(v) => v,
        Err(_) => serde_json::Value::String(raw.to_string()),
    };
    let mut cursor = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let obj = cursor
            .as_object_mut()
            .ok_or_else(|| CliError::Usage(format!("--set {key}: \"{part}\" is not an object")))?;
        if i + 1 == parts.len() {
            obj.insert(part.to_string(), parsed);
            return Ok(());
        }
        cursor = obj
            .entry(part.to_string())
            .or_insert_with(|| serde_json::Value::Object(Default::default()));
    }
    unreachable!("loop returns on the last segment")
}
