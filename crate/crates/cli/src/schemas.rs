//! JSON wire schemas for cameras, rigs, and clip manifests, with loaders
//! into the domain types.

use std::path::Path;

use nalgebra::Vector3;
use occuforge_core::curation::{BevMap, Frame, ScenarioClip};
use occuforge_core::geom::{fan_pattern, CameraModel, LidarRig, LidarSensor, OrientedBox, PoseJson, RigidTransform};
use occuforge_core::io::read_ply_cloud;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CamerasFile {
    pub cameras: Vec<CameraModel>,
}

impl CamerasFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("cameras {}: {e}", path.display())))
    }

    pub fn save(&self, path: &Path) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(self).expect("cameras serialize");
        std::fs::write(path, text).map_err(CliError::io(path))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RigFile {
    pub sensors: Vec<SensorEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorEntry {
    pub origin: [f64; 3],
    /// (w, x, y, z); identity when omitted.
    #[serde(default = "identity_quaternion")]
    pub orientation: [f64; 4],
    pub max_range: f64,
    /// Explicit (azimuth, elevation) pairs in radians.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pattern: Option<Vec<[f64; 2]>>,
    /// Or a regular fan, in degrees.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fan: Option<FanSpec>,
}

fn identity_quaternion() -> [f64; 4] {
    [1.0, 0.0, 0.0, 0.0]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FanSpec {
    pub rows: usize,
    pub cols: usize,
    pub el_min_deg: f64,
    pub el_max_deg: f64,
    pub az_min_deg: f64,
    pub az_max_deg: f64,
}

impl RigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("rig {}: {e}", path.display())))
    }

    pub fn save(&self, path: &Path) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(self).expect("rig serialize");
        std::fs::write(path, text).map_err(CliError::io(path))
    }

    pub fn to_rig(&self) -> Result<LidarRig, CliError> {
        let mut sensors = Vec::with_capacity(self.sensors.len());
        for (i, s) in self.sensors.iter().enumerate() {
            let pattern = match (&s.pattern, &s.fan) {
                (Some(p), None) => p.iter().map(|&[az, el]| (az, el)).collect(),
                (None, Some(f)) => fan_pattern(
                    f.rows,
                    f.cols,
                    (f.el_min_deg.to_radians(), f.el_max_deg.to_radians()),
                    (f.az_min_deg.to_radians(), f.az_max_deg.to_radians()),
                ),
                _ => {
                    return Err(CliError::Usage(format!(
                        "sensor {i}: exactly one of \"pattern\" or \"fan\" must be given"
                    )))
                }
            };
            let pose = RigidTransform::from_quaternion(s.orientation, Vector3::zeros());
            sensors.push(LidarSensor {
                origin: Vector3::new(s.origin[0], s.origin[1], s.origin[2]),
                orientation: pose.rotation,
                pattern,
                max_range: s.max_range,
            });
        }
        LidarRig::new(sensors).map_err(|e| CliError::Usage(e.to_string()))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestFile {
    pub frames: Vec<FrameEntry>,
    pub bev: BevEntry,
    /// Class-table sidecar path, relative to the manifest.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_table: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameEntry {
    pub timestamp: f64,
    pub ego_pose: PoseJson,
    /// PLY path relative to the manifest.
    pub sweep: String,
    #[serde(default)]
    pub boxes: Vec<BoxEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxEntry {
    pub center: [f64; 3],
    pub quaternion: [f64; 4],
    pub half_extents: [f64; 3],
    pub class: u8,
    pub track_id: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BevEntry {
    /// 8-bit PGM of class ids, relative to the manifest.
    pub image: String,
    pub cell_size: f64,
    /// World (x, y) of the min corner.
    pub origin: [f64; 2],
}

impl ManifestFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("manifest {}: {e}", path.display())))
    }

    pub fn save(&self, path: &Path) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(self).expect("manifest serialize");
        std::fs::write(path, text).map_err(CliError::io(path))
    }

    /// Load the clip this manifest describes; paths resolve relative to the
    /// manifest file.
    pub fn to_clip(&self, manifest_path: &Path) -> Result<ScenarioClip, CliError> {
        let base = manifest_path.parent().unwrap_or(Path::new("."));
        let mut frames = Vec::with_capacity(self.frames.len());
        for (i, f) in self.frames.iter().enumerate() {
            let sweep_path = base.join(&f.sweep);
            let sweep = read_ply_cloud(&sweep_path)
                .map_err(|e| CliError::Usage(format!("frame {i}: sweep {}: {e}", sweep_path.display())))?;
            let mut boxes = Vec::with_capacity(f.boxes.len());
            for (bi, b) in f.boxes.iter().enumerate() {
                let pose = RigidTransform::from_quaternion(b.quaternion, Vector3::zeros());
                boxes.push(
                    OrientedBox::new(
                        Vector3::new(b.center[0], b.center[1], b.center[2]),
                        pose.rotation,
                        Vector3::new(b.half_extents[0], b.half_extents[1], b.half_extents[2]),
                        b.class,
                        b.track_id.clone(),
                    )
                    .map_err(|e| CliError::Usage(format!("frame {i} box {bi}: {e}")))?,
                );
            }
            frames.push(Frame {
                timestamp: f.timestamp,
                ego_pose: RigidTransform::from(&f.ego_pose),
                sweep,
                boxes,
            });
        }
        let bev_path = base.join(&self.bev.image);
        let (cols, rows, labels) =
            occuforge_core::io::read_pgm8(&bev_path).map_err(|e| CliError::Usage(format!("bev {}: {e}", bev_path.display())))?;
        let bev = BevMap {
            rows,
            cols,
            cell_size: self.bev.cell_size,
            origin: self.bev.origin,
            labels,
        };
        Ok(ScenarioClip { frames, bev })
    }
}

/// FNV-1a digest of a file, for report provenance.
pub fn file_digest(path: &Path) -> Result<String, CliError> {
    let bytes = std::fs::read(path).map_err(CliError::io(path))?;
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x1000_0000_01b3);
    }
    Ok(format!("fnv1a:{hash:016x}"))
}
