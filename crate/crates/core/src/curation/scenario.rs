//! Spatio-temporal scenario classification from ego and track motion.

use std::collections::BTreeMap;

use nalgebra::Vector3;
use serde::Serialize;

use super::{CurationError, ScenarioClip};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ScenarioKind {
    /// The ego vehicle is moving.
    Spatial,
    /// The ego vehicle is static while other traffic moves.
    Temporal,
    Neither,
}

/// Mean finite-difference speed over a position series.
fn mean_speed(series: &[(f64, Vector3<f64>)]) -> f64 {
    if series.len() < 2 {
        return 0.0;
    }
    let mut sum = 0.0;
    for w in series.windows(2) {
        sum += (w[1].1 - w[0].1).norm() / (w[1].0 - w[0].0);
    }
    sum / (series.len() - 1) as f64
}

/// Classify a clip: Spatial iff v_ego > θe; Temporal iff v_ego < θe and the
/// fastest track moves above θo. The two outcomes are mutually exclusive.
pub fn classify_scenario(clip: &ScenarioClip, theta_ego: f64, theta_other: f64) -> Result<ScenarioKind, CurationError> {
    clip.validate()?;
    if clip.frames.len() < 2 {
        return Err(CurationError::SingleFrame);
    }
    let ego_series: Vec<(f64, Vector3<f64>)> = clip
        .frames
        .iter()
        .map(|f| (f.timestamp, f.ego_pose.translation))
        .collect();
    let v_ego = mean_speed(&ego_series);

    let mut tracks: BTreeMap<&str, Vec<(f64, Vector3<f64>)>> = BTreeMap::new();
    for f in &clip.frames {
        for b in &f.boxes {
            tracks.entry(&b.track_id).or_default().push((f.timestamp, b.center));
        }
    }
    let v_other = tracks.values().map(|s| mean_speed(s)).fold(0.0, f64::max);

    if v_ego > theta_ego {
        Ok(ScenarioKind::Spatial)
    } else if v_ego < theta_ego && v_other > theta_other {
        Ok(ScenarioKind::Temporal)
    } else {
        Ok(ScenarioKind::Neither)
    }
}
