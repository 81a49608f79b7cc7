//! SDF volume rendering of per-ray depth and the weighted feature reduction.

use super::LidarError;

/// Outcome of volume-rendering one ray.
#[derive(Debug, Clone)]
pub struct VolumeRender {
    /// One weight per sample (the last sample closes no interval and gets 0).
    pub weights: Vec<f64>,
    /// Weighted depth; `None` when the accumulated weight fell below the
    /// floor (ray dropped by the renderer).
    pub depth: Option<f64>,
    /// Remaining transmittance after the last sample.
    pub transmittance: f64,
}

const PHI_FLOOR: f64 = 1e-12;

fn logistic(x: f64, sharpness: f64) -> f64 {
    1.0 / (1.0 + (-sharpness * x).exp())
}

/// SDF-derived opacity at ascending sample depths:
/// β_i = max((Φ(f_i) − Φ(f_{i+1})) / Φ(f_i), 0), w_i = β_i·Π_{j<i}(1 − β_j),
/// depth = Σ w·s (divided by Σ w when `normalize`).
pub fn volume_render(samples: &[f64], sdf: &[f64], sharpness: f64, w_min: f64, normalize: bool) -> VolumeRender {
    let mut weights = Vec::new();
    let (depth, transmittance) = volume_render_into(samples, sdf, sharpness, w_min, normalize, &mut weights);
    VolumeRender {
        weights,
        depth,
        transmittance,
    }
}

/// [`volume_render`] writing the weights into a reused buffer.
pub(crate) fn volume_render_into(
    samples: &[f64],
    sdf: &[f64],
    sharpness: f64,
    w_min: f64,
    normalize: bool,
    weights: &mut Vec<f64>,
) -> (Option<f64>, f64) {
    debug_assert_eq!(samples.len(), sdf.len());
    let n = samples.len();
    weights.clear();
    weights.resize(n, 0.0);
    if n < 2 {
        return (None, 1.0);
    }
    let mut transmittance = 1.0f64;
    let mut w_sum = 0.0;
    let mut ws_sum = 0.0;
    for i in 0..n - 1 {
        // the floor applies to every Φ evaluation so a constant (possibly
        // deeply negative) SDF yields exactly zero opacity
        let phi_i = logistic(sdf[i], sharpness).max(PHI_FLOOR);
        let phi_next = logistic(sdf[i + 1], sharpness).max(PHI_FLOOR);
        let beta = ((phi_i - phi_next) / phi_i).max(0.0);
        let w = transmittance * beta;
        weights[i] = w;
        w_sum += w;
        ws_sum += w * samples[i];
        transmittance *= 1.0 - beta;
    }
    let depth = if w_sum > w_min {
        Some(if normalize { ws_sum / w_sum } else { ws_sum })
    } else {
        None
    };
    (depth, transmittance)
}

/// Weighted sum of per-sample features (one feature vector per weight).
pub fn ray_feature(weights: &[f64], features: &[Vec<f64>]) -> Result<Vec<f64>, LidarError> {
    if weights.len() != features.len() {
        return Err(LidarError::LengthMismatch {
            weights: weights.len(),
            features: features.len(),
        });
    }
    let dim = features.first().map_or(0, |f| f.len());
    let mut out = vec![0.0; dim];
    for (w, f) in weights.iter().zip(features) {
        debug_assert_eq!(f.len(), dim);
        for (o, v) in out.iter_mut().zip(f) {
            *o += w * v;
        }
    }
    Ok(out)
}
