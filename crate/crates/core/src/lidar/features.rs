//! Per-ray feature embeddings: Plücker coordinates, occupancy histograms,
//! and the sensor-specific Fourier embedding.

use nalgebra::Vector3;

use super::{LidarError, RaySamples};
use crate::geom::{LidarRig, Ray};
use crate::rng::SplitMix64;

pub const HIST_BINS: usize = 64;
pub const HIST_EMBED_DIM: usize = 16;

/// Plücker embedding of a ray: (v, o × v). Invariant under sliding the
/// origin along the direction.
pub fn plucker(ray: &Ray) -> [f64; 6] {
    let m = ray.origin.cross(&ray.dir);
    [ray.dir.x, ray.dir.y, ray.dir.z, m.x, m.y, m.z]
}

/// 64-bin histogram of occupied probe depths over the probe span, normalized
/// to unit mass (all-zero when nothing was occupied).
pub fn occupancy_histogram(samples: &RaySamples) -> [f64; HIST_BINS] {
    let mut h = [0.0f64; HIST_BINS];
    let (Some(&lo), Some(&hi)) = (samples.uniform.first(), samples.uniform.last()) else {
        return h;
    };
    let span = hi - lo;
    if span <= 0.0 {
        return h;
    }
    let mut total = 0.0;
    for (&t, &occ) in samples.uniform.iter().zip(&samples.occ) {
        if occ {
            let bin = (((t - lo) / span * HIST_BINS as f64) as usize).min(HIST_BINS - 1);
            h[bin] += 1.0;
            total += 1.0;
        }
    }
    if total > 0.0 {
        for v in &mut h {
            *v /= total;
        }
    }
    h
}

/// The 64×16 histogram embedding matrix, e_h = E_hᵀ·h.
#[derive(Debug, Clone)]
pub struct HistogramEmbedder {
    /// Row-major 64×16.
    matrix: Vec<f64>,
}

impl HistogramEmbedder {
    /// Deterministic pseudo-random embedding: unit-normalized Gaussian
    /// columns (near-orthogonal at this size).
    pub fn seeded(seed: u64) -> Self {
        let mut rng = SplitMix64::new(seed);
        let mut matrix = vec![0.0; HIST_BINS * HIST_EMBED_DIM];
        for v in matrix.iter_mut() {
            *v = rng.normal();
        }
        for col in 0..HIST_EMBED_DIM {
            let norm: f64 = (0..HIST_BINS)
                .map(|r| matrix[r * HIST_EMBED_DIM + col].powi(2))
                .sum::<f64>()
                .sqrt();
            for r in 0..HIST_BINS {
                matrix[r * HIST_EMBED_DIM + col] /= norm;
            }
        }
        Self { matrix }
    }

    pub fn from_matrix(matrix: Vec<f64>) -> Result<Self, LidarError> {
        if matrix.len() != HIST_BINS * HIST_EMBED_DIM {
            return Err(LidarError::BadConfig(format!(
                "embedding matrix must be {}x{}, got {} values",
                HIST_BINS,
                HIST_EMBED_DIM,
                matrix.len()
            )));
        }
        Ok(Self { matrix })
    }

    pub fn row(&self, bin: usize) -> &[f64] {
        &self.matrix[bin * HIST_EMBED_DIM..(bin + 1) * HIST_EMBED_DIM]
    }

    pub fn embed(&self, h: &[f64; HIST_BINS]) -> [f64; HIST_EMBED_DIM] {
        let mut e = [0.0f64; HIST_EMBED_DIM];
        for (bin, &mass) in h.iter().enumerate() {
            if mass != 0.0 {
                for (j, v) in self.row(bin).iter().enumerate() {
                    e[j] += mass * v;
                }
            }
        }
        e
    }
}

/// Fourier encoding of a sensor origin: (sin(2ʲπc), cos(2ʲπc)) for each
/// coordinate c and frequency j < `frequencies`. Length 6·frequencies.
pub fn fourier_encode(origin: &Vector3<f64>, frequencies: usize) -> Vec<f64> {
    let mut e = Vec::with_capacity(6 * frequencies);
    for a in 0..3 {
        for j in 0..frequencies {
            let arg = (1u64 << j) as f64 * std::f64::consts::PI * origin[a];
            e.push(arg.sin());
            e.push(arg.cos());
        }
    }
    e
}

/// Per-sensor Fourier embeddings (zeroed for inactive sensors) plus the
/// pooled rig feature f_r = mean over active embeddings.
#[derive(Debug, Clone)]
pub struct SensorEmbedding {
    pub per_sensor: Vec<Vec<f64>>,
    pub rig_feature: Vec<f64>,
}

pub fn sensor_embedding(rig: &LidarRig, active: &[usize], frequencies: usize) -> Result<SensorEmbedding, LidarError> {
    if active.is_empty() {
        return Err(LidarError::NoActiveSensor);
    }
    for &i in active {
        if i >= rig.sensors.len() {
            return Err(LidarError::BadConfig(format!("sensor index {i} out of range")));
        }
    }
    let dim = 6 * frequencies;
    let mut per_sensor = vec![vec![0.0; dim]; rig.sensors.len()];
    let mut rig_feature = vec![0.0; dim];
    for &i in active {
        let e = fourier_encode(&rig.sensors[i].origin, frequencies);
        for (acc, &v) in rig_feature.iter_mut().zip(&e) {
            *acc += v;
        }
        per_sensor[i] = e;
    }
    for v in &mut rig_feature {
        *v /= active.len() as f64;
    }
    Ok(SensorEmbedding {
        per_sensor,
        rig_feature,
    })
}
