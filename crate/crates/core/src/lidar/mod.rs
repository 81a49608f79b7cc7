//! Occupancy-guided LiDAR simulation: prior-guided ray sampling, feature
//! embeddings, SDF volume rendering, intensity/drop heads, and range-map
//! projection. Rays are independent and carry seeds derived from
//! (global seed, sensor, ray index), so any sensor subset reproduces the
//! corresponding slice of a full run bit-for-bit.

mod field;
mod features;
mod heads;
mod range_map;
mod render;
mod sampling;

pub use field::OccupancyField;
pub use features::{
    fourier_encode, occupancy_histogram, plucker, sensor_embedding, HistogramEmbedder, SensorEmbedding, HIST_BINS,
    HIST_EMBED_DIM,
};
pub use heads::{AnalyticHead, HeadModel, HeadOutput, HitInfo};
pub use range_map::{range_project, read_rmap, smoothness_loss, write_rmap, RangeMap, RangeReturn};
pub use render::{ray_feature, volume_render, VolumeRender};
pub use sampling::{sample_prior, RaySamples};

use nalgebra::Vector3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cloud::PointCloud;
use crate::geom::{LidarRig, Ray, RigidTransform};
use crate::grid::{ClassTable, SemanticOccupancyGrid};
use crate::rng::SplitMix64;

#[derive(Debug, Error)]
pub enum LidarError {
    #[error("occupancy grid has no occupied voxels")]
    EmptyGrid,
    #[error("no sensor selected")]
    NoActiveSensor,
    #[error("weights/features length mismatch: {weights} vs {features}")]
    LengthMismatch { weights: usize, features: usize },
    #[error("{0}")]
    BadConfig(String),
    #[error(transparent)]
    Geom(#[from] crate::geom::GeomError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LidarConfig {
    /// Uniform probe samples per ray.
    pub n_uniform: usize,
    /// Prior-guided resamples per ray.
    pub n_resample: usize,
    /// Nearest probed depth (meters).
    pub t_min: f64,
    /// Logistic sharpness of the SDF opacity (1/m). The default transitions
    /// over roughly one 0.25 m voxel; softer settings let near-miss geometry
    /// (e.g. rays threading between parked vehicles) pull weight mass ahead
    /// of the true crossing.
    pub s_sharp: f64,
    /// Minimum accumulated weight for a valid return.
    pub w_min: f64,
    /// Divide rendered depth by the accumulated weight.
    pub normalize_depth: bool,
    /// Fourier frequencies per coordinate in the sensor embedding.
    pub fourier_frequencies: usize,
    /// Intensity attenuation length (meters).
    pub lambda_atten: f64,
    /// Grazing-incidence drop factor.
    pub p_graze: f64,
    pub range_rows: usize,
    pub range_cols: usize,
    /// Seed for the default histogram embedding matrix.
    pub embed_seed: u64,
    /// Optional path to a JSON array of 64×16 row-major values replacing the
    /// seeded embedding matrix.
    pub embed_matrix: Option<String>,
}

impl Default for LidarConfig {
    fn default() -> Self {
        Self {
            n_uniform: 512,
            n_resample: 32,
            t_min: 0.5,
            s_sharp: 20.0,
            w_min: 1e-3,
            normalize_depth: true,
            fourier_frequencies: 4,
            lambda_atten: 80.0,
            p_graze: 0.3,
            range_rows: 64,
            range_cols: 1024,
            embed_seed: 42,
            embed_matrix: None,
        }
    }
}

impl LidarConfig {
    fn validate(&self) -> Result<(), LidarError> {
        if self.n_uniform < 2 {
            return Err(LidarError::BadConfig("n_uniform must be >= 2".into()));
        }
        if self.n_resample < 1 {
            return Err(LidarError::BadConfig("n_resample must be >= 1".into()));
        }
        if !(self.s_sharp > 0.0) {
            return Err(LidarError::BadConfig("s_sharp must be positive".into()));
        }
        Ok(())
    }
}

/// Everything simulated for one ray.
#[derive(Debug, Clone)]
pub struct RayRecord {
    pub sensor: usize,
    pub ray_index: usize,
    /// Ego-frame azimuth/elevation of the ray direction.
    pub azimuth: f64,
    pub elevation: f64,
    pub dropped_by_prior: bool,
    pub dropped_by_render: bool,
    /// Rendered depth for non-dropped rays.
    pub depth: Option<f64>,
    pub intensity: f64,
    pub drop_prob: f64,
    /// Normalized occupancy histogram along the ray.
    pub histogram: [f64; HIST_BINS],
    /// Weight-aggregated per-sample feature for this ray.
    pub feature: Vec<f64>,
}

impl RayRecord {
    pub fn dropped(&self) -> bool {
        self.dropped_by_prior || self.dropped_by_render
    }
}

#[derive(Debug, Clone)]
pub struct SimulationResult {
    pub records: Vec<RayRecord>,
    /// One point per non-dropped ray, with intensity.
    pub cloud: PointCloud,
    /// Sensor id per cloud point.
    pub point_sensor: Vec<u8>,
    /// Ray id (pattern index) per cloud point.
    pub point_ray: Vec<u32>,
    /// Drop probability per cloud point.
    pub point_drop_prob: Vec<f32>,
    pub range_map: RangeMap,
}

/// Simulate all rays of the active sensors against the grid.
pub fn simulate(
    grid: &SemanticOccupancyGrid,
    rig: &LidarRig,
    ego_pose: &RigidTransform,
    active: &[usize],
    config: &LidarConfig,
    table: &ClassTable,
    seed: u64,
) -> Result<SimulationResult, LidarError> {
    let field = OccupancyField::build(grid)?;
    simulate_prepared(&field, grid, rig, ego_pose, active, config, table, seed)
}

/// [`simulate`] with a prebuilt field, for callers that scan one grid many
/// times (the field build amortizes across runs).
#[allow(clippy::too_many_arguments)]
pub fn simulate_prepared(
    field: &OccupancyField,
    grid: &SemanticOccupancyGrid,
    rig: &LidarRig,
    ego_pose: &RigidTransform,
    active: &[usize],
    config: &LidarConfig,
    table: &ClassTable,
    seed: u64,
) -> Result<SimulationResult, LidarError> {
    config.validate()?;
    if active.is_empty() {
        return Err(LidarError::NoActiveSensor);
    }
    let embedder = match &config.embed_matrix {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            let values: Vec<f64> = serde_json::from_str(&text)
                .map_err(|e| LidarError::BadConfig(format!("embed matrix {path}: {e}")))?;
            HistogramEmbedder::from_matrix(values)?
        }
        None => HistogramEmbedder::seeded(config.embed_seed),
    };
    let embedding = sensor_embedding(rig, active, config.fourier_frequencies)?;
    let head = AnalyticHead::new(table, config.lambda_atten, config.p_graze);
    let rays = rig.rays_world(ego_pose, active)?;
    let inv_ego = ego_pose.inverse();

    let records: Vec<RayRecord> = rays
        .par_iter()
        .map_init(SimScratch::default, |scratch, ray| {
            simulate_ray(ray, grid, field, &embedder, &embedding.rig_feature, &head, config, seed, &inv_ego, scratch)
        })
        .collect();

    // Assemble the cloud in ray order.
    let mut cloud = PointCloud {
        points: Vec::new(),
        intensity: Some(Vec::new()),
        labels: None,
    };
    let mut point_sensor = Vec::new();
    let mut point_ray = Vec::new();
    let mut point_drop_prob = Vec::new();
    for (ray, rec) in rays.iter().zip(&records) {
        if let Some(depth) = rec.depth {
            cloud.points.push(ray.at(depth));
            cloud.intensity.as_mut().unwrap().push(rec.intensity as f32);
            point_sensor.push(rec.sensor as u8);
            point_ray.push(rec.ray_index as u32);
            point_drop_prob.push(rec.drop_prob as f32);
        }
    }

    let (el_min, el_max) = records
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |acc, r| (acc.0.min(r.elevation), acc.1.max(r.elevation)));
    let range_map = range_project(
        records.iter().filter(|r| r.depth.is_some()).map(|r| RangeReturn {
            azimuth: r.azimuth,
            elevation: r.elevation,
            depth: r.depth.unwrap(),
            hist: &r.histogram,
        }),
        config.range_rows,
        config.range_cols,
        HIST_BINS,
        (el_min, el_max),
    )?;

    Ok(SimulationResult {
        records,
        cloud,
        point_sensor,
        point_ray,
        point_drop_prob,
        range_map,
    })
}

/// Per-thread buffers so the hot path allocates only its output record.
#[derive(Default)]
struct SimScratch {
    samples: RaySamples,
    render_depths: Vec<f64>,
    geo: Vec<[f64; 4]>,
    sdf: Vec<f64>,
    weights: Vec<f64>,
}

#[allow(clippy::too_many_arguments)]
fn simulate_ray(
    ray: &Ray,
    grid: &SemanticOccupancyGrid,
    field: &OccupancyField,
    embedder: &HistogramEmbedder,
    rig_feature: &[f64],
    head: &dyn HeadModel,
    config: &LidarConfig,
    seed: u64,
    inv_ego: &RigidTransform,
    scratch: &mut SimScratch,
) -> RayRecord {
    let dir_ego = inv_ego.apply_dir(&ray.dir);
    let azimuth = dir_ego.y.atan2(dir_ego.x);
    let elevation = dir_ego.z.clamp(-1.0, 1.0).asin();

    let ray_seed = SplitMix64::derive(seed, &[ray.sensor as u64, ray.index as u64]).next_u64();
    let SimScratch {
        samples,
        render_depths,
        geo,
        sdf,
        weights,
    } = scratch;
    sampling::sample_prior_into(ray, grid, config.n_uniform, config.n_resample, config.t_min, ray_seed, samples);
    let histogram = occupancy_histogram(samples);
    let e_h = embedder.embed(&histogram);
    let e_p = plucker(ray);

    let mut record = RayRecord {
        sensor: ray.sensor,
        ray_index: ray.index,
        azimuth,
        elevation,
        dropped_by_prior: samples.dropped_by_prior,
        dropped_by_render: false,
        depth: None,
        intensity: 0.0,
        drop_prob: 1.0,
        histogram,
        feature: Vec::new(),
    };
    if samples.dropped_by_prior {
        return record;
    }

    // The prior confines resampled depths to occupied voxels, which truncates
    // the rendered density at the surface and drags grazing-ray depths
    // behind it. Prepending the free-space probe samples just before the
    // first occupied one restores the full logistic profile, centering the
    // weight mass on the SDF crossing.
    let first_occ = samples.occ.iter().position(|&o| o).expect("not dropped by prior");
    let f_settled = 2.5 / config.s_sharp;
    const MAX_APPROACH: usize = 128;
    render_depths.clear();
    geo.clear();
    let mut k = first_occ;
    while k > 0 && render_depths.len() < MAX_APPROACH {
        k -= 1;
        let t = samples.uniform[k];
        let g = field.geometry_feature(&ray.at(t));
        render_depths.push(t);
        geo.push(g);
        if g[0] >= f_settled {
            break;
        }
    }
    render_depths.reverse();
    geo.reverse();

    // Geometry features (f, ∇f) at the render samples; f drives the volume
    // renderer, the full vector feeds the per-sample feature.
    for &t in &samples.resampled {
        render_depths.push(t);
        geo.push(field.geometry_feature(&ray.at(t)));
    }
    sdf.clear();
    sdf.extend(geo.iter().map(|g| g[0]));
    let (depth, _) = render::volume_render_into(render_depths, sdf, config.s_sharp, config.w_min, config.normalize_depth, weights);

    // v_r = Σ w_i·u_i with u_i = Cat(e_g ++ f_r, e_h, e_p); the per-ray
    // parts are folded in after the sum since Σw distributes over them.
    let dim = 4 + rig_feature.len() + e_h.len() + e_p.len();
    let mut feature = vec![0.0; dim];
    let mut w_sum = 0.0;
    for (w, g) in weights.iter().zip(geo.iter()) {
        if *w != 0.0 {
            for (o, v) in feature.iter_mut().zip(g) {
                *o += w * v;
            }
            w_sum += w;
        }
    }
    for (slot, v) in feature[4..]
        .iter_mut()
        .zip(rig_feature.iter().chain(&e_h).chain(&e_p))
    {
        *slot = w_sum * v;
    }
    record.feature = feature;

    let Some(depth) = depth else {
        record.dropped_by_render = true;
        return record;
    };

    let position = ray.at(depth);
    let class_id = hit_class(grid, &position, &ray.dir);
    let normal = field.gradient(&position);
    let cos_incidence = if normal.norm() > 1e-9 {
        (ray.dir.dot(&normal.normalize())).abs()
    } else {
        1.0
    };
    let out = head.eval(
        &record.feature,
        &HitInfo {
            position,
            class_id,
            cos_incidence,
            depth,
        },
    );
    record.depth = Some(depth);
    record.intensity = out.intensity;
    record.drop_prob = out.drop_prob;
    record
}

/// Class at the hit point, probing a little along the ray when the rendered
/// depth quantizes just outside the occupied voxel.
fn hit_class(grid: &SemanticOccupancyGrid, position: &Vector3<f64>, dir: &Vector3<f64>) -> u8 {
    let step = 0.5 * grid.voxel_size().min();
    for probe in [0.0, step, -step, 2.0 * step] {
        let c = grid.class_at(&(position + dir * probe));
        if c != 0 {
            return c;
        }
    }
    0
}
