//! Prior-guided ray sampling: uniform probe, binary occupancy prior, and
//! stratified inverse-CDF resampling.

use crate::geom::Ray;
use crate::grid::SemanticOccupancyGrid;
use crate::rng::SplitMix64;

/// Samples along one ray.
#[derive(Debug, Clone, Default)]
pub struct RaySamples {
    /// Strictly ascending uniform probe depths.
    pub uniform: Vec<f64>,
    /// Binary occupancy at each probe depth.
    pub occ: Vec<bool>,
    /// Depths drawn from the occupancy prior, ascending, within the probe
    /// span. Empty when the ray saw no occupancy.
    pub resampled: Vec<f64>,
    pub dropped_by_prior: bool,
}

/// Probe the ray uniformly on [t_min, max_range], mark occupied samples, and
/// resample `n_resample` depths from the normalized prior by stratified
/// inverse-CDF with per-stratum jitter from `seed`.
pub fn sample_prior(
    ray: &Ray,
    grid: &SemanticOccupancyGrid,
    n_uniform: usize,
    n_resample: usize,
    t_min: f64,
    seed: u64,
) -> RaySamples {
    let mut out = RaySamples::default();
    sample_prior_into(ray, grid, n_uniform, n_resample, t_min, seed, &mut out);
    out
}

/// [`sample_prior`] into reused buffers; the hot simulation path calls this
/// with per-thread scratch to stay allocation-free.
pub fn sample_prior_into(
    ray: &Ray,
    grid: &SemanticOccupancyGrid,
    n_uniform: usize,
    n_resample: usize,
    t_min: f64,
    seed: u64,
    out: &mut RaySamples,
) {
    debug_assert!(n_uniform >= 2 && n_resample >= 1);
    let span = ray.max_range - t_min;
    let step = span / (n_uniform - 1) as f64;
    out.uniform.clear();
    out.occ.clear();
    out.resampled.clear();
    let mut mass = 0usize;
    for i in 0..n_uniform {
        let t = t_min + i as f64 * step;
        let hit = grid.class_at(&ray.at(t)) != 0;
        out.uniform.push(t);
        out.occ.push(hit);
        mass += hit as usize;
    }
    if mass == 0 {
        out.dropped_by_prior = true;
        return;
    }
    out.dropped_by_prior = false;

    // Each occupied probe owns one unit of mass spread over its step-wide bin.
    let mut rng = SplitMix64::new(seed);
    let total = mass as f64;
    let lo = out.uniform[0];
    let hi = *out.uniform.last().unwrap();
    let mut cum = 0usize;
    let mut k = 0usize;
    for j in 0..n_resample {
        let u = (j as f64 + rng.next_f64()) / n_resample as f64 * total;
        // advance to the occupied probe whose cumulative mass covers u
        while k < out.uniform.len() {
            if out.occ[k] && (cum + 1) as f64 > u {
                break;
            }
            cum += out.occ[k] as usize;
            k += 1;
        }
        let k_eff = k.min(out.uniform.len() - 1);
        let frac = (u - cum as f64).clamp(0.0, 1.0);
        let depth = (out.uniform[k_eff] - 0.5 * step + frac * step).clamp(lo, hi);
        out.resampled.push(depth);
    }
}
