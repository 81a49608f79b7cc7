//! Tile-based front-to-back alpha compositing of projected Gaussians into
//! depth and semantic maps.
//!
//! Binning, sorting, and the transmittance cutoff are pure optimizations: a
//! Gaussian is bound to every pixel where its contribution can clear the
//! `alpha_min` gate, so the output matches whole-image per-pixel compositing.

use nalgebra::{Matrix2, Vector2};
use rayon::prelude::*;
use serde::Serialize;

use super::{occupancy_to_gaussians, project_ewa, project_ut, GaussianPrimitive, SplatError, UtParams};
use crate::geom::CameraModel;
use crate::grid::SemanticOccupancyGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Ewa,
    Ut,
}

#[derive(Debug, Clone)]
pub struct RenderOptions {
    pub backend: Backend,
    pub ut: UtParams,
    /// Tile edge in pixels.
    pub tile: usize,
    /// Contributions below this opacity are skipped.
    pub alpha_min: f64,
    /// Divide accumulated depth by accumulated opacity.
    pub normalize_depth: bool,
    /// Stop compositing when transmittance falls below this. Must stay tiny
    /// for the rasterizer to be an exact optimization of full compositing.
    pub transmittance_stop: f64,
}

impl Default for RenderOptions {
    fn default() -> Self {
        Self {
            backend: Backend::Ut,
            ut: UtParams::default(),
            tile: 16,
            alpha_min: 1.0 / 255.0,
            normalize_depth: true,
            transmittance_stop: 1e-12,
        }
    }
}

/// Rendered per-pixel maps. Depth 0 / semantic 0 mean "no coverage".
#[derive(Debug, Clone)]
pub struct RenderedMaps {
    pub width: usize,
    pub height: usize,
    /// Meters; 0 where nothing composited.
    pub depth: Vec<f64>,
    /// Class ids; 0 where nothing composited.
    pub semantic: Vec<u8>,
    /// Accumulated opacity in [0, 1].
    pub coverage: Vec<f64>,
}

impl RenderedMaps {
    fn zeros(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            depth: vec![0.0; width * height],
            semantic: vec![0; width * height],
            coverage: vec![0.0; width * height],
        }
    }

    /// Fraction of pixels with any coverage.
    pub fn coverage_fraction(&self) -> f64 {
        if self.coverage.is_empty() {
            return 0.0;
        }
        self.coverage.iter().filter(|&&c| c > 0.0).count() as f64 / self.coverage.len() as f64
    }
}

#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct RasterDiagnostics {
    /// Behind the camera or entirely off-image.
    pub culled: usize,
    /// Projected covariance too ill-conditioned to invert.
    pub skipped_singular: usize,
    /// Gaussians that survived projection.
    pub drawn: usize,
}

#[derive(Debug, Clone)]
pub struct RenderResult {
    pub maps: RenderedMaps,
    pub diagnostics: RasterDiagnostics,
}

const MAX_CONDITION: f64 = 1e12;

struct BoundSplat {
    mean: Vector2<f64>,
    inv_cov: Matrix2<f64>,
    z: f64,
    alpha: f64,
    class: u8,
    /// Inclusive pixel bounds (x0, x1, y0, y1).
    px: (usize, usize, usize, usize),
}

/// Rasterize a set of Gaussians through `cam`.
pub fn rasterize(
    gaussians: &[GaussianPrimitive],
    cam: &CameraModel,
    options: &RenderOptions,
) -> Result<RenderResult, SplatError> {
    if options.tile < 1 {
        return Err(SplatError::BadParams("tile must be >= 1".into()));
    }
    if !(options.alpha_min > 0.0 && options.alpha_min < 1.0) {
        return Err(SplatError::BadParams("alpha_min must be in (0,1)".into()));
    }
    let (w, h) = (cam.width as usize, cam.height as usize);

    // Project. Parallel with order restored by collect.
    let projected: Vec<Option<ProjectedBound>> = gaussians
        .par_iter()
        .map(|g| project_one(g, cam, options))
        .collect::<Result<_, _>>()?;

    let mut diagnostics = RasterDiagnostics::default();
    let mut splats: Vec<BoundSplat> = Vec::with_capacity(gaussians.len());
    for p in projected {
        match p {
            Some(ProjectedBound::Drawable(s)) => splats.push(s),
            Some(ProjectedBound::Singular) => diagnostics.skipped_singular += 1,
            None => diagnostics.culled += 1,
        }
    }
    diagnostics.drawn = splats.len();

    // Front-to-back with a total order: z, then insertion index (stable sort).
    splats.sort_by(|a, b| a.z.partial_cmp(&b.z).unwrap());

    // Tile binning. Iterating splats in sorted order keeps tile lists sorted.
    let tiles_x = w.div_ceil(options.tile);
    let tiles_y = h.div_ceil(options.tile);
    let mut tile_lists: Vec<Vec<u32>> = vec![Vec::new(); tiles_x * tiles_y];
    for (i, s) in splats.iter().enumerate() {
        let (x0, x1, y0, y1) = s.px;
        for ty in (y0 / options.tile)..=(y1 / options.tile) {
            for tx in (x0 / options.tile)..=(x1 / options.tile) {
                tile_lists[ty * tiles_x + tx].push(i as u32);
            }
        }
    }

    let n_classes = splats.iter().map(|s| s.class as usize + 1).max().unwrap_or(1);
    let maps_parts: Vec<TileOut> = (0..tiles_x * tiles_y)
        .into_par_iter()
        .map(|t| composite_tile(t, tiles_x, &tile_lists[t], &splats, w, h, n_classes, options))
        .collect();

    let mut maps = RenderedMaps::zeros(w, h);
    for part in maps_parts {
        for (local, pixel) in part.pixels.iter().enumerate() {
            let idx = part.index_of(local, w);
            maps.depth[idx] = pixel.depth;
            maps.semantic[idx] = pixel.class;
            maps.coverage[idx] = pixel.coverage;
        }
    }
    Ok(RenderResult { maps, diagnostics })
}

enum ProjectedBound {
    Drawable(BoundSplat),
    Singular,
}

fn project_one(
    g: &GaussianPrimitive,
    cam: &CameraModel,
    options: &RenderOptions,
) -> Result<Option<ProjectedBound>, SplatError> {
    let splat = match options.backend {
        Backend::Ewa => project_ewa(g, cam),
        Backend::Ut => project_ut(g, cam, &options.ut)?,
    };
    let Some(s) = splat else {
        return Ok(None);
    };
    if g.opacity < options.alpha_min {
        // Can never clear the alpha gate anywhere.
        return Ok(None);
    }

    // Condition check on the symmetric 2x2.
    let tr = s.cov.trace();
    let det = s.cov.determinant();
    if !(det > 0.0) {
        return Ok(Some(ProjectedBound::Singular));
    }
    let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
    let (l_max, l_min) = (tr / 2.0 + disc, tr / 2.0 - disc);
    if !(l_min > 0.0) || l_max / l_min > MAX_CONDITION {
        return Ok(Some(ProjectedBound::Singular));
    }
    let inv_cov = Matrix2::new(s.cov[(1, 1)], -s.cov[(0, 1)], -s.cov[(1, 0)], s.cov[(0, 0)]) / det;

    // Radius where alpha·exp(-q/2) falls to alpha_min; every pixel whose
    // center can clear the gate lies inside it.
    let r = (2.0 * (g.opacity / options.alpha_min).ln()).sqrt();
    let half_x = r * s.cov[(0, 0)].sqrt();
    let half_y = r * s.cov[(1, 1)].sqrt();
    let (w, h) = (cam.width as f64, cam.height as f64);
    // Pixel centers are at integer + 0.5; pad a little so boundary pixels
    // land inside (extra pixels fail the alpha gate and change nothing).
    let x0 = s.mean.x - half_x - 0.5 - 1e-6;
    let x1 = s.mean.x + half_x - 0.5 + 1e-6;
    let y0 = s.mean.y - half_y - 0.5 - 1e-6;
    let y1 = s.mean.y + half_y - 0.5 + 1e-6;
    if x1 < 0.0 || y1 < 0.0 || x0 > w - 1.0 || y0 > h - 1.0 {
        return Ok(None); // entirely off-image
    }
    let px = (
        x0.max(0.0).ceil() as usize,
        x1.min(w - 1.0).floor() as usize,
        y0.max(0.0).ceil() as usize,
        y1.min(h - 1.0).floor() as usize,
    );
    if px.0 > px.1 || px.2 > px.3 {
        return Ok(None);
    }
    Ok(Some(ProjectedBound::Drawable(BoundSplat {
        mean: s.mean,
        inv_cov,
        z: s.z,
        alpha: g.opacity,
        class: g.class_id,
        px,
    })))
}

#[derive(Clone, Copy, Default)]
struct PixelOut {
    depth: f64,
    class: u8,
    coverage: f64,
}

struct TileOut {
    x0: usize,
    y0: usize,
    width: usize,
    pixels: Vec<PixelOut>,
}

impl TileOut {
    fn index_of(&self, local: usize, image_width: usize) -> usize {
        let lx = local % self.width;
        let ly = local / self.width;
        (self.y0 + ly) * image_width + self.x0 + lx
    }
}

#[allow(clippy::too_many_arguments)]
fn composite_tile(
    tile: usize,
    tiles_x: usize,
    list: &[u32],
    splats: &[BoundSplat],
    w: usize,
    h: usize,
    n_classes: usize,
    options: &RenderOptions,
) -> TileOut {
    let tx = tile % tiles_x;
    let ty = tile / tiles_x;
    let x0 = tx * options.tile;
    let y0 = ty * options.tile;
    let tw = options.tile.min(w - x0);
    let th = options.tile.min(h - y0);
    let mut out = TileOut {
        x0,
        y0,
        width: tw,
        pixels: vec![PixelOut::default(); tw * th],
    };
    if list.is_empty() {
        return out;
    }
    let mut class_acc = vec![0.0f64; n_classes];
    for ly in 0..th {
        for lx in 0..tw {
            let px = (x0 + lx) as f64 + 0.5;
            let py = (y0 + ly) as f64 + 0.5;
            class_acc.fill(0.0);
            let mut depth_acc = 0.0;
            let mut cov_acc = 0.0;
            let mut transmittance = 1.0;
            for &si in list {
                let s = &splats[si as usize];
                // Cheap reject: inclusive pixel bounds.
                let (bx0, bx1, by0, by1) = s.px;
                let (ix, iy) = (x0 + lx, y0 + ly);
                if ix < bx0 || ix > bx1 || iy < by0 || iy > by1 {
                    continue;
                }
                let d = Vector2::new(px - s.mean.x, py - s.mean.y);
                let q = d.dot(&(s.inv_cov * d));
                let alpha = s.alpha * (-0.5 * q).exp();
                if alpha < options.alpha_min {
                    continue;
                }
                let weight = alpha * transmittance;
                depth_acc += s.z * weight;
                class_acc[s.class as usize] += weight;
                cov_acc += weight;
                transmittance *= 1.0 - alpha;
                if transmittance < options.transmittance_stop {
                    break;
                }
            }
            let pixel = &mut out.pixels[ly * tw + lx];
            pixel.coverage = cov_acc;
            if cov_acc > 0.0 {
                pixel.depth = if options.normalize_depth { depth_acc / cov_acc } else { depth_acc };
                let mut best = 0usize;
                let mut best_w = 0.0;
                for (c, &cw) in class_acc.iter().enumerate() {
                    if cw > best_w {
                        best_w = cw;
                        best = c;
                    }
                }
                pixel.class = best as u8;
            }
        }
    }
    out
}

/// Convert a grid into Gaussians and rasterize each camera in turn.
pub fn render_views(
    grid: &SemanticOccupancyGrid,
    cams: &[CameraModel],
    scale: f64,
    opacity: f64,
    options: &RenderOptions,
) -> Result<Vec<RenderResult>, SplatError> {
    if cams.is_empty() {
        return Err(SplatError::BadParams("need at least one camera".into()));
    }
    let gaussians = occupancy_to_gaussians(grid, scale, opacity)?;
    cams.iter().map(|c| rasterize(&gaussians, c, options)).collect()
}
