//! Exact Euclidean distance transform over the voxel grid.
//!
//! Per-axis lower-envelope propagation (squared distances) with nearest-site
//! tracking; the final distance is recomputed from the winning site with the
//! same expression a brute-force nearest-neighbor scan would use, so results
//! match the O(N²) oracle. Lines are independent, so each pass parallelizes.

use rayon::prelude::*;

use super::{GridError, SemanticOccupancyGrid};

const NO_SITE: u32 = u32::MAX;

/// Per-thread buffers for one 1D envelope pass.
#[derive(Default)]
struct Scratch {
    f: Vec<f64>,
    s: Vec<u32>,
    hull: Vec<usize>,
    bound: Vec<f64>,
    out_d: Vec<f64>,
    out_s: Vec<u32>,
}

impl Scratch {
    fn ensure(&mut self, len: usize) {
        self.f.resize(len, 0.0);
        self.s.resize(len, 0);
        self.hull.resize(len, 0);
        self.bound.resize(len + 2, 0.0);
        self.out_d.resize(len, 0.0);
        self.out_s.resize(len, 0);
    }
}

/// Lower envelope of the parabolas rooted at the finite entries of
/// `scratch.f`, evaluated at every position. Reads `f`/`s`, writes
/// `out_d`/`out_s` (then the caller copies them out).
fn envelope(scratch: &mut Scratch, len: usize, spacing: f64) -> bool {
    let f = &scratch.f[..len];
    if !f.iter().any(|v| v.is_finite()) {
        return false;
    }
    let hull = &mut scratch.hull;
    let bound = &mut scratch.bound;
    let mut k = 0usize;
    let mut started = false;
    for q in 0..len {
        if !f[q].is_finite() {
            continue;
        }
        let pos_q = q as f64 * spacing;
        let fq = f[q] + pos_q * pos_q;
        if !started {
            hull[0] = q;
            bound[0] = f64::NEG_INFINITY;
            bound[1] = f64::INFINITY;
            started = true;
            continue;
        }
        loop {
            let p = hull[k];
            let pos_p = p as f64 * spacing;
            let fp = f[p] + pos_p * pos_p;
            let s = (fq - fp) / (2.0 * (pos_q - pos_p));
            if s <= bound[k] && k > 0 {
                k -= 1;
            } else {
                hull[k + 1] = q;
                bound[k + 1] = s;
                bound[k + 2] = f64::INFINITY;
                k += 1;
                break;
            }
        }
    }
    let mut j = 0usize;
    for i in 0..len {
        let pos = i as f64 * spacing;
        while bound[j + 1] < pos {
            j += 1;
        }
        let p = hull[j];
        let dp = pos - p as f64 * spacing;
        scratch.out_d[i] = dp * dp + f[p];
        scratch.out_s[i] = scratch.s[p];
    }
    true
}

/// Distance (meters, between voxel centers) from every voxel to the nearest
/// voxel satisfying `seed`. `None` when no voxel does.
fn transform(grid: &SemanticOccupancyGrid, seed: impl Fn(u8) -> bool + Sync) -> Option<Vec<f64>> {
    let [h, w, d] = grid.dims();
    let n = grid.len();
    assert!(n < NO_SITE as usize, "grid too large for u32 site indices");
    let mut dist2 = vec![0f64; n];
    let mut site = vec![0u32; n];
    const CHUNK: usize = 1 << 16;
    let any = dist2
        .par_chunks_mut(CHUNK)
        .zip(site.par_chunks_mut(CHUNK))
        .enumerate()
        .map(|(ci, (dc, sc))| {
            let base = ci * CHUNK;
            let classes = &grid.classes()[base..base + dc.len()];
            let mut any = false;
            for k in 0..dc.len() {
                if seed(classes[k]) {
                    dc[k] = 0.0;
                    sc[k] = (base + k) as u32;
                    any = true;
                } else {
                    dc[k] = f64::INFINITY;
                    sc[k] = NO_SITE;
                }
            }
            any
        })
        .reduce(|| false, |a, b| a || b);
    if !any {
        return None;
    }
    let vs = grid.voxel_size();

    // x pass: lines are contiguous runs of length h.
    dist2
        .par_chunks_mut(h)
        .zip(site.par_chunks_mut(h))
        .for_each_init(Scratch::default, |scratch, (df, ds)| {
            scratch.ensure(h);
            scratch.f[..h].copy_from_slice(df);
            scratch.s[..h].copy_from_slice(ds);
            if envelope(scratch, h, vs.x) {
                df.copy_from_slice(&scratch.out_d[..h]);
                ds.copy_from_slice(&scratch.out_s[..h]);
            }
        });

    // y pass: parallel over z-slabs, strided lines inside each slab.
    dist2
        .par_chunks_mut(w * h)
        .zip(site.par_chunks_mut(w * h))
        .for_each_init(Scratch::default, |scratch, (df, ds)| {
            scratch.ensure(w);
            for x in 0..h {
                for y in 0..w {
                    scratch.f[y] = df[y * h + x];
                    scratch.s[y] = ds[y * h + x];
                }
                if envelope(scratch, w, vs.y) {
                    for y in 0..w {
                        df[y * h + x] = scratch.out_d[y];
                        ds[y * h + x] = scratch.out_s[y];
                    }
                }
            }
        });

    // z pass: transpose into z-contiguous columns, sweep, transpose back.
    let mut td = vec![0f64; n];
    let mut ts = vec![0u32; n];
    td.par_chunks_mut(d)
        .zip(ts.par_chunks_mut(d))
        .enumerate()
        .for_each_init(Scratch::default, |scratch, (col, (cf, cs))| {
            let (x, y) = (col / w, col % w);
            scratch.ensure(d);
            for z in 0..d {
                scratch.f[z] = dist2[(z * w + y) * h + x];
                scratch.s[z] = site[(z * w + y) * h + x];
            }
            if envelope(scratch, d, vs.z) {
                cf.copy_from_slice(&scratch.out_d[..d]);
                cs.copy_from_slice(&scratch.out_s[..d]);
            } else {
                cf.copy_from_slice(&scratch.f[..d]);
                cs.copy_from_slice(&scratch.s[..d]);
            }
        });

    // Exact distance from the winning site, same formula as the oracle.
    let out: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let a = grid.voxel_of_linear(i);
            let [x, y, z] = a;
            let s = ts[(x * w + y) * d + z] as usize;
            let b = grid.voxel_of_linear(s);
            let dx = (a[0] as f64 - b[0] as f64) * vs.x;
            let dy = (a[1] as f64 - b[1] as f64) * vs.y;
            let dz = (a[2] as f64 - b[2] as f64) * vs.z;
            (dx * dx + dy * dy + dz * dz).sqrt()
        })
        .collect();
    Some(out)
}

/// Per-voxel Euclidean distance (meters) to the nearest non-empty voxel
/// center; zero at non-empty voxels. Errors when the grid is all empty.
pub fn unsigned_distance_field(grid: &SemanticOccupancyGrid) -> Result<Vec<f64>, GridError> {
    transform(grid, |c| c != 0).ok_or(GridError::NoOccupiedVoxels)
}

/// Distance to the nearest *empty* voxel center (zero at empty voxels).
/// `None` when the grid has no empty voxel.
pub fn distance_to_empty(grid: &SemanticOccupancyGrid) -> Option<Vec<f64>> {
    transform(grid, |c| c == 0)
}
