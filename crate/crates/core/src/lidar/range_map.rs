//! Range-map projection (elevation × azimuth), the scanline smoothness
//! metric, and the RMAP binary format.

use std::io::{Read, Write};
use std::path::Path;

use super::LidarError;

/// Per-ray depths and histogram features on an elevation × azimuth raster.
/// Depth 0 means no return in that cell.
#[derive(Debug, Clone)]
pub struct RangeMap {
    pub rows: usize,
    pub cols: usize,
    pub hist_bins: usize,
    /// Row-major rows × cols.
    pub depth: Vec<f64>,
    /// hist_bins planes of rows × cols; plane c at `c·rows·cols`.
    pub hist: Vec<f64>,
}

impl RangeMap {
    pub fn new(rows: usize, cols: usize, hist_bins: usize) -> Self {
        Self {
            rows,
            cols,
            hist_bins,
            depth: vec![0.0; rows * cols],
            hist: vec![0.0; hist_bins * rows * cols],
        }
    }

    #[inline]
    pub fn depth_at(&self, row: usize, col: usize) -> f64 {
        self.depth[row * self.cols + col]
    }

    fn hist_at(&self, row: usize, col: usize) -> impl Iterator<Item = f64> + '_ {
        let (rows, cols) = (self.rows, self.cols);
        (0..self.hist_bins).map(move |c| self.hist[c * rows * cols + row * cols + col])
    }

    fn set_cell(&mut self, row: usize, col: usize, depth: f64, hist: &[f64]) {
        self.depth[row * self.cols + col] = depth;
        let (rows, cols) = (self.rows, self.cols);
        for (c, &v) in hist.iter().enumerate() {
            self.hist[c * rows * cols + row * cols + col] = v;
        }
    }
}

/// One projected return.
#[derive(Debug, Clone)]
pub struct RangeReturn<'a> {
    /// Ego-frame azimuth in [−π, π).
    pub azimuth: f64,
    /// Ego-frame elevation (radians).
    pub elevation: f64,
    pub depth: f64,
    pub hist: &'a [f64],
}

/// Project returns onto the raster. Rows bin elevation over
/// `[el_min, el_max]`, columns bin azimuth over [−π, π). The nearest depth
/// wins each cell and brings its histogram along.
pub fn range_project<'a>(
    returns: impl Iterator<Item = RangeReturn<'a>>,
    rows: usize,
    cols: usize,
    hist_bins: usize,
    el_range: (f64, f64),
) -> Result<RangeMap, LidarError> {
    if rows < 2 || cols < 2 {
        return Err(LidarError::BadConfig(format!("range map needs rows/cols >= 2, got {rows}x{cols}")));
    }
    let mut map = RangeMap::new(rows, cols, hist_bins);
    let el_span = el_range.1 - el_range.0;
    for r in returns {
        if !(r.depth > 0.0) {
            continue;
        }
        let row = if el_span > 1e-12 {
            (((r.elevation - el_range.0) / el_span * rows as f64).floor() as i64).clamp(0, rows as i64 - 1) as usize
        } else {
            0
        };
        let col = (((r.azimuth + std::f64::consts::PI) / std::f64::consts::TAU * cols as f64).floor() as i64)
            .clamp(0, cols as i64 - 1) as usize;
        let have = map.depth_at(row, col);
        if have == 0.0 || r.depth < have {
            map.set_cell(row, col, r.depth, r.hist);
        }
    }
    Ok(map)
}

/// Scanline smoothness: mean over azimuth-adjacent cell pairs (wrapping)
/// where both cells have returns of |∂d|·exp(−‖∂h‖₁). Returns the score and
/// the number of contributing pairs (0 pairs ⇒ score 0).
pub fn smoothness_loss(map: &RangeMap) -> (f64, usize) {
    let mut sum = 0.0;
    let mut count = 0usize;
    for row in 0..map.rows {
        for col in 0..map.cols {
            let next = (col + 1) % map.cols;
            let d0 = map.depth_at(row, col);
            let d1 = map.depth_at(row, next);
            if d0 == 0.0 || d1 == 0.0 {
                continue; // cells adjacent to drops are excluded
            }
            let dh: f64 = map
                .hist_at(row, col)
                .zip(map.hist_at(row, next))
                .map(|(a, b)| (a - b).abs())
                .sum();
            sum += (d1 - d0).abs() * (-dh).exp();
            count += 1;
        }
    }
    if count == 0 {
        (0.0, 0)
    } else {
        (sum / count as f64, count)
    }
}

const MAGIC: &[u8; 4] = b"RMAP";

/// RMAP binary: magic, H_d u32, W_d u32, C_h u32 (little-endian), then the
/// f32 depth plane and C_h f32 histogram planes, row-major.
pub fn write_rmap(path: &Path, map: &RangeMap) -> Result<(), LidarError> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&(map.rows as u32).to_le_bytes())?;
    w.write_all(&(map.cols as u32).to_le_bytes())?;
    w.write_all(&(map.hist_bins as u32).to_le_bytes())?;
    for &d in &map.depth {
        w.write_all(&(d as f32).to_le_bytes())?;
    }
    for &v in &map.hist {
        w.write_all(&(v as f32).to_le_bytes())?;
    }
    Ok(())
}

pub fn read_rmap(path: &Path) -> Result<RangeMap, LidarError> {
    let mut r = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(LidarError::BadConfig("bad RMAP magic".into()));
    }
    let mut b = [0u8; 4];
    let mut next_u32 = |r: &mut dyn Read| -> Result<u32, LidarError> {
        r.read_exact(&mut b)?;
        Ok(u32::from_le_bytes(b))
    };
    let rows = next_u32(&mut r)? as usize;
    let cols = next_u32(&mut r)? as usize;
    let hist_bins = next_u32(&mut r)? as usize;
    let mut map = RangeMap::new(rows, cols, hist_bins);
    let mut b4 = [0u8; 4];
    for v in map.depth.iter_mut() {
        r.read_exact(&mut b4)?;
        *v = f32::from_le_bytes(b4) as f64;
    }
    for v in map.hist.iter_mut() {
        r.read_exact(&mut b4)?;
        *v = f32::from_le_bytes(b4) as f64;
    }
    Ok(map)
}
