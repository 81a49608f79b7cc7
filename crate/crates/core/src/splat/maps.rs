//! On-disk forms of rendered maps: 16-bit PGM depth in millimeters, raw f32
//! depth ("DPTH"), 8-bit PGM semantics, and a PPM palette visualization.

use std::io::{Read, Write};
use std::path::Path;

use super::RenderedMaps;
use crate::grid::ClassTable;
use crate::io::IoError;

/// Depth as 16-bit PGM in millimeters; 0 = no coverage.
pub fn write_depth_pgm16(path: &Path, maps: &RenderedMaps) -> Result<(), IoError> {
    let mm: Vec<u16> = maps
        .depth
        .iter()
        .zip(&maps.coverage)
        .map(|(&d, &c)| {
            if c > 0.0 {
                (d * 1000.0).round().clamp(1.0, u16::MAX as f64) as u16
            } else {
                0
            }
        })
        .collect();
    crate::io::write_pgm16(path, maps.width, maps.height, &mm)
}

/// Raw f32 depth: magic "DPTH", H u32, W u32 (little-endian), then row-major
/// f32 meters. 0 = no coverage.
pub fn write_depth_raw(path: &Path, maps: &RenderedMaps) -> Result<(), IoError> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    w.write_all(b"DPTH")?;
    w.write_all(&(maps.height as u32).to_le_bytes())?;
    w.write_all(&(maps.width as u32).to_le_bytes())?;
    for (&d, &c) in maps.depth.iter().zip(&maps.coverage) {
        let v = if c > 0.0 { d as f32 } else { 0.0 };
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_depth_raw(path: &Path) -> Result<(usize, usize, Vec<f32>), IoError> {
    let mut r = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != b"DPTH" {
        return Err(IoError::Format("bad DPTH magic".into()));
    }
    let mut b4 = [0u8; 4];
    r.read_exact(&mut b4)?;
    let h = u32::from_le_bytes(b4) as usize;
    r.read_exact(&mut b4)?;
    let w = u32::from_le_bytes(b4) as usize;
    let mut data = vec![0f32; w * h];
    for v in &mut data {
        r.read_exact(&mut b4)?;
        *v = f32::from_le_bytes(b4);
    }
    Ok((h, w, data))
}

/// Semantic class ids as 8-bit PGM.
pub fn write_semantic_pgm8(path: &Path, maps: &RenderedMaps) -> Result<(), IoError> {
    crate::io::write_pgm8(path, maps.width, maps.height, &maps.semantic)
}

/// Semantic map colored by the class-table palette.
pub fn write_semantic_ppm(path: &Path, maps: &RenderedMaps, table: &ClassTable) -> Result<(), IoError> {
    let mut rgb = Vec::with_capacity(maps.semantic.len() * 3);
    for &c in &maps.semantic {
        rgb.extend_from_slice(&table.color(c));
    }
    crate::io::write_ppm(path, maps.width, maps.height, &rgb)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_maps() -> RenderedMaps {
        RenderedMaps {
            width: 2,
            height: 2,
            depth: vec![1.5, 0.0, 70.0, 0.123],
            semantic: vec![2, 0, 9, 1],
            coverage: vec![1.0, 0.0, 0.5, 0.8],
        }
    }

    #[test]
    fn depth_raw_roundtrip() {
        let dir = std::env::temp_dir().join("occuforge_dpth");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("d.bin");
        let maps = tiny_maps();
        write_depth_raw(&path, &maps).unwrap();
        let (h, w, data) = read_depth_raw(&path).unwrap();
        assert_eq!((h, w), (2, 2));
        assert_eq!(data, vec![1.5, 0.0, 70.0, 0.123]);
    }

    #[test]
    fn pgm_depth_is_mm_with_zero_for_no_coverage() {
        let dir = std::env::temp_dir().join("occuforge_dpgm");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("d.pgm");
        write_depth_pgm16(&path, &tiny_maps()).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        // payload = last 8 bytes, big-endian u16
        let p = &bytes[bytes.len() - 8..];
        let vals: Vec<u16> = p.chunks(2).map(|c| u16::from_be_bytes([c[0], c[1]])).collect();
        assert_eq!(vals, vec![1500, 0, 65535, 123]);
    }

    #[test]
    fn semantic_ppm_uses_palette() {
        let dir = std::env::temp_dir().join("occuforge_sppm");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("s.ppm");
        let table = ClassTable::default();
        write_semantic_ppm(&path, &tiny_maps(), &table).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        let payload = &bytes[bytes.len() - 12..];
        assert_eq!(&payload[0..3], &table.color(2));
        assert_eq!(&payload[3..6], &[0, 0, 0]);
    }
}
