//! OCCG binary grid format (little-endian).
//!
//! Layout: magic "OCCG", version u32 = 1, H u32, W u32, D u32,
//! voxel_size 3×f32, origin 3×f32, layout tag u8 (0 = x-fastest,
//! index = (z·W + y)·H + x), 3 reserved bytes, then H·W·D class-id bytes.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::Vector3;

use super::{GridError, SemanticOccupancyGrid};

const MAGIC: &[u8; 4] = b"OCCG";
const VERSION: u32 = 1;

impl SemanticOccupancyGrid {
    pub fn write_occg<W: Write>(&self, mut w: W) -> Result<(), GridError> {
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        for d in self.dims() {
            w.write_all(&(d as u32).to_le_bytes())?;
        }
        for a in 0..3 {
            w.write_all(&(self.voxel_size()[a] as f32).to_le_bytes())?;
        }
        for a in 0..3 {
            w.write_all(&(self.origin()[a] as f32).to_le_bytes())?;
        }
        w.write_all(&[0u8; 4])?; // layout tag 0 + reserved
        w.write_all(self.classes())?;
        Ok(())
    }

    pub fn read_occg<R: Read>(mut r: R) -> Result<Self, GridError> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(GridError::Format(format!("bad magic {magic:?}")));
        }
        let version = read_u32(&mut r)?;
        if version != VERSION {
            return Err(GridError::Format(format!("unsupported version {version}")));
        }
        let dims = [read_u32(&mut r)? as usize, read_u32(&mut r)? as usize, read_u32(&mut r)? as usize];
        let voxel_size = Vector3::new(read_f32(&mut r)? as f64, read_f32(&mut r)? as f64, read_f32(&mut r)? as f64);
        let origin = Vector3::new(read_f32(&mut r)? as f64, read_f32(&mut r)? as f64, read_f32(&mut r)? as f64);
        let mut tag = [0u8; 4];
        r.read_exact(&mut tag)?;
        if tag[0] != 0 {
            return Err(GridError::Format(format!("unknown layout tag {}", tag[0])));
        }
        let n = dims[0]
            .checked_mul(dims[1])
            .and_then(|v| v.checked_mul(dims[2]))
            .ok_or_else(|| GridError::Format("dims overflow".into()))?;
        let mut classes = vec![0u8; n];
        r.read_exact(&mut classes)?;
        Self::from_parts(dims, voxel_size, origin, classes)
    }

    pub fn save_occg(&self, path: &Path) -> Result<(), GridError> {
        let file = std::fs::File::create(path)?;
        self.write_occg(std::io::BufWriter::new(file))
    }

    pub fn load_occg(path: &Path) -> Result<Self, GridError> {
        let file = std::fs::File::open(path)?;
        Self::read_occg(std::io::BufReader::new(file))
    }
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32, GridError> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f32<R: Read>(r: &mut R) -> Result<f32, GridError> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(f32::from_le_bytes(b))
}
