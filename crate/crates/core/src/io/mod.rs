//! File formats: PLY point clouds and PGM/PPM images.

mod pgm;
mod ply;

pub use pgm::{read_pgm8, write_pgm16, write_pgm8, write_ppm};
pub use ply::{read_ply, read_ply_cloud, write_ply, write_ply_cloud, Column, ColumnData, PlyData};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
