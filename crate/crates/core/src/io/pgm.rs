//! Netpbm images: 8/16-bit PGM and 24-bit PPM. 16-bit samples are
//! big-endian per the format specification.

use std::io::{BufWriter, Read, Write};
use std::path::Path;

use super::IoError;

pub fn write_pgm8(path: &Path, width: usize, height: usize, data: &[u8]) -> Result<(), IoError> {
    if data.len() != width * height {
        return Err(IoError::Format("pgm payload size mismatch".into()));
    }
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    write!(w, "P5\n{width} {height}\n255\n")?;
    w.write_all(data)?;
    Ok(())
}

pub fn write_pgm16(path: &Path, width: usize, height: usize, data: &[u16]) -> Result<(), IoError> {
    if data.len() != width * height {
        return Err(IoError::Format("pgm payload size mismatch".into()));
    }
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    write!(w, "P5\n{width} {height}\n65535\n")?;
    for &v in data {
        w.write_all(&v.to_be_bytes())?;
    }
    Ok(())
}

pub fn write_ppm(path: &Path, width: usize, height: usize, rgb: &[u8]) -> Result<(), IoError> {
    if rgb.len() != width * height * 3 {
        return Err(IoError::Format("ppm payload size mismatch".into()));
    }
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    write!(w, "P6\n{width} {height}\n255\n")?;
    w.write_all(rgb)?;
    Ok(())
}

/// Read an 8-bit binary PGM (P5, maxval <= 255).
pub fn read_pgm8(path: &Path) -> Result<(usize, usize, Vec<u8>), IoError> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    let mut pos = 0usize;

    let mut next_token = |bytes: &[u8]| -> Result<String, IoError> {
        // skip whitespace and '#' comments
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            break;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(IoError::Format("truncated pgm header".into()));
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };

    if next_token(&bytes)? != "P5" {
        return Err(IoError::Format("expected P5 pgm".into()));
    }
    let width: usize = next_token(&bytes)?.parse().map_err(|_| IoError::Format("bad width".into()))?;
    let height: usize = next_token(&bytes)?.parse().map_err(|_| IoError::Format("bad height".into()))?;
    let maxval: usize = next_token(&bytes)?.parse().map_err(|_| IoError::Format("bad maxval".into()))?;
    if maxval > 255 {
        return Err(IoError::Format("16-bit pgm not supported here".into()));
    }
    pos += 1; // single whitespace after maxval
    let need = width * height;
    if bytes.len() < pos + need {
        return Err(IoError::Format("pgm payload truncated".into()));
    }
    Ok((width, height, bytes[pos..pos + need].to_vec()))
}
