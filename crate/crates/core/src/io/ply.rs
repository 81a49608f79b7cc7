//! PLY point-cloud IO: ASCII and binary-little-endian, vertex element only.

use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::Vector3;

use super::IoError;
use crate::cloud::PointCloud;

/// Column payload for writing. Scalar PLY types only.
#[derive(Debug, Clone)]
pub enum ColumnData {
    F32(Vec<f32>),
    U8(Vec<u8>),
    U32(Vec<u32>),
}

impl ColumnData {
    fn len(&self) -> usize {
        match self {
            ColumnData::F32(v) => v.len(),
            ColumnData::U8(v) => v.len(),
            ColumnData::U32(v) => v.len(),
        }
    }

    fn type_name(&self) -> &'static str {
        match self {
            ColumnData::F32(_) => "float",
            ColumnData::U8(_) => "uchar",
            ColumnData::U32(_) => "uint",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Column {
    pub name: String,
    pub data: ColumnData,
}

impl Column {
    pub fn f32(name: &str, data: Vec<f32>) -> Self {
        Self {
            name: name.into(),
            data: ColumnData::F32(data),
        }
    }

    pub fn u8(name: &str, data: Vec<u8>) -> Self {
        Self {
            name: name.into(),
            data: ColumnData::U8(data),
        }
    }

    pub fn u32(name: &str, data: Vec<u32>) -> Self {
        Self {
            name: name.into(),
            data: ColumnData::U32(data),
        }
    }
}

/// Parsed PLY vertex data: per-property columns widened to f64.
#[derive(Debug, Clone)]
pub struct PlyData {
    pub names: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl PlyData {
    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.names.iter().position(|n| n == name).map(|i| self.columns[i].as_slice())
    }
}

pub fn write_ply(path: &Path, columns: &[Column], binary: bool) -> Result<(), IoError> {
    let n = columns.first().map_or(0, |c| c.data.len());
    for c in columns {
        if c.data.len() != n {
            return Err(IoError::Format(format!("column {} length mismatch", c.name)));
        }
    }
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "ply")?;
    writeln!(w, "format {} 1.0", if binary { "binary_little_endian" } else { "ascii" })?;
    writeln!(w, "element vertex {n}")?;
    for c in columns {
        writeln!(w, "property {} {}", c.data.type_name(), c.name)?;
    }
    writeln!(w, "end_header")?;
    if binary {
        for i in 0..n {
            for c in columns {
                match &c.data {
                    ColumnData::F32(v) => w.write_all(&v[i].to_le_bytes())?,
                    ColumnData::U8(v) => w.write_all(&[v[i]])?,
                    ColumnData::U32(v) => w.write_all(&v[i].to_le_bytes())?,
                }
            }
        }
    } else {
        for i in 0..n {
            let mut first = true;
            for c in columns {
                if !first {
                    write!(w, " ")?;
                }
                first = false;
                match &c.data {
                    ColumnData::F32(v) => write!(w, "{}", v[i])?,
                    ColumnData::U8(v) => write!(w, "{}", v[i])?,
                    ColumnData::U32(v) => write!(w, "{}", v[i])?,
                }
            }
            writeln!(w)?;
        }
    }
    Ok(())
}

/// Write a cloud as x,y,z float32 plus intensity/label channels when present.
pub fn write_ply_cloud(path: &Path, cloud: &PointCloud, binary: bool) -> Result<(), IoError> {
    let mut columns = vec![
        Column::f32("x", cloud.points.iter().map(|p| p.x as f32).collect()),
        Column::f32("y", cloud.points.iter().map(|p| p.y as f32).collect()),
        Column::f32("z", cloud.points.iter().map(|p| p.z as f32).collect()),
    ];
    if let Some(int) = &cloud.intensity {
        columns.push(Column::f32("intensity", int.clone()));
    }
    if let Some(lab) = &cloud.labels {
        columns.push(Column::u8("label", lab.clone()));
    }
    write_ply(path, &columns, binary)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum ScalarType {
    F32,
    F64,
    U8,
    I8,
    U16,
    I16,
    U32,
    I32,
}

impl ScalarType {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "float" | "float32" => Self::F32,
            "double" | "float64" => Self::F64,
            "uchar" | "uint8" => Self::U8,
            "char" | "int8" => Self::I8,
            "ushort" | "uint16" => Self::U16,
            "short" | "int16" => Self::I16,
            "uint" | "uint32" => Self::U32,
            "int" | "int32" => Self::I32,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            Self::U8 | Self::I8 => 1,
            Self::U16 | Self::I16 => 2,
            Self::F32 | Self::U32 | Self::I32 => 4,
            Self::F64 => 8,
        }
    }

    fn read_le(self, b: &[u8]) -> f64 {
        match self {
            Self::F32 => f32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            Self::F64 => f64::from_le_bytes(b[..8].try_into().unwrap()),
            Self::U8 => b[0] as f64,
            Self::I8 => b[0] as i8 as f64,
            Self::U16 => u16::from_le_bytes(b[..2].try_into().unwrap()) as f64,
            Self::I16 => i16::from_le_bytes(b[..2].try_into().unwrap()) as f64,
            Self::U32 => u32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            Self::I32 => i32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
        }
    }
}

pub fn read_ply(path: &Path) -> Result<PlyData, IoError> {
    let mut reader = BufReader::new(std::fs::File::open(path)?);
    let mut line = String::new();
    reader.read_line(&mut line)?;
    if line.trim() != "ply" {
        return Err(IoError::Format("not a PLY file".into()));
    }

    let mut binary = false;
    let mut count = 0usize;
    let mut props: Vec<(String, ScalarType)> = Vec::new();
    let mut in_vertex = false;
    loop {
        line.clear();
        if reader.read_line(&mut line)? == 0 {
            return Err(IoError::Format("unexpected end of header".into()));
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        match tokens.as_slice() {
            ["format", "ascii", _] => binary = false,
            ["format", "binary_little_endian", _] => binary = true,
            ["format", other, _] => return Err(IoError::Format(format!("unsupported format {other}"))),
            ["comment", ..] => {}
            ["element", "vertex", n] => {
                in_vertex = true;
                count = n.parse().map_err(|_| IoError::Format("bad vertex count".into()))?;
            }
            ["element", name, _] => {
                return Err(IoError::Format(format!("unsupported element {name}")));
            }
            ["property", "list", ..] => return Err(IoError::Format("list properties unsupported".into())),
            ["property", ty, name] if in_vertex => {
                let st = ScalarType::parse(ty).ok_or_else(|| IoError::Format(format!("unknown type {ty}")))?;
                props.push((name.to_string(), st));
            }
            ["end_header"] => break,
            _ => return Err(IoError::Format(format!("bad header line: {}", line.trim()))),
        }
    }
    if props.is_empty() {
        return Err(IoError::Format("no vertex properties".into()));
    }

    let mut columns: Vec<Vec<f64>> = props.iter().map(|_| Vec::with_capacity(count)).collect();
    if binary {
        let row_size: usize = props.iter().map(|(_, t)| t.size()).sum();
        let mut buf = vec![0u8; row_size];
        for _ in 0..count {
            reader.read_exact(&mut buf)?;
            let mut off = 0;
            for (ci, (_, t)) in props.iter().enumerate() {
                columns[ci].push(t.read_le(&buf[off..]));
                off += t.size();
            }
        }
    } else {
        for _ in 0..count {
            line.clear();
            if reader.read_line(&mut line)? == 0 {
                return Err(IoError::Format("unexpected end of data".into()));
            }
            let mut it = line.split_whitespace();
            for (ci, _) in props.iter().enumerate() {
                let tok = it.next().ok_or_else(|| IoError::Format("short data row".into()))?;
                columns[ci].push(tok.parse().map_err(|_| IoError::Format(format!("bad value {tok}")))?);
            }
        }
    }
    Ok(PlyData {
        names: props.into_iter().map(|(n, _)| n).collect(),
        columns,
    })
}

/// Read a PLY as a point cloud: x,y,z required, intensity and label optional.
pub fn read_ply_cloud(path: &Path) -> Result<PointCloud, IoError> {
    let data = read_ply(path)?;
    let x = data.column("x").ok_or_else(|| IoError::Format("missing x".into()))?;
    let y = data.column("y").ok_or_else(|| IoError::Format("missing y".into()))?;
    let z = data.column("z").ok_or_else(|| IoError::Format("missing z".into()))?;
    let points = x
        .iter()
        .zip(y)
        .zip(z)
        .map(|((&x, &y), &z)| Vector3::new(x, y, z))
        .collect();
    Ok(PointCloud {
        points,
        intensity: data.column("intensity").map(|c| c.iter().map(|&v| v as f32).collect()),
        labels: data.column("label").map(|c| c.iter().map(|&v| v as u8).collect()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> PointCloud {
        PointCloud {
            points: vec![Vector3::new(1.0, 2.0, 3.0), Vector3::new(-0.5, 0.25, 4.0)],
            intensity: Some(vec![0.1, 0.9]),
            labels: Some(vec![2, 9]),
        }
    }

    #[test]
    fn ascii_roundtrip() {
        let dir = std::env::temp_dir().join("occuforge_ply_ascii");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("c.ply");
        let c = sample();
        write_ply_cloud(&path, &c, false).unwrap();
        let back = read_ply_cloud(&path).unwrap();
        assert_eq!(back.len(), 2);
        assert!((back.points[1] - c.points[1]).norm() < 1e-6);
        assert_eq!(back.labels.unwrap(), vec![2, 9]);
    }

    #[test]
    fn binary_roundtrip() {
        let dir = std::env::temp_dir().join("occuforge_ply_bin");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("c.ply");
        let c = sample();
        write_ply_cloud(&path, &c, true).unwrap();
        let back = read_ply_cloud(&path).unwrap();
        assert_eq!(back.len(), 2);
        assert!((back.points[0] - c.points[0]).norm() < 1e-6);
        assert_eq!(back.intensity.unwrap(), vec![0.1, 0.9]);
    }

    #[test]
    fn extra_columns_roundtrip() {
        let dir = std::env::temp_dir().join("occuforge_ply_cols");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("sim.ply");
        let cols = vec![
            Column::f32("x", vec![1.0, 2.0]),
            Column::f32("y", vec![0.0, 0.0]),
            Column::f32("z", vec![0.5, 0.5]),
            Column::u8("sensor_id", vec![0, 1]),
            Column::u32("ray_id", vec![7, 123456]),
        ];
        write_ply(&path, &cols, true).unwrap();
        let data = read_ply(&path).unwrap();
        assert_eq!(data.column("ray_id").unwrap(), &[7.0, 123456.0]);
        assert_eq!(data.column("sensor_id").unwrap(), &[0.0, 1.0]);
    }

    #[test]
    fn rejects_garbage() {
        let dir = std::env::temp_dir().join("occuforge_ply_bad");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bad.ply");
        std::fs::write(&path, "not a ply\n").unwrap();
        assert!(read_ply(&path).is_err());
    }
}
