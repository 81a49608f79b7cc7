//! Partition a frame's points into background and per-object foreground.

use std::collections::BTreeMap;

use crate::cloud::PointCloud;
use crate::geom::OrientedBox;

#[derive(Debug, Clone)]
pub struct Separated {
    pub background: PointCloud,
    /// Keyed by track id; deterministic iteration order.
    pub per_object: BTreeMap<String, PointCloud>,
}

/// Assign each point to the box containing it (boundary inclusive); points
/// inside several boxes go to the box with the nearest center. Everything
/// else is background. The output is an exact partition of the input.
pub fn separate(cloud: &PointCloud, boxes: &[OrientedBox]) -> Separated {
    let mut bg_idx = Vec::new();
    let mut obj_idx: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, p) in cloud.points.iter().enumerate() {
        let mut best: Option<(usize, f64)> = None;
        for (bi, b) in boxes.iter().enumerate() {
            if b.contains(p) {
                let d = (p - b.center).norm_squared();
                if best.map_or(true, |(_, bd)| d < bd) {
                    best = Some((bi, d));
                }
            }
        }
        match best {
            Some((bi, _)) => obj_idx.entry(boxes[bi].track_id.clone()).or_default().push(i),
            None => bg_idx.push(i),
        }
    }
    Separated {
        background: cloud.select(&bg_idx),
        per_object: obj_idx.into_iter().map(|(k, idx)| (k, cloud.select(&idx))).collect(),
    }
}
