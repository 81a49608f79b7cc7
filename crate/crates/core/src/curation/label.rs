//! Hybrid semantic labeling: boxes for foreground, BEV map for background.

use crate::curation::BevMap;
use crate::geom::OrientedBox;
use crate::grid::SemanticOccupancyGrid;

/// Label every occupied voxel: inside a box → the box's class (nearest
/// center on overlap); otherwise the BEV label under the voxel; outside the
/// BEV extent (or over an empty BEV cell) → `fallback_class`. The
/// occupied/empty mask is never changed.
pub fn hybrid_label(
    grid: &SemanticOccupancyGrid,
    boxes: &[OrientedBox],
    bev: &BevMap,
    fallback_class: u8,
) -> SemanticOccupancyGrid {
    let mut out = grid.clone();
    for idx in grid.occupied_indices() {
        let center = grid.voxel_to_world_center(grid.voxel_of_linear(idx));
        let mut best: Option<(u8, f64)> = None;
        for b in boxes {
            if b.contains(&center) {
                let d = (center - b.center).norm_squared();
                if best.map_or(true, |(_, bd)| d < bd) {
                    best = Some((b.class_id, d));
                }
            }
        }
        let class = match best {
            Some((c, _)) => c,
            None => match bev.label_at(center.x, center.y) {
                Some(l) if l != 0 => l,
                _ => fallback_class,
            },
        };
        let voxel = grid.voxel_of_linear(idx);
        out.set(voxel, class);
    }
    out
}
