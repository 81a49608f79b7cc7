//! Occupancy IoU / mIoU between a predicted and a ground-truth grid.

use std::collections::BTreeMap;

use serde::Serialize;

use super::{GridError, SemanticOccupancyGrid};

#[derive(Debug, Clone, Serialize)]
pub struct IouReport {
    /// IoU of the binary occupied/empty masks.
    pub iou_occupied: f64,
    /// Per-class IoU for every non-empty class present in either grid.
    pub per_class_iou: BTreeMap<u8, f64>,
    /// Mean per-class IoU over classes present in the ground truth.
    pub miou: f64,
}

pub fn iou_miou(pred: &SemanticOccupancyGrid, gt: &SemanticOccupancyGrid) -> Result<IouReport, GridError> {
    if pred.dims() != gt.dims() {
        return Err(GridError::DimsMismatch(pred.dims(), gt.dims()));
    }

    let mut occ_inter = 0usize;
    let mut occ_union = 0usize;
    // class -> (intersection, pred count, gt count)
    let mut counts: BTreeMap<u8, (usize, usize, usize)> = BTreeMap::new();
    for (&p, &g) in pred.classes().iter().zip(gt.classes()) {
        if p != 0 || g != 0 {
            occ_union += 1;
            if p != 0 && g != 0 {
                occ_inter += 1;
            }
        }
        if p != 0 {
            counts.entry(p).or_default().1 += 1;
        }
        if g != 0 {
            counts.entry(g).or_default().2 += 1;
        }
        if p != 0 && p == g {
            counts.entry(p).or_default().0 += 1;
        }
    }

    let iou_occupied = if occ_union == 0 { 1.0 } else { occ_inter as f64 / occ_union as f64 };
    let mut per_class_iou = BTreeMap::new();
    let mut miou_sum = 0.0;
    let mut miou_n = 0usize;
    for (&class, &(inter, np, ng)) in &counts {
        let union = np + ng - inter;
        let iou = if union == 0 { 1.0 } else { inter as f64 / union as f64 };
        per_class_iou.insert(class, iou);
        if ng > 0 {
            miou_sum += iou;
            miou_n += 1;
        }
    }
    let miou = if miou_n == 0 { 1.0 } else { miou_sum / miou_n as f64 };
    Ok(IouReport {
        iou_occupied,
        per_class_iou,
        miou,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector3;

    fn grid_2x2x1(classes: [u8; 4]) -> SemanticOccupancyGrid {
        SemanticOccupancyGrid::from_parts(
            [2, 2, 1],
            Vector3::new(1.0, 1.0, 1.0),
            Vector3::zeros(),
            classes.to_vec(),
        )
        .unwrap()
    }

    #[test]
    fn identical_grids_are_perfect() {
        let g = grid_2x2x1([1, 0, 2, 0]);
        let r = iou_miou(&g, &g).unwrap();
        assert_eq!(r.iou_occupied, 1.0);
        assert_eq!(r.miou, 1.0);
    }

    #[test]
    fn empty_pred_is_zero() {
        let pred = grid_2x2x1([0, 0, 0, 0]);
        let gt = grid_2x2x1([1, 1, 0, 0]);
        let r = iou_miou(&pred, &gt).unwrap();
        assert_eq!(r.iou_occupied, 0.0);
        assert_eq!(r.miou, 0.0);
    }

    #[test]
    fn hand_counted_case() {
        // gt: class 1 at voxels 0 and 1. pred: class 1 at voxel 0 plus a wrong voxel 2.
        let gt = grid_2x2x1([1, 1, 0, 0]);
        let pred = grid_2x2x1([1, 0, 1, 0]);
        let r = iou_miou(&pred, &gt).unwrap();
        assert!((r.per_class_iou[&1] - 1.0 / 3.0).abs() < 1e-12);
        assert!((r.miou - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn class_absent_from_gt_excluded_from_miou() {
        let gt = grid_2x2x1([1, 1, 0, 0]);
        let pred = grid_2x2x1([1, 1, 7, 0]);
        let r = iou_miou(&pred, &gt).unwrap();
        // class 7 shows up in the per-class table but not in miou
        assert_eq!(r.per_class_iou[&7], 0.0);
        assert_eq!(r.miou, 1.0);
    }

    #[test]
    fn dims_mismatch_errors() {
        let a = grid_2x2x1([0; 4]);
        let b = SemanticOccupancyGrid::empty([2, 2, 2], Vector3::new(1.0, 1.0, 1.0), Vector3::zeros()).unwrap();
        assert!(iou_miou(&a, &b).is_err());
    }
}
