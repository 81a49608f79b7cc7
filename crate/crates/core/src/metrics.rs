//! Point-cloud and occupancy evaluation statistics: BEV histograms, MMD,
//! Jensen-Shannon divergence, and chamfer distance.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cloud::PointCloud;
use crate::kdtree::KdTree;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("need at least {need} histograms per set, got {got}")]
    UndersizedSet { need: usize, got: usize },
    #[error("histogram not normalized (sum = {0})")]
    Unnormalized(f64),
    #[error("histogram shapes differ")]
    ShapeMismatch,
    #[error("point cloud is empty")]
    EmptyCloud,
}

/// BEV binning parameters: `nx × ny` cells over `[x_range] × [y_range]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BevBinning {
    pub nx: usize,
    pub ny: usize,
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
}

impl Default for BevBinning {
    fn default() -> Self {
        Self {
            nx: 100,
            ny: 100,
            x_range: (-50.0, 50.0),
            y_range: (-50.0, 50.0),
        }
    }
}

/// Normalized 2D histogram of point (x, y) positions.
#[derive(Debug, Clone)]
pub struct BevHistogram {
    pub nx: usize,
    pub ny: usize,
    /// Row-major (y outer, x inner), sums to 1 for non-empty input.
    pub bins: Vec<f64>,
    /// Points that fell outside the binning extent.
    pub out_of_range: usize,
    /// True when the input cloud had no in-range points.
    pub empty: bool,
}

pub fn bev_histogram(points: &PointCloud, binning: &BevBinning) -> BevHistogram {
    let mut counts = vec![0u64; binning.nx * binning.ny];
    let mut out_of_range = 0usize;
    let (x0, x1) = binning.x_range;
    let (y0, y1) = binning.y_range;
    for p in &points.points {
        let fx = (p.x - x0) / (x1 - x0) * binning.nx as f64;
        let fy = (p.y - y0) / (y1 - y0) * binning.ny as f64;
        if fx < 0.0 || fy < 0.0 || fx >= binning.nx as f64 || fy >= binning.ny as f64 {
            out_of_range += 1;
            continue;
        }
        counts[fy as usize * binning.nx + fx as usize] += 1;
    }
    let total: u64 = counts.iter().sum();
    let bins = if total == 0 {
        vec![0.0; counts.len()]
    } else {
        counts.iter().map(|&c| c as f64 / total as f64).collect()
    };
    BevHistogram {
        nx: binning.nx,
        ny: binning.ny,
        bins,
        out_of_range,
        empty: total == 0,
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Median pairwise Euclidean distance over all distinct pairs of the union.
/// Returns 1.0 when every pair coincides.
pub fn median_pairwise_distance(sets: &[&[BevHistogram]]) -> f64 {
    let all: Vec<&BevHistogram> = sets.iter().flat_map(|s| s.iter()).collect();
    let mut dists = Vec::new();
    for i in 0..all.len() {
        for j in (i + 1)..all.len() {
            dists.push(sq_dist(&all[i].bins, &all[j].bins).sqrt());
        }
    }
    if dists.is_empty() {
        return 1.0;
    }
    dists.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let m = dists[dists.len() / 2];
    if m > 0.0 {
        m
    } else {
        1.0
    }
}

/// Squared maximum mean discrepancy (V-statistic) between two sets of BEV
/// histograms under a Gaussian kernel. `sigma = None` uses the median
/// pairwise distance of the union as bandwidth.
///
/// The V-statistic form is exactly zero for identical multisets, which the
/// self-comparison contract requires; its small bias is irrelevant for the
/// relative comparisons reported here.
pub fn mmd(set_a: &[BevHistogram], set_b: &[BevHistogram], sigma: Option<f64>) -> Result<f64, MetricsError> {
    if set_a.len() < 2 {
        return Err(MetricsError::UndersizedSet { need: 2, got: set_a.len() });
    }
    if set_b.len() < 2 {
        return Err(MetricsError::UndersizedSet { need: 2, got: set_b.len() });
    }
    let dim = set_a[0].bins.len();
    if set_a.iter().chain(set_b).any(|h| h.bins.len() != dim) {
        return Err(MetricsError::ShapeMismatch);
    }
    let sigma = sigma.unwrap_or_else(|| median_pairwise_distance(&[set_a, set_b]));
    let k = |a: &BevHistogram, b: &BevHistogram| (-sq_dist(&a.bins, &b.bins) / (2.0 * sigma * sigma)).exp();

    let (m, n) = (set_a.len() as f64, set_b.len() as f64);
    let mut kaa = 0.0;
    for a1 in set_a {
        for a2 in set_a {
            kaa += k(a1, a2);
        }
    }
    let mut kbb = 0.0;
    for b1 in set_b {
        for b2 in set_b {
            kbb += k(b1, b2);
        }
    }
    let mut kab = 0.0;
    for a in set_a {
        for b in set_b {
            kab += k(a, b);
        }
    }
    Ok(kaa / (m * m) + kbb / (n * n) - 2.0 * kab / (m * n))
}

/// Jensen-Shannon divergence (natural log, bounded by ln 2) between two
/// normalized histograms.
pub fn jsd(h_a: &BevHistogram, h_b: &BevHistogram) -> Result<f64, MetricsError> {
    if h_a.bins.len() != h_b.bins.len() {
        return Err(MetricsError::ShapeMismatch);
    }
    for h in [h_a, h_b] {
        let sum: f64 = h.bins.iter().sum();
        if (sum - 1.0).abs() > 1e-6 {
            return Err(MetricsError::Unnormalized(sum));
        }
    }
    let kl_to_mid = |p: &[f64], q: &[f64]| {
        p.iter()
            .zip(q)
            .map(|(&a, &b)| {
                let m = 0.5 * (a + b);
                if a > 0.0 {
                    a * (a / m).ln()
                } else {
                    0.0
                }
            })
            .sum::<f64>()
    };
    Ok(0.5 * kl_to_mid(&h_a.bins, &h_b.bins) + 0.5 * kl_to_mid(&h_b.bins, &h_a.bins))
}

/// Symmetric chamfer distance: (mean NN distance A→B + mean NN B→A) / 2.
pub fn chamfer(a: &PointCloud, b: &PointCloud) -> Result<f64, MetricsError> {
    if a.is_empty() || b.is_empty() {
        return Err(MetricsError::EmptyCloud);
    }
    let one_way = |from: &[Vector3<f64>], to: &[Vector3<f64>]| {
        let tree = KdTree::build(to);
        let sum: f64 = from.iter().map(|p| tree.nearest_one(p).unwrap().1).sum();
        sum / from.len() as f64
    };
    Ok(0.5 * (one_way(&a.points, &b.points) + one_way(&b.points, &a.points)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn onehot(cell: usize) -> BevHistogram {
        let mut bins = vec![0.0; 4];
        bins[cell] = 1.0;
        BevHistogram {
            nx: 2,
            ny: 2,
            bins,
            out_of_range: 0,
            empty: false,
        }
    }

    #[test]
    fn bev_empty_cloud_flagged() {
        let h = bev_histogram(&PointCloud::default(), &BevBinning::default());
        assert!(h.empty);
        assert!(h.bins.iter().all(|&b| b == 0.0));
    }

    #[test]
    fn bev_all_in_one_cell() {
        let c = PointCloud::from_points(vec![Vector3::new(0.1, 0.1, 0.0); 5]);
        let h = bev_histogram(&c, &BevBinning::default());
        assert_eq!(h.bins.iter().filter(|&&b| b > 0.0).count(), 1);
        assert!((h.bins.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bev_lattice_is_flat() {
        // 100x100 lattice aligned to cell centers: exactly one point per cell.
        let mut pts = Vec::new();
        for i in 0..100 {
            for j in 0..100 {
                pts.push(Vector3::new(-50.0 + (i as f64 + 0.5), -50.0 + (j as f64 + 0.5), 0.0));
            }
        }
        let h = bev_histogram(&PointCloud::from_points(pts), &BevBinning::default());
        let max = h.bins.iter().cloned().fold(0.0, f64::max);
        let min = h.bins.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(max / min < 2.0);
        assert_eq!(h.out_of_range, 0);
    }

    #[test]
    fn mmd_identical_sets_is_zero() {
        let a = vec![onehot(0), onehot(1), onehot(2)];
        let v = mmd(&a, &a, None).unwrap();
        assert!(v.abs() < 1e-9, "got {v}");
    }

    #[test]
    fn mmd_is_symmetric() {
        let a = vec![onehot(0), onehot(1)];
        let b = vec![onehot(2), onehot(3)];
        let ab = mmd(&a, &b, Some(0.7)).unwrap();
        let ba = mmd(&b, &a, Some(0.7)).unwrap();
        assert!((ab - ba).abs() < 1e-12);
    }

    #[test]
    fn mmd_disjoint_onehots_closed_form() {
        // A = {e0, e0}, B = {e1, e1}: within-kernels are 1, cross distance^2 = 2.
        let a = vec![onehot(0), onehot(0)];
        let b = vec![onehot(1), onehot(1)];
        let sigma = 1.0;
        let c = (-2.0f64 / (2.0 * sigma * sigma)).exp();
        let expect = 2.0 * (1.0 - c);
        let got = mmd(&a, &b, Some(sigma)).unwrap();
        assert!((got - expect).abs() < 1e-12, "{got} vs {expect}");
    }

    #[test]
    fn mmd_undersized_errors() {
        let a = vec![onehot(0)];
        let b = vec![onehot(1), onehot(2)];
        assert!(mmd(&a, &b, None).is_err());
    }

    #[test]
    fn jsd_identical_zero_disjoint_ln2() {
        let a = onehot(0);
        let b = onehot(1);
        assert_eq!(jsd(&a, &a).unwrap(), 0.0);
        assert!((jsd(&a, &b).unwrap() - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn jsd_hand_evaluated_fixture() {
        // hA = (1,0), hB = (0.5,0.5), M = (0.75,0.25):
        //   KL(A||M) = ln(4/3)
        //   KL(B||M) = 0.5 ln(2/3) + 0.5 ln 2
        //   JSD = (KL(A||M) + KL(B||M)) / 2 = 0.21576155433883565
        let mk = |bins: Vec<f64>| BevHistogram {
            nx: 2,
            ny: 1,
            bins,
            out_of_range: 0,
            empty: false,
        };
        let a = mk(vec![1.0, 0.0]);
        let b = mk(vec![0.5, 0.5]);
        let hand = 0.5 * (4.0f64 / 3.0).ln() + 0.5 * (0.5 * (2.0f64 / 3.0).ln() + 0.5 * 2.0f64.ln());
        let got = jsd(&a, &b).unwrap();
        assert!((got - hand).abs() < 1e-12);
        assert!((got - 0.21576155433883565).abs() < 1e-12);
    }

    #[test]
    fn jsd_rejects_unnormalized() {
        let mut a = onehot(0);
        a.bins[1] = 0.5;
        assert!(matches!(jsd(&a, &a), Err(MetricsError::Unnormalized(_))));
    }

    #[test]
    fn chamfer_basics() {
        let a = PointCloud::from_points(vec![Vector3::new(0.0, 0.0, 0.0)]);
        let b = PointCloud::from_points(vec![Vector3::new(3.0, 0.0, 0.0)]);
        assert_eq!(chamfer(&a, &a).unwrap(), 0.0);
        assert_eq!(chamfer(&a, &b).unwrap(), 3.0);
        assert!(chamfer(&a, &PointCloud::default()).is_err());
    }

    #[test]
    fn chamfer_matches_brute_force_exactly() {
        let mut rng = SplitMix64::new(42);
        let mut mk = |n: usize| {
            PointCloud::from_points(
                (0..n)
                    .map(|_| Vector3::new(rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0)))
                    .collect(),
            )
        };
        let a = mk(100);
        let b = mk(120);
        let brute = |from: &PointCloud, to: &PointCloud| {
            let sum: f64 = from
                .points
                .iter()
                .map(|p| to.points.iter().map(|q| (p - q).norm()).fold(f64::INFINITY, f64::min))
                .sum();
            sum / from.len() as f64
        };
        let expect = 0.5 * (brute(&a, &b) + brute(&b, &a));
        assert_eq!(chamfer(&a, &b).unwrap(), expect);
    }

    #[test]
    fn chamfer_rigid_invariance() {
        use crate::geom::RigidTransform;
        let mut rng = SplitMix64::new(7);
        let a = PointCloud::from_points(
            (0..60)
                .map(|_| Vector3::new(rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0)))
                .collect(),
        );
        let b = PointCloud::from_points(
            (0..50)
                .map(|_| Vector3::new(rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0)))
                .collect(),
        );
        let t = RigidTransform::rotation_z(0.9).compose(&RigidTransform::from_translation(Vector3::new(5.0, -1.0, 2.0)));
        let d0 = chamfer(&a, &b).unwrap();
        let d1 = chamfer(&crate::cloud::transform_points(&a, &t), &crate::cloud::transform_points(&b, &t)).unwrap();
        assert!((d0 - d1).abs() < 1e-9);
    }
}
