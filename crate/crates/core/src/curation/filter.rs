//! Statistical outlier filtering of point clouds.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::kdtree::KdTree;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterMode {
    /// Per-point mean distance to the k nearest neighbors (standard
    /// statistical outlier removal).
    Knn,
    /// Distance to the cloud centroid; kept for fidelity experiments, it
    /// erases valid far geometry on large scenes.
    Centroid,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterParams {
    pub mode: FilterMode,
    pub k_neighbors: usize,
    /// Threshold multiplier: keep points with statistic < mean + k·stddev.
    pub k: f64,
}

impl Default for FilterParams {
    fn default() -> Self {
        Self {
            mode: FilterMode::Knn,
            k_neighbors: 16,
            k: 2.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FilterOutcome {
    pub cloud: PointCloud,
    pub removed: usize,
    /// Set when the cloud was too small to filter and passed through.
    pub warning: bool,
}

/// k-NN statistical filter with the default threshold rule.
pub fn statistical_filter(cloud: &PointCloud, k_neighbors: usize, k: f64) -> FilterOutcome {
    statistical_filter_with(
        cloud,
        &FilterParams {
            mode: FilterMode::Knn,
            k_neighbors,
            k,
        },
    )
}

pub fn statistical_filter_with(cloud: &PointCloud, params: &FilterParams) -> FilterOutcome {
    debug_assert!(params.k_neighbors >= 1 && params.k > 0.0);
    let n = cloud.len();
    let scores: Vec<f64> = match params.mode {
        FilterMode::Knn => {
            if n < params.k_neighbors + 1 {
                return FilterOutcome {
                    cloud: cloud.clone(),
                    removed: 0,
                    warning: true,
                };
            }
            let tree = KdTree::build(&cloud.points);
            cloud
                .points
                .par_iter()
                .enumerate()
                .map(|(i, p)| {
                    let nn = tree.k_nearest(p, params.k_neighbors, Some(i));
                    nn.iter().map(|&(_, d)| d).sum::<f64>() / nn.len() as f64
                })
                .collect()
        }
        FilterMode::Centroid => {
            if n == 0 {
                return FilterOutcome {
                    cloud: cloud.clone(),
                    removed: 0,
                    warning: false,
                };
            }
            let centroid = cloud.points.iter().sum::<nalgebra::Vector3<f64>>() / n as f64;
            cloud.points.iter().map(|p| (p - centroid).norm()).collect()
        }
    };
    if scores.is_empty() {
        return FilterOutcome {
            cloud: cloud.clone(),
            removed: 0,
            warning: false,
        };
    }
    let mean = scores.iter().sum::<f64>() / scores.len() as f64;
    let var = scores.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / scores.len() as f64;
    let std = var.sqrt();
    if std < 1e-12 {
        return FilterOutcome {
            cloud: cloud.clone(),
            removed: 0,
            warning: false,
        };
    }
    let threshold = mean + params.k * std;
    let keep: Vec<usize> = (0..n).filter(|&i| scores[i] < threshold).collect();
    FilterOutcome {
        removed: n - keep.len(),
        cloud: cloud.select(&keep),
        warning: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;
    use nalgebra::Vector3;

    #[test]
    fn empty_cloud_passes_through() {
        let out = statistical_filter(&PointCloud::default(), 8, 2.0);
        assert!(out.cloud.is_empty());
        assert!(out.warning); // 0 < k+1
    }

    /// Points of a regular polygon: every per-point kNN statistic is equal,
    /// so sigma degenerates and the filter must keep everything.
    fn regular_polygon(n: usize, radius: f64) -> Vec<Vector3<f64>> {
        (0..n)
            .map(|i| {
                let a = std::f64::consts::TAU * i as f64 / n as f64;
                Vector3::new(radius * a.cos(), radius * a.sin(), 0.0)
            })
            .collect()
    }

    #[test]
    fn degenerate_sigma_keeps_all() {
        let pts = regular_polygon(48, 5.0);
        let out = statistical_filter(&PointCloud::from_points(pts.clone()), 4, 2.0);
        assert_eq!(out.removed, 0);
        assert_eq!(out.cloud.len(), pts.len());
    }

    #[test]
    fn removes_far_outlier() {
        let mut rng = SplitMix64::new(12);
        let mut pts: Vec<Vector3<f64>> = (0..100)
            .map(|_| Vector3::new(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)))
            .collect();
        pts.push(Vector3::new(50.0, 0.0, 0.0));
        let mut cloud = PointCloud::from_points(pts);
        cloud.labels = Some((0..101).map(|i| (i % 7) as u8).collect());
        let out = statistical_filter(&cloud, 8, 2.0);
        assert_eq!(out.cloud.len(), 100);
        assert_eq!(out.removed, 1);
        assert!(out.cloud.points.iter().all(|p| p.norm() < 2.0));
        // attributes follow the kept points
        assert_eq!(out.cloud.labels.as_ref().unwrap().len(), 100);
    }

    #[test]
    fn brute_force_knn_scores_agree() {
        let mut rng = SplitMix64::new(5);
        let pts: Vec<Vector3<f64>> = (0..40)
            .map(|_| Vector3::new(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)))
            .collect();
        let k = 5;
        // brute-force per-point mean kNN distance
        let brute: Vec<f64> = (0..pts.len())
            .map(|i| {
                let mut d: Vec<f64> = (0..pts.len()).filter(|&j| j != i).map(|j| (pts[i] - pts[j]).norm()).collect();
                d.sort_by(|a, b| a.partial_cmp(b).unwrap());
                d[..k].iter().sum::<f64>() / k as f64
            })
            .collect();
        let mean = brute.iter().sum::<f64>() / brute.len() as f64;
        let std = (brute.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / brute.len() as f64).sqrt();
        let expect_removed = brute.iter().filter(|&&s| s >= mean + 2.0 * std).count();
        let out = statistical_filter(&PointCloud::from_points(pts), k, 2.0);
        assert_eq!(out.removed, expect_removed);
    }

    #[test]
    fn small_cloud_warns() {
        let pts = vec![Vector3::zeros(); 5];
        let out = statistical_filter(&PointCloud::from_points(pts), 8, 2.0);
        assert!(out.warning);
        assert_eq!(out.cloud.len(), 5);
    }

    #[test]
    fn idempotent_on_well_separated_cluster() {
        // tight regular cluster + clear outliers: the first pass removes the
        // outliers, the second finds a degenerate spread and removes nothing
        let mut pts = regular_polygon(48, 5.0);
        for i in 0..3 {
            pts.push(Vector3::new(40.0 + i as f64 * 10.0, 0.0, 0.0));
        }
        let first = statistical_filter(&PointCloud::from_points(pts), 4, 2.0);
        assert_eq!(first.removed, 3);
        let second = statistical_filter(&first.cloud, 4, 2.0);
        assert_eq!(second.removed, 0);
        assert_eq!(second.cloud.len(), first.cloud.len());
    }

    #[test]
    fn centroid_mode_uses_distance_to_mean() {
        let mut pts = vec![Vector3::zeros(); 50];
        pts.push(Vector3::new(10.0, 0.0, 0.0));
        let out = statistical_filter_with(
            &PointCloud::from_points(pts),
            &FilterParams {
                mode: FilterMode::Centroid,
                k_neighbors: 1,
                k: 2.0,
            },
        );
        assert_eq!(out.removed, 1);
    }
}
