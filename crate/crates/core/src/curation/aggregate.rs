//! Multi-frame aggregation: background into the world frame with ICP
//! refinement, foreground objects into their box-local frames.

use nalgebra::Vector3;

use super::{icp_register, separate, statistical_filter_with, CurationError, FilterParams, IcpParams, ScenarioClip};
use crate::cloud::{to_box_frame, transform_points, PointCloud};
use crate::geom::RigidTransform;

#[derive(Debug, Clone)]
pub struct AggregatedBackground {
    /// Filtered background points of every frame, in the world frame.
    pub cloud: PointCloud,
    /// Per-point sensor origin (the corrected ego position of its frame).
    pub origins: Vec<Vector3<f64>>,
    /// Ego pose of each frame after ICP refinement.
    pub corrected_poses: Vec<RigidTransform>,
    /// Background points kept per frame after filtering.
    pub per_frame_kept: Vec<usize>,
    /// Frames whose clouds were too small to filter.
    pub filter_warnings: usize,
}

/// Filter each frame's background, transform to world, refine consecutive
/// frames with ICP, and concatenate.
pub fn aggregate_background(
    clip: &ScenarioClip,
    filter: &FilterParams,
    icp: &IcpParams,
    icp_enabled: bool,
) -> Result<AggregatedBackground, CurationError> {
    clip.validate()?;
    let mut out = AggregatedBackground {
        cloud: PointCloud::default(),
        origins: Vec::new(),
        corrected_poses: Vec::new(),
        per_frame_kept: Vec::new(),
        filter_warnings: 0,
    };
    let mut prev_cloud: Option<PointCloud> = None;
    for (fi, frame) in clip.frames.iter().enumerate() {
        let world = transform_points(&frame.sweep, &frame.ego_pose);
        let bg = separate(&world, &frame.boxes).background;
        let filtered = statistical_filter_with(&bg, filter);
        out.filter_warnings += filtered.warning as usize;
        let mut world_bg = filtered.cloud;

        let mut pose = frame.ego_pose;
        if icp_enabled && fi > 0 {
            let target = prev_cloud.as_ref().unwrap();
            let result = icp_register(&world_bg, target, &RigidTransform::identity(), icp).map_err(|e| {
                CurationError::Stage {
                    stage: "icp",
                    frame: fi,
                    source: Box::new(e),
                }
            })?;
            world_bg = transform_points(&world_bg, &result.transform);
            pose = result.transform.compose(&pose);
        }

        out.per_frame_kept.push(world_bg.len());
        out.origins.extend(std::iter::repeat(pose.translation).take(world_bg.len()));
        out.corrected_poses.push(pose);
        prev_cloud = Some(world_bg.clone());
        out.cloud.extend(&world_bg);
    }
    Ok(out)
}

/// Aggregate one track's points across frames into the object's local frame.
/// A point rigidly attached to the object lands at the same local
/// coordinates in every frame (up to pose noise).
pub fn aggregate_object(clip: &ScenarioClip, track_id: &str) -> Result<PointCloud, CurationError> {
    aggregate_object_with_origins(clip, track_id).map(|(c, _)| c)
}

/// Like [`aggregate_object`] but also returns the per-point sensor origin
/// expressed in the object's local frame (for carving during densification).
pub fn aggregate_object_with_origins(
    clip: &ScenarioClip,
    track_id: &str,
) -> Result<(PointCloud, Vec<Vector3<f64>>), CurationError> {
    clip.validate()?;
    let mut local = PointCloud::default();
    let mut origins = Vec::new();
    let mut seen = false;
    for frame in &clip.frames {
        let Some(b) = frame.boxes.iter().find(|b| b.track_id == track_id) else {
            continue;
        };
        seen = true;
        let world = transform_points(&frame.sweep, &frame.ego_pose);
        let separated = separate(&world, &frame.boxes);
        if let Some(obj) = separated.per_object.get(track_id) {
            let obj_local = to_box_frame(obj, b);
            let ego_local = b.to_local(&frame.ego_pose.translation);
            origins.extend(std::iter::repeat(ego_local).take(obj_local.len()));
            local.extend(&obj_local);
        }
    }
    if !seen {
        return Err(CurationError::UnknownTrack(track_id.to_string()));
    }
    Ok((local, origins))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curation::{BevMap, Frame};
    use crate::geom::OrientedBox;
    use crate::rng::SplitMix64;
    use nalgebra::Matrix3;

    fn ground_scene(rng: &mut SplitMix64, n: usize) -> Vec<Vector3<f64>> {
        (0..n)
            .map(|i| {
                let base = match i % 3 {
                    0 => Vector3::new(rng.uniform(-8.0, 8.0), rng.uniform(-8.0, 8.0), 0.0),
                    1 => Vector3::new(8.0, rng.uniform(-8.0, 8.0), rng.uniform(0.0, 2.0)),
                    _ => Vector3::new(rng.uniform(-8.0, 8.0), -8.0, rng.uniform(0.0, 2.0)),
                };
                base + Vector3::new(rng.normal(), rng.normal(), rng.normal()) * 0.005
            })
            .collect()
    }

    fn clip_from_world(world: &[Vector3<f64>], poses: Vec<RigidTransform>, boxes: Vec<Vec<OrientedBox>>) -> ScenarioClip {
        let frames = poses
            .into_iter()
            .zip(boxes)
            .enumerate()
            .map(|(i, (pose, boxes))| Frame {
                timestamp: i as f64 * 0.5,
                ego_pose: pose,
                sweep: transform_points(&PointCloud::from_points(world.to_vec()), &pose.inverse()),
                boxes,
            })
            .collect();
        ScenarioClip {
            frames,
            bev: BevMap::uniform(10, 10, 2.0, [-10.0, -10.0], 9),
        }
    }

    #[test]
    fn single_frame_identity_pose() {
        let mut rng = SplitMix64::new(10);
        let world = ground_scene(&mut rng, 400);
        let clip = clip_from_world(&world, vec![RigidTransform::identity()], vec![vec![]]);
        let agg = aggregate_background(&clip, &FilterParams::default(), &IcpParams::default(), true).unwrap();
        // equals its filtered sweep
        let expect = statistical_filter_with(&PointCloud::from_points(world), &FilterParams::default());
        assert_eq!(agg.cloud.len(), expect.cloud.len());
        assert_eq!(agg.origins.len(), agg.cloud.len());
    }

    #[test]
    fn exact_poses_give_near_identity_refinement() {
        let mut rng = SplitMix64::new(11);
        let world = ground_scene(&mut rng, 800);
        let poses = vec![
            RigidTransform::identity(),
            RigidTransform::from_translation(Vector3::new(1.0, 0.0, 0.0)),
        ];
        let clip = clip_from_world(&world, poses, vec![vec![], vec![]]);
        let agg = aggregate_background(&clip, &FilterParams::default(), &IcpParams::default(), true).unwrap();
        let (angle, dist) = clip.frames[1].ego_pose.delta(&agg.corrected_poses[1]);
        assert!(angle + dist < 1e-3, "refinement moved exact pose by {angle}+{dist}");
    }

    #[test]
    fn pose_error_reduced_by_refinement() {
        let mut rng = SplitMix64::new(12);
        let world = ground_scene(&mut rng, 1500);
        let true_pose1 = RigidTransform::from_translation(Vector3::new(1.5, 0.3, 0.0));
        // reported pose is off by 0.3 m
        let bad_pose1 = RigidTransform::from_translation(Vector3::new(1.8, 0.3, 0.0));

        let cloud = PointCloud::from_points(world.clone());
        let frames = vec![
            Frame {
                timestamp: 0.0,
                ego_pose: RigidTransform::identity(),
                sweep: cloud.clone(),
                boxes: vec![],
            },
            Frame {
                timestamp: 0.5,
                ego_pose: bad_pose1,
                sweep: transform_points(&cloud, &true_pose1.inverse()),
                boxes: vec![],
            },
        ];
        let clip = ScenarioClip {
            frames,
            bev: BevMap::uniform(4, 4, 5.0, [-10.0, -10.0], 9),
        };

        let cross_rmse = |clip: &ScenarioClip, refined: bool| {
            let agg = aggregate_background(clip, &FilterParams::default(), &IcpParams::default(), refined).unwrap();
            let n0 = agg.per_frame_kept[0];
            let a = PointCloud::from_points(agg.cloud.points[..n0].to_vec());
            let b = PointCloud::from_points(agg.cloud.points[n0..].to_vec());
            crate::metrics::chamfer(&a, &b).unwrap()
        };
        let before = cross_rmse(&clip, false);
        let after = cross_rmse(&clip, true);
        assert!(after < before * 0.5, "icp did not help: {before} -> {after}");
    }

    #[test]
    fn object_aggregation_in_local_frame() {
        // a moving box carrying a rigid point set
        let local_pts = vec![
            Vector3::new(0.5, 0.2, 0.1),
            Vector3::new(-0.5, -0.2, 0.0),
            Vector3::new(0.0, 0.4, -0.1),
        ];
        let mut frames = Vec::new();
        for i in 0..3 {
            let center = Vector3::new(i as f64 * 2.0, 1.0, 0.5);
            let rot = RigidTransform::rotation_z(0.2 * i as f64).rotation;
            let b = OrientedBox::new(center, rot, Vector3::new(1.0, 1.0, 1.0), 2, "car").unwrap();
            let world_pts: Vec<Vector3<f64>> = local_pts.iter().map(|p| b.to_world(p)).collect();
            frames.push(Frame {
                timestamp: i as f64 * 0.5,
                ego_pose: RigidTransform::identity(),
                sweep: PointCloud::from_points(world_pts),
                boxes: vec![b],
            });
        }
        let clip = ScenarioClip {
            frames,
            bev: BevMap::uniform(4, 4, 5.0, [-10.0, -10.0], 9),
        };
        let agg = aggregate_object(&clip, "car").unwrap();
        assert_eq!(agg.len(), 9);
        for (i, p) in agg.points.iter().enumerate() {
            let expect = local_pts[i % 3];
            assert!((p - expect).norm() < 1e-9, "copy {i} drifted: {p:?}");
        }
    }

    #[test]
    fn unknown_track_errors() {
        let clip = ScenarioClip {
            frames: vec![Frame {
                timestamp: 0.0,
                ego_pose: RigidTransform::identity(),
                sweep: PointCloud::default(),
                boxes: vec![],
            }],
            bev: BevMap::uniform(1, 1, 1.0, [0.0, 0.0], 0),
        };
        assert!(matches!(
            aggregate_object(&clip, "ghost"),
            Err(CurationError::UnknownTrack(_))
        ));
    }

    #[test]
    fn static_box_three_frames_coincide() {
        let b = OrientedBox::new(
            Vector3::new(3.0, 0.0, 0.5),
            Matrix3::identity(),
            Vector3::new(1.0, 0.8, 0.6),
            2,
            "parked",
        )
        .unwrap();
        let pts = vec![Vector3::new(3.2, 0.1, 0.4), Vector3::new(2.9, -0.3, 0.7)];
        let frames = (0..3)
            .map(|i| Frame {
                timestamp: i as f64,
                ego_pose: RigidTransform::identity(),
                sweep: PointCloud::from_points(pts.clone()),
                boxes: vec![b.clone()],
            })
            .collect();
        let clip = ScenarioClip {
            frames,
            bev: BevMap::uniform(1, 1, 100.0, [-50.0, -50.0], 9),
        };
        let agg = aggregate_object(&clip, "parked").unwrap();
        assert_eq!(agg.len(), 6);
        for i in 0..2 {
            let a = agg.points[i];
            for copy in 1..3 {
                assert!((agg.points[copy * 2 + i] - a).norm() < 1e-9);
            }
        }
    }
}
