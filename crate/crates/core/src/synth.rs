//! Analytic synthetic scenes: voxelized grids plus the closed-form surface
//! primitives they were built from, so tests can compare simulation output
//! against exact ray intersections.

use nalgebra::{Matrix3, Vector3};

use crate::cloud::{transform_points, PointCloud};
use crate::curation::{BevMap, CurationConfig, Frame, ScenarioClip};
use crate::geom::{OrientedBox, RigidTransform};
use crate::grid::{ClassTable, SemanticOccupancyGrid};
use crate::rng::SplitMix64;

/// Closed-form scene primitive. Material sits behind the stated surface:
/// slabs own [near, far), the ground plane owns the layer below it.
#[derive(Debug, Clone)]
pub enum Surface {
    /// Horizontal ground plane at `z`; material below.
    GroundPlane { z: f64, class: u8 },
    /// Wall slab normal to x at `[x0, x1)`, bounded in y and z.
    WallX { x0: f64, x1: f64, y: (f64, f64), z: (f64, f64), class: u8 },
    /// Wall slab normal to y at `[y0, y1)`, bounded in x and z.
    WallY { y0: f64, y1: f64, x: (f64, f64), z: (f64, f64), class: u8 },
    /// Solid box.
    Box(OrientedBox),
}

impl Surface {
    /// Nearest positive ray parameter hitting this surface, if any.
    pub fn ray_hit(&self, o: &Vector3<f64>, v: &Vector3<f64>) -> Option<f64> {
        match self {
            Surface::GroundPlane { z, .. } => {
                if v.z.abs() < 1e-12 {
                    return None;
                }
                let t = (z - o.z) / v.z;
                (t > 0.0).then_some(t)
            }
            Surface::WallX { x0, x1, y, z, .. } => slab_hit(o, v, 0, (*x0, *x1), (1, *y), (2, *z)),
            Surface::WallY { y0, y1, x, z, .. } => slab_hit(o, v, 1, (*y0, *y1), (0, *x), (2, *z)),
            Surface::Box(b) => {
                // slab method in the box frame
                let ol = b.to_local(o);
                let vl = b.rotation.transpose() * v;
                let mut t_enter = f64::NEG_INFINITY;
                let mut t_exit = f64::INFINITY;
                for a in 0..3 {
                    let h = b.half_extents[a];
                    if vl[a].abs() < 1e-12 {
                        if ol[a].abs() > h {
                            return None;
                        }
                        continue;
                    }
                    let t1 = (-h - ol[a]) / vl[a];
                    let t2 = (h - ol[a]) / vl[a];
                    t_enter = t_enter.max(t1.min(t2));
                    t_exit = t_exit.min(t1.max(t2));
                }
                (t_enter <= t_exit && t_enter > 0.0).then_some(t_enter)
            }
        }
    }

    fn class(&self) -> u8 {
        match self {
            Surface::GroundPlane { class, .. } => *class,
            Surface::WallX { class, .. } => *class,
            Surface::WallY { class, .. } => *class,
            Surface::Box(b) => b.class_id,
        }
    }
}

fn slab_hit(
    o: &Vector3<f64>,
    v: &Vector3<f64>,
    axis: usize,
    range: (f64, f64),
    bound_a: (usize, (f64, f64)),
    bound_b: (usize, (f64, f64)),
) -> Option<f64> {
    if v[axis].abs() < 1e-12 {
        return None;
    }
    let (t1, t2) = ((range.0 - o[axis]) / v[axis], (range.1 - o[axis]) / v[axis]);
    let t = t1.min(t2);
    if t <= 0.0 {
        return None;
    }
    let p = o + v * t;
    let in_bounds = |(ax, (lo, hi)): (usize, (f64, f64))| p[ax] >= lo && p[ax] <= hi;
    (in_bounds(bound_a) && in_bounds(bound_b)).then_some(t)
}

/// A voxelized scene together with its analytic primitives.
#[derive(Debug, Clone)]
pub struct LidarScene {
    pub grid: SemanticOccupancyGrid,
    pub surfaces: Vec<Surface>,
}

impl LidarScene {
    /// Analytic first-hit depth for a ray.
    pub fn analytic_depth(&self, o: &Vector3<f64>, v: &Vector3<f64>) -> Option<f64> {
        self.surfaces
            .iter()
            .filter_map(|s| s.ray_hit(o, v))
            .min_by(|a, b| a.partial_cmp(b).unwrap())
    }

    fn voxelize_surfaces(surfaces: &[Surface], dims: [usize; 3], voxel: f64, origin: Vector3<f64>) -> SemanticOccupancyGrid {
        let mut grid = SemanticOccupancyGrid::empty(dims, Vector3::repeat(voxel), origin).unwrap();
        for z in 0..dims[2] {
            for y in 0..dims[1] {
                for x in 0..dims[0] {
                    let c = grid.voxel_to_world_center([x, y, z]);
                    for s in surfaces {
                        let inside = match s {
                            Surface::GroundPlane { z: gz, .. } => c.z < *gz && c.z >= gz - voxel,
                            Surface::WallX { x0, x1, y: yr, z: zr, .. } => {
                                c.x >= *x0 && c.x < *x1 && c.y >= yr.0 && c.y <= yr.1 && c.z >= zr.0 && c.z <= zr.1
                            }
                            Surface::WallY { y0, y1, x: xr, z: zr, .. } => {
                                c.y >= *y0 && c.y < *y1 && c.x >= xr.0 && c.x <= xr.1 && c.z >= zr.0 && c.z <= zr.1
                            }
                            Surface::Box(b) => b.contains(&c),
                        };
                        if inside {
                            grid.set([x, y, z], s.class());
                            break;
                        }
                    }
                }
            }
        }
        grid
    }
}

/// A single wall 20 m ahead (configurable), spanning the grid's y/z extent.
/// Grid: 400×400×32 voxels at 0.25 m, origin (−50, −50, −4).
pub fn wall_scene(distance: f64) -> LidarScene {
    let voxel = 0.25;
    let origin = Vector3::new(-50.0, -50.0, -4.0);
    let dims = [400, 400, 32];
    // snap the wall's near face onto a voxel boundary
    let x0 = (distance / voxel).round() * voxel;
    let surfaces = vec![Surface::WallX {
        x0,
        x1: x0 + voxel,
        y: (-50.0, 50.0),
        z: (-4.0, 4.0),
        class: 6,
    }];
    let grid = LidarScene::voxelize_surfaces(&surfaces, dims, voxel, origin);
    LidarScene { grid, surfaces }
}

/// Street scene: ground plane at z = 0, side walls at y = ±12, and two rows
/// of parked boxes. Same grid frame as [`wall_scene`].
pub fn box_street_scene() -> LidarScene {
    let voxel = 0.25;
    let origin = Vector3::new(-50.0, -50.0, -4.0);
    let dims = [400, 400, 32];
    let mut surfaces = vec![
        Surface::GroundPlane { z: 0.0, class: 9 },
        Surface::WallY {
            y0: 12.0,
            y1: 12.25,
            x: (-50.0, 50.0),
            z: (0.0, 3.0),
            class: 6,
        },
        Surface::WallY {
            y0: -12.25,
            y1: -12.0,
            x: (-50.0, 50.0),
            z: (0.0, 3.0),
            class: 6,
        },
    ];
    for k in 0..8 {
        let x = -28.0 + k as f64 * 8.0;
        for side in [-1.0, 1.0] {
            let b = OrientedBox::new(
                Vector3::new(x, side * 9.0, 0.75),
                Matrix3::identity(),
                Vector3::new(2.25, 1.0, 0.75),
                2,
                format!("parked_{k}_{}", if side > 0.0 { "l" } else { "r" }),
            )
            .unwrap();
            surfaces.push(Surface::Box(b));
        }
    }
    let grid = LidarScene::voxelize_surfaces(&surfaces, dims, voxel, origin);
    LidarScene { grid, surfaces }
}

/// A curation test clip: ground plane plus one moving box, sampled into
/// per-frame sweeps, with the analytic ground-truth grid at the reference
/// frame and a ready-to-use curation config.
#[derive(Debug, Clone)]
pub struct MovingBoxClip {
    pub clip: ScenarioClip,
    pub ground_truth: SemanticOccupancyGrid,
    pub config: CurationConfig,
    pub class_table: ClassTable,
}

pub struct MovingBoxParams {
    pub frames: usize,
    pub dt: f64,
    pub ego_speed: f64,
    pub box_speed: f64,
    pub sense_radius: f64,
    pub ground_spacing: f64,
    pub box_spacing: f64,
    pub noise: f64,
    pub seed: u64,
}

impl Default for MovingBoxParams {
    fn default() -> Self {
        Self {
            frames: 5,
            dt: 0.5,
            ego_speed: 3.0,
            box_speed: 2.0,
            sense_radius: 16.0,
            ground_spacing: 0.15,
            box_spacing: 0.08,
            noise: 0.003,
            seed: 17,
        }
    }
}

const GROUND_Z: f64 = 0.125; // a voxel-center plane of the output grid
const ROAD_HALF_WIDTH: f64 = 10.0;

pub fn moving_box_clip(params: &MovingBoxParams) -> MovingBoxClip {
    let mut rng = SplitMix64::new(params.seed);
    let voxel = 0.25;
    let half = Vector3::new(1.0, 0.75, 0.5);
    let box_center_at = |t: f64| Vector3::new(6.125, -1.875 + params.box_speed * t, GROUND_Z + half.z);
    let ego_at = |t: f64| RigidTransform::from_translation(Vector3::new(params.ego_speed * t, 0.0, 1.8));

    // box-local surface sample points (5 faces, bottom skipped)
    let mut box_local = Vec::new();
    let step = params.box_spacing;
    let lin = |a: f64, b: f64| {
        let n = ((b - a) / step).ceil() as usize;
        (0..=n).map(move |i| a + (b - a) * i as f64 / n as f64)
    };
    for x in lin(-half.x, half.x).collect::<Vec<_>>() {
        for y in lin(-half.y, half.y).collect::<Vec<_>>() {
            box_local.push(Vector3::new(x, y, half.z)); // top
        }
        for z in lin(-half.z, half.z).collect::<Vec<_>>() {
            box_local.push(Vector3::new(x, half.y, z));
            box_local.push(Vector3::new(x, -half.y, z));
        }
    }
    for y in lin(-half.y, half.y).collect::<Vec<_>>() {
        for z in lin(-half.z, half.z).collect::<Vec<_>>() {
            box_local.push(Vector3::new(half.x, y, z));
            box_local.push(Vector3::new(-half.x, y, z));
        }
    }

    let bev_label = |x: f64, y: f64| {
        let _ = x;
        if y.abs() < ROAD_HALF_WIDTH {
            9
        } else {
            1
        }
    };

    let mut frames = Vec::new();
    for i in 0..params.frames {
        let t = i as f64 * params.dt;
        let pose = ego_at(t);
        let center = box_center_at(t);
        let b = OrientedBox::new(center, Matrix3::identity(), half, 2, "mover").unwrap();
        let mut world = Vec::new();
        // ground disc around the ego
        let r = params.sense_radius;
        let n = (2.0 * r / params.ground_spacing) as i64;
        for gx in -n..=n {
            for gy in -n..=n {
                let x = pose.translation.x + gx as f64 * params.ground_spacing;
                let y = pose.translation.y + gy as f64 * params.ground_spacing;
                let dx = x - pose.translation.x;
                let dy = y - pose.translation.y;
                if dx * dx + dy * dy > r * r {
                    continue;
                }
                world.push(Vector3::new(x, y, GROUND_Z));
            }
        }
        for p in &box_local {
            world.push(b.to_world(p));
        }
        if params.noise > 0.0 {
            for p in &mut world {
                *p += Vector3::new(rng.normal(), rng.normal(), rng.normal()) * params.noise;
            }
        }
        frames.push(Frame {
            timestamp: t,
            ego_pose: pose,
            sweep: transform_points(&PointCloud::from_points(world), &pose.inverse()),
            boxes: vec![b],
        });
    }

    // BEV map: road strip bordered by other-ground.
    let bev_cell = 0.5;
    let bev_rows = 200;
    let bev_cols = 240;
    let bev_origin = [-50.0, -50.0];
    let mut bev = BevMap::uniform(bev_rows, bev_cols, bev_cell, bev_origin, 1);
    for row in 0..bev_rows {
        for col in 0..bev_cols {
            let x = bev_origin[0] + (col as f64 + 0.5) * bev_cell;
            let y = bev_origin[1] + (row as f64 + 0.5) * bev_cell;
            bev.labels[row * bev_cols + col] = bev_label(x, y);
        }
    }
    let clip = ScenarioClip { frames, bev };

    // Grid frame: origins on voxel boundaries so surfaces sit on
    // voxel-center planes.
    let reference = params.frames / 2;
    let t_ref = reference as f64 * params.dt;
    let ref_x = (params.ego_speed * t_ref / voxel).round() * voxel;
    let dims = [160, 160, 16];
    let origin = Vector3::new(ref_x - 20.0, -20.0, -2.0);

    // Analytic ground truth, mirroring the labeling precedence: box shell
    // first, then the ground shell with its BEV label.
    let mut gt = SemanticOccupancyGrid::empty(dims, Vector3::repeat(voxel), origin).unwrap();
    let ref_box = OrientedBox::new(box_center_at(t_ref), Matrix3::identity(), half, 2, "mover").unwrap();
    let half_voxel = 0.5 * voxel + 1e-4;
    let ego_xy: Vec<(f64, f64)> = (0..params.frames)
        .map(|i| {
            let p = ego_at(i as f64 * params.dt).translation;
            (p.x, p.y)
        })
        .collect();
    for z in 0..dims[2] {
        for y in 0..dims[1] {
            for x in 0..dims[0] {
                let c = gt.voxel_to_world_center([x, y, z]);
                if ref_box.signed_distance(&c).abs() <= half_voxel {
                    gt.set([x, y, z], 2);
                    continue;
                }
                if (c.z - GROUND_Z).abs() <= half_voxel {
                    let sensed = ego_xy
                        .iter()
                        .any(|&(ex, ey)| (c.x - ex).powi(2) + (c.y - ey).powi(2) <= params.sense_radius.powi(2));
                    if sensed {
                        gt.set([x, y, z], bev_label(c.x, c.y));
                    }
                }
            }
        }
    }

    let config = CurationConfig {
        dims,
        voxel_size: [voxel; 3],
        origin: Some([origin.x, origin.y, origin.z]),
        reference_frame: Some(reference),
        ..Default::default()
    };
    MovingBoxClip {
        clip,
        ground_truth: gt,
        config,
        class_table: ClassTable::default(),
    }
}
