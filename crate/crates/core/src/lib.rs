//! Deterministic geometric core for occupancy-centric driving-scene tooling.
//!
//! The crate is organized around three pipelines that share a small set of
//! domain types ([`geom`], [`cloud`], [`grid`]):
//!
//! * [`curation`]: turning multi-frame LiDAR clips into dense semantic
//!   occupancy grids (filtering, registration, separate foreground/background
//!   aggregation, densification, hybrid labeling).
//! * [`splat`]: converting occupancy into Gaussian primitives and rasterizing
//!   sparse depth/semantic point maps, with EWA and unscented-transform
//!   projection back ends.
//! * [`lidar`]: simulating multi-sensor LiDAR returns from occupancy via
//!   prior-guided ray sampling and SDF volume rendering.
//!
//! [`metrics`] provides the point-cloud/occupancy evaluation statistics and
//! [`synth`] the analytic scene generators used by the test suites.

pub mod cloud;
pub mod curation;
pub mod geom;
pub mod grid;
pub mod io;
pub mod kdtree;
pub mod lidar;
pub mod metrics;
pub mod rng;
pub mod splat;
pub mod synth;

pub use cloud::PointCloud;
pub use geom::{CameraModel, LidarRig, OrientedBox, Ray, RigidTransform};
pub use grid::{ClassTable, SemanticOccupancyGrid};
