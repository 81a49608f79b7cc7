use nalgebra::{Matrix3, Vector3};

use super::{GeomError, RigidTransform};

/// One LiDAR sensor: mount point and orientation in the ego frame, plus its
/// scan pattern as (azimuth, elevation) pairs in radians.
///
/// Direction convention: azimuth 0 / elevation 0 is the sensor +x axis, z is
/// up, azimuth grows counter-clockwise.
#[derive(Debug, Clone)]
pub struct LidarSensor {
    /// Sensor position in the ego frame (meters).
    pub origin: Vector3<f64>,
    /// Sensor → ego rotation.
    pub orientation: Matrix3<f64>,
    /// Scan pattern, (azimuth, elevation) radians.
    pub pattern: Vec<(f64, f64)>,
    pub max_range: f64,
}

impl LidarSensor {
    /// Unit direction in the sensor frame for an (azimuth, elevation) pair.
    pub fn direction(azimuth: f64, elevation: f64) -> Vector3<f64> {
        let (sa, ca) = azimuth.sin_cos();
        let (se, ce) = elevation.sin_cos();
        Vector3::new(ce * ca, ce * sa, se)
    }
}

/// A set of LiDAR sensors rigidly mounted on the ego vehicle.
#[derive(Debug, Clone)]
pub struct LidarRig {
    pub sensors: Vec<LidarSensor>,
}

impl LidarRig {
    pub fn new(sensors: Vec<LidarSensor>) -> Result<Self, GeomError> {
        if sensors.is_empty() {
            return Err(GeomError::BadRig("rig needs at least one sensor".into()));
        }
        for (i, s) in sensors.iter().enumerate() {
            if !(s.max_range > 0.0) {
                return Err(GeomError::BadRig(format!("sensor {i}: max_range must be positive")));
            }
            RigidTransform::new(s.orientation, Vector3::zeros())
                .map_err(|e| GeomError::BadRig(format!("sensor {i}: {e}")))?;
        }
        Ok(Self { sensors })
    }

    pub fn total_rays(&self, mask: &[usize]) -> usize {
        mask.iter().map(|&i| self.sensors[i].pattern.len()).sum()
    }

    /// World-frame rays for the selected sensors under an ego pose.
    ///
    /// One ray per pattern entry per selected sensor, in (sensor, pattern)
    /// order. Errors if the mask is empty or names an unknown sensor.
    pub fn rays_world(&self, ego_pose: &RigidTransform, sensor_mask: &[usize]) -> Result<Vec<Ray>, GeomError> {
        if sensor_mask.is_empty() {
            return Err(GeomError::NoSensorSelected);
        }
        for &i in sensor_mask {
            if i >= self.sensors.len() {
                return Err(GeomError::BadRig(format!(
                    "sensor index {i} out of range (rig has {})",
                    self.sensors.len()
                )));
            }
        }
        let mut rays = Vec::with_capacity(self.total_rays(sensor_mask));
        for &si in sensor_mask {
            let s = &self.sensors[si];
            let origin = ego_pose.apply(&s.origin);
            for (ri, &(az, el)) in s.pattern.iter().enumerate() {
                let dir_ego = s.orientation * LidarSensor::direction(az, el);
                rays.push(Ray {
                    origin,
                    dir: ego_pose.apply_dir(&dir_ego),
                    sensor: si,
                    index: ri,
                    max_range: s.max_range,
                });
            }
        }
        Ok(rays)
    }
}

/// A world-frame ray with its provenance in the rig.
#[derive(Debug, Clone, Copy)]
pub struct Ray {
    pub origin: Vector3<f64>,
    /// Unit direction.
    pub dir: Vector3<f64>,
    /// Sensor index in the rig.
    pub sensor: usize,
    /// Pattern index within the sensor.
    pub index: usize,
    pub max_range: f64,
}

impl Ray {
    pub fn at(&self, t: f64) -> Vector3<f64> {
        self.origin + self.dir * t
    }
}

/// Build a regular fan pattern: `rows` elevations × `cols` azimuths, both
/// inclusive of their end points (cols spanning the full circle wrap instead).
pub fn fan_pattern(rows: usize, cols: usize, el_range: (f64, f64), az_range: (f64, f64)) -> Vec<(f64, f64)> {
    let full_circle = (az_range.1 - az_range.0 - std::f64::consts::TAU).abs() < 1e-9;
    let mut pattern = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        let el = if rows == 1 {
            0.5 * (el_range.0 + el_range.1)
        } else {
            el_range.0 + (el_range.1 - el_range.0) * r as f64 / (rows - 1) as f64
        };
        for c in 0..cols {
            let az = if cols == 1 {
                0.5 * (az_range.0 + az_range.1)
            } else if full_circle {
                az_range.0 + (az_range.1 - az_range.0) * c as f64 / cols as f64
            } else {
                az_range.0 + (az_range.1 - az_range.0) * c as f64 / (cols - 1) as f64
            };
            pattern.push((az, el));
        }
    }
    pattern
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_sensor_rig(pattern: Vec<(f64, f64)>) -> LidarRig {
        LidarRig::new(vec![LidarSensor {
            origin: Vector3::new(0.5, 0.0, 1.8),
            orientation: Matrix3::identity(),
            pattern,
            max_range: 60.0,
        }])
        .unwrap()
    }

    #[test]
    fn forward_axis_convention() {
        let rig = one_sensor_rig(vec![(0.0, 0.0)]);
        let rays = rig.rays_world(&RigidTransform::identity(), &[0]).unwrap();
        assert_eq!(rays.len(), 1);
        assert!((rays[0].origin - Vector3::new(0.5, 0.0, 1.8)).norm() < 1e-12);
        assert!((rays[0].dir - Vector3::new(1.0, 0.0, 0.0)).norm() < 1e-9);
    }

    #[test]
    fn directions_are_unit() {
        let pattern = fan_pattern(8, 16, (-0.3, 0.1), (-1.0, 1.0));
        let rig = one_sensor_rig(pattern);
        for ray in rig.rays_world(&RigidTransform::identity(), &[0]).unwrap() {
            assert!((ray.dir.norm() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn mask_selects_sensor() {
        let mut sensors = Vec::new();
        for _ in 0..2 {
            sensors.push(LidarSensor {
                origin: Vector3::zeros(),
                orientation: Matrix3::identity(),
                pattern: fan_pattern(4, 4, (-0.1, 0.1), (-0.5, 0.5)),
                max_range: 30.0,
            });
        }
        let rig = LidarRig::new(sensors).unwrap();
        let rays = rig.rays_world(&RigidTransform::identity(), &[1]).unwrap();
        assert_eq!(rays.len(), 16);
        assert!(rays.iter().all(|r| r.sensor == 1));
    }

    #[test]
    fn empty_mask_is_error() {
        let rig = one_sensor_rig(vec![(0.0, 0.0)]);
        assert!(matches!(
            rig.rays_world(&RigidTransform::identity(), &[]),
            Err(GeomError::NoSensorSelected)
        ));
    }

    #[test]
    fn ego_pose_equivariance() {
        let pattern = fan_pattern(3, 5, (-0.2, 0.2), (-0.8, 0.8));
        let rig = one_sensor_rig(pattern);
        let base = rig.rays_world(&RigidTransform::identity(), &[0]).unwrap();
        let pose = RigidTransform::rotation_z(std::f64::consts::FRAC_PI_2);
        let rot = rig.rays_world(&pose, &[0]).unwrap();
        for (a, b) in base.iter().zip(&rot) {
            assert!((pose.apply_dir(&a.dir) - b.dir).norm() < 1e-9);
            assert!((pose.apply(&a.origin) - b.origin).norm() < 1e-9);
        }
    }

    #[test]
    fn full_circle_fan_has_distinct_azimuths() {
        let p = fan_pattern(1, 8, (0.0, 0.0), (-std::f64::consts::PI, std::f64::consts::PI));
        assert_eq!(p.len(), 8);
        // -pi included, +pi excluded (wraps onto -pi)
        assert!((p[0].0 + std::f64::consts::PI).abs() < 1e-12);
        assert!(p.iter().all(|&(az, _)| az < std::f64::consts::PI - 1e-9));
    }
}
