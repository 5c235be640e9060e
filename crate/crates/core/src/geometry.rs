//! Rigid-body math, the spherical range-image projection, pose interpolation
//! and per-point motion compensation.
//!
//! Conventions, fixed once for the whole crate:
//! - The sensor frame is x forward, y left, z up.
//! - Azimuth is `atan2(y, x)`, wrapped into `[azimuth_min, azimuth_min + 2π)`.
//!   `u = 0` at the azimuth minimum and u grows with azimuth.
//! - `v` grows with decreasing elevation (row 0 is the topmost ring).
//! - Projection yields continuous pixel coordinates; flooring to a bin
//!   happens only at rasterization time, which keeps the projection exactly
//!   invertible.

use alloc::vec::Vec;

use nalgebra::{Quaternion, UnitQuaternion, Vector3};
use thiserror::Error;

use crate::math;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("cannot project a zero-norm point")]
    ZeroNormPoint,
    #[error("range must be positive, got {0}")]
    NonPositiveRange(f64),
    #[error("rotation quaternion norm {0} is not 1")]
    NonUnitQuaternion(f64),
    #[error("invalid camera model: {0}")]
    InvalidModel(&'static str),
    #[error("trajectory is empty")]
    EmptyTrajectory,
    #[error("trajectory timestamps not strictly increasing at index {0}")]
    NonMonotoneTimestamps(usize),
    #[error("timestamp {t} outside trajectory span [{first}, {last}]")]
    TimestampOutOfSpan { t: f64, first: f64, last: f64 },
}

/// Time-stamped rigid transform of the ego vehicle: maps sensor-frame
/// coordinates into the map frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub timestamp: f64,
    pub rotation: UnitQuaternion<f64>,
    pub translation: Vector3<f64>,
}

impl Pose {
    pub fn new(timestamp: f64, rotation: UnitQuaternion<f64>, translation: Vector3<f64>) -> Self {
        Self {
            timestamp,
            rotation,
            translation,
        }
    }

    /// Builds a pose from raw quaternion components (w, x, y, z), checking
    /// the unit-norm invariant.
    pub fn from_parts(
        timestamp: f64,
        quat_wxyz: [f64; 4],
        translation: Vector3<f64>,
    ) -> Result<Self, GeometryError> {
        let q = Quaternion::new(quat_wxyz[0], quat_wxyz[1], quat_wxyz[2], quat_wxyz[3]);
        let norm = q.norm();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(GeometryError::NonUnitQuaternion(norm));
        }
        Ok(Self::new(
            timestamp,
            UnitQuaternion::new_normalize(q),
            translation,
        ))
    }

    pub fn identity(timestamp: f64) -> Self {
        Self::new(timestamp, UnitQuaternion::identity(), Vector3::zeros())
    }

    /// Sensor frame -> map frame.
    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    pub fn transform_vector(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * v
    }

    /// Map frame -> sensor frame.
    pub fn inverse_transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation.inverse() * (p - self.translation)
    }

    pub fn inverse(&self) -> Pose {
        let rot_inv = self.rotation.inverse();
        Pose::new(self.timestamp, rot_inv, -(rot_inv * self.translation))
    }

    /// `self ∘ rhs`: applies `rhs` first. The timestamp of `self` is kept.
    pub fn compose(&self, rhs: &Pose) -> Pose {
        Pose::new(
            self.timestamp,
            self.rotation * rhs.rotation,
            self.rotation * rhs.translation + self.translation,
        )
    }
}

/// Shortest-arc spherical linear interpolation between two unit quaternions.
pub fn slerp_shortest(
    q0: &UnitQuaternion<f64>,
    q1: &UnitQuaternion<f64>,
    s: f64,
) -> UnitQuaternion<f64> {
    let mut dot = q0.coords.dot(&q1.coords);
    let mut target = q1.coords;
    if dot < 0.0 {
        dot = -dot;
        target = -target;
    }
    let coords = if dot > 1.0 - 1e-12 {
        // Nearly identical rotations: linear blend avoids 0/0.
        q0.coords.lerp(&target, s)
    } else {
        let theta = math::acos(dot.clamp(-1.0, 1.0));
        let sin_theta = math::sin(theta);
        q0.coords * (math::sin((1.0 - s) * theta) / sin_theta)
            + target * (math::sin(s * theta) / sin_theta)
    };
    UnitQuaternion::new_normalize(Quaternion::from(coords))
}

/// Ordered sequence of poses with strictly increasing timestamps.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    poses: Vec<Pose>,
}

impl Trajectory {
    pub fn new(poses: Vec<Pose>) -> Result<Self, GeometryError> {
        if poses.is_empty() {
            return Err(GeometryError::EmptyTrajectory);
        }
        for i in 1..poses.len() {
            if poses[i].timestamp <= poses[i - 1].timestamp {
                return Err(GeometryError::NonMonotoneTimestamps(i));
            }
        }
        Ok(Self { poses })
    }

    pub fn poses(&self) -> &[Pose] {
        &self.poses
    }

    pub fn first_time(&self) -> f64 {
        self.poses[0].timestamp
    }

    pub fn last_time(&self) -> f64 {
        self.poses[self.poses.len() - 1].timestamp
    }

    pub fn contains_time(&self, t: f64) -> bool {
        t >= self.first_time() && t <= self.last_time()
    }

    /// Pose at time `t`: translation linearly interpolated, rotation
    /// spherically interpolated along the shortest arc. A stored timestamp
    /// reproduces the stored pose exactly.
    pub fn interpolate(&self, t: f64) -> Result<Pose, GeometryError> {
        if !self.contains_time(t) {
            return Err(GeometryError::TimestampOutOfSpan {
                t,
                first: self.first_time(),
                last: self.last_time(),
            });
        }
        // First pose with timestamp >= t.
        let idx = self.poses.partition_point(|p| p.timestamp < t);
        let upper = &self.poses[idx.min(self.poses.len() - 1)];
        if upper.timestamp == t {
            return Ok(Pose::new(t, upper.rotation, upper.translation));
        }
        let lower = &self.poses[idx - 1];
        if lower.timestamp == t {
            return Ok(Pose::new(t, lower.rotation, lower.translation));
        }
        let s = (t - lower.timestamp) / (upper.timestamp - lower.timestamp);
        Ok(Pose::new(
            t,
            slerp_shortest(&lower.rotation, &upper.rotation, s),
            lower.translation.lerp(&upper.translation, s),
        ))
    }
}

/// One LiDAR return in the sensor frame of its firing pose.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimedPoint {
    pub position: Vector3<f64>,
    /// Firing time within the scan, seconds.
    pub timestamp: f64,
    /// Measured range, meters; equals the position norm.
    pub range: f64,
}

impl TimedPoint {
    pub fn from_position(position: Vector3<f64>, timestamp: f64) -> Self {
        Self {
            position,
            timestamp,
            range: position.norm(),
        }
    }
}

/// Continuous pixel coordinate plus range produced by the spherical model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImagePoint {
    pub u: f64,
    pub v: f64,
    pub range: f64,
}

/// LiDAR range-image projection with independent horizontal and vertical
/// angular resolutions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphericalCameraModel {
    width: usize,
    height: usize,
    azimuth_range: [f64; 2],
    elevation_range: [f64; 2],
}

impl SphericalCameraModel {
    pub fn new(
        width: usize,
        height: usize,
        azimuth_range: [f64; 2],
        elevation_range: [f64; 2],
    ) -> Result<Self, GeometryError> {
        if width < 1 || height < 1 {
            return Err(GeometryError::InvalidModel("image dimensions must be >= 1"));
        }
        if !(azimuth_range[1] > azimuth_range[0]) {
            return Err(GeometryError::InvalidModel("azimuth range must be increasing"));
        }
        if azimuth_range[1] - azimuth_range[0] > math::TAU + 1e-12 {
            return Err(GeometryError::InvalidModel("azimuth span exceeds a full turn"));
        }
        if !(elevation_range[1] > elevation_range[0]) {
            return Err(GeometryError::InvalidModel("elevation range must be increasing"));
        }
        if elevation_range[0] < -math::PI / 2.0 - 1e-12
            || elevation_range[1] > math::PI / 2.0 + 1e-12
        {
            return Err(GeometryError::InvalidModel("elevation range outside ±π/2"));
        }
        Ok(Self {
            width,
            height,
            azimuth_range,
            elevation_range,
        })
    }

    /// Full 360° model centered on the forward axis.
    pub fn full_turn(
        width: usize,
        height: usize,
        elevation_range: [f64; 2],
    ) -> Result<Self, GeometryError> {
        Self::new(width, height, [-math::PI, math::PI], elevation_range)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn azimuth_range(&self) -> [f64; 2] {
        self.azimuth_range
    }

    pub fn elevation_range(&self) -> [f64; 2] {
        self.elevation_range
    }

    /// Radians per column.
    pub fn azimuth_resolution(&self) -> f64 {
        (self.azimuth_range[1] - self.azimuth_range[0]) / self.width as f64
    }

    /// Radians per row.
    pub fn elevation_resolution(&self) -> f64 {
        (self.elevation_range[1] - self.elevation_range[0]) / self.height as f64
    }

    /// Whether the azimuth span covers a full turn (the image wraps).
    pub fn wraps(&self) -> bool {
        (self.azimuth_range[1] - self.azimuth_range[0] - math::TAU).abs() < 1e-9
    }

    /// Projects a sensor-frame point, returning `None` when its azimuth or
    /// elevation falls outside the model ranges.
    pub fn project(&self, point: &Vector3<f64>) -> Result<Option<ImagePoint>, GeometryError> {
        let (azimuth, elevation, range) = self.angles_of(point)?;
        if !self.wraps() && azimuth >= self.azimuth_range[1] {
            return Ok(None);
        }
        if elevation < self.elevation_range[0] || elevation > self.elevation_range[1] {
            return Ok(None);
        }
        Ok(Some(self.image_point(azimuth, elevation, range)))
    }

    /// Projects without gating on the model ranges: elevation may map to a
    /// `v` outside `[0, height]`. Azimuth is still wrapped into the span's
    /// principal interval. Rasterizers clip explicitly.
    pub fn project_unbounded(&self, point: &Vector3<f64>) -> Result<ImagePoint, GeometryError> {
        let (azimuth, elevation, range) = self.angles_of(point)?;
        Ok(self.image_point(azimuth, elevation, range))
    }

    /// Inverse of [`Self::project`] for positive range.
    pub fn unproject(&self, u: f64, v: f64, range: f64) -> Result<Vector3<f64>, GeometryError> {
        if range <= 0.0 {
            return Err(GeometryError::NonPositiveRange(range));
        }
        let azimuth = self.azimuth_range[0] + u * self.azimuth_resolution();
        let elevation = self.elevation_range[1] - v * self.elevation_resolution();
        let (sin_el, cos_el) = (math::sin(elevation), math::cos(elevation));
        let (sin_az, cos_az) = (math::sin(azimuth), math::cos(azimuth));
        Ok(Vector3::new(
            range * cos_el * cos_az,
            range * cos_el * sin_az,
            range * sin_el,
        ))
    }

    /// Direction of the ray through pixel center `(col, row)`.
    pub fn pixel_ray(&self, col: usize, row: usize) -> Vector3<f64> {
        self.unproject(col as f64 + 0.5, row as f64 + 0.5, 1.0)
            .expect("unit range is positive")
    }

    fn angles_of(&self, point: &Vector3<f64>) -> Result<(f64, f64, f64), GeometryError> {
        let range = point.norm();
        if range == 0.0 {
            return Err(GeometryError::ZeroNormPoint);
        }
        let azimuth = math::wrap_angle(math::atan2(point.y, point.x), self.azimuth_range[0]);
        let elevation = math::atan2(point.z, math::hypot(point.x, point.y));
        Ok((azimuth, elevation, range))
    }

    fn image_point(&self, azimuth: f64, elevation: f64, range: f64) -> ImagePoint {
        ImagePoint {
            u: (azimuth - self.azimuth_range[0]) / self.azimuth_resolution(),
            v: (self.elevation_range[1] - elevation) / self.elevation_resolution(),
            range,
        }
    }
}

/// Shifts every LiDAR point as if it had been measured from the pose at
/// `reference_time`, assuming a static world. Fails for the whole scan if
/// any timestamp falls outside the trajectory span.
pub fn motion_compensate(
    points: &[TimedPoint],
    trajectory: &Trajectory,
    reference_time: f64,
) -> Result<Vec<Vector3<f64>>, GeometryError> {
    let reference = trajectory.interpolate(reference_time)?;
    let reference_inv = reference.inverse();
    let mut out = Vec::with_capacity(points.len());
    for point in points {
        let firing = trajectory.interpolate(point.timestamp)?;
        out.push(reference_inv.transform_point(&firing.transform_point(&point.position)));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn deg(d: f64) -> f64 {
        d.to_radians()
    }

    fn default_model() -> SphericalCameraModel {
        SphericalCameraModel::full_turn(1812, 128, [deg(-25.0), deg(15.0)]).unwrap()
    }

    #[test]
    fn forward_point_projects_to_image_center_columns() {
        // Symmetric elevation so the optical "center" is exactly mid-image.
        let model = SphericalCameraModel::full_turn(1812, 128, [deg(-20.0), deg(20.0)]).unwrap();
        let ip = model.project(&Vector3::new(10.0, 0.0, 0.0)).unwrap().unwrap();
        assert_relative_eq!(ip.u, 1812.0 / 2.0, epsilon = 1e-9);
        assert_relative_eq!(ip.v, 128.0 / 2.0, epsilon = 1e-9);
        assert_relative_eq!(ip.range, 10.0, epsilon = 1e-12);
    }

    #[test]
    fn out_of_elevation_range_is_absent() {
        let model = default_model();
        assert_eq!(model.project(&Vector3::new(0.0, 0.0, 5.0)).unwrap(), None);
    }

    #[test]
    fn zero_point_is_a_domain_error() {
        let model = default_model();
        assert_eq!(
            model.project(&Vector3::zeros()),
            Err(GeometryError::ZeroNormPoint)
        );
    }

    #[test]
    fn unproject_center_of_symmetric_model_is_forward() {
        let model = SphericalCameraModel::full_turn(64, 16, [deg(-10.0), deg(10.0)]).unwrap();
        let p = model.unproject(32.0, 8.0, 1.0).unwrap();
        assert_relative_eq!(p.x, 1.0, epsilon = 1e-12);
        assert_relative_eq!(p.y, 0.0, epsilon = 1e-12);
        assert_relative_eq!(p.z, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn unproject_rejects_nonpositive_range() {
        let model = default_model();
        assert!(matches!(
            model.unproject(1.0, 1.0, 0.0),
            Err(GeometryError::NonPositiveRange(_))
        ));
    }

    #[test]
    fn round_trip_on_all_pixel_centers_of_a_small_model() {
        let model = SphericalCameraModel::full_turn(91, 17, [deg(-25.0), deg(15.0)]).unwrap();
        for row in 0..model.height() {
            for col in 0..model.width() {
                let (u, v) = (col as f64 + 0.5, row as f64 + 0.5);
                let p = model.unproject(u, v, 7.5).unwrap();
                let ip = model.project(&p).unwrap().unwrap();
                assert!((ip.u - u).abs() < 1e-9, "col={col} row={row} u={}", ip.u);
                assert!((ip.v - v).abs() < 1e-9, "col={col} row={row} v={}", ip.v);
                assert!((ip.range - 7.5).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn random_in_range_points_round_trip() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let model = default_model();
        for _ in 0..1000 {
            let az = rng.random_range(-math::PI..math::PI);
            let el = rng.random_range(deg(-25.0)..deg(15.0));
            let r = rng.random_range(0.5..120.0);
            let p = Vector3::new(
                r * math::cos(el) * math::cos(az),
                r * math::cos(el) * math::sin(az),
                r * math::sin(el),
            );
            let ip = model.project(&p).unwrap().unwrap();
            let q = model.unproject(ip.u, ip.v, ip.range).unwrap();
            assert!((p - q).norm() <= 1e-9 * r.max(1.0), "p={p:?} q={q:?}");
        }
    }

    #[test]
    fn interpolate_reproduces_stored_pose_exactly() {
        let p0 = Pose::identity(0.0);
        let p1 = Pose::new(
            1.0,
            UnitQuaternion::from_euler_angles(0.0, 0.0, 1.0),
            Vector3::new(3.0, -1.0, 0.5),
        );
        let traj = Trajectory::new(vec![p0, p1]).unwrap();
        let q = traj.interpolate(1.0).unwrap();
        assert_eq!(q.rotation, p1.rotation);
        assert_eq!(q.translation, p1.translation);
    }

    #[test]
    fn interpolate_midpoint_translation() {
        let p0 = Pose::identity(0.0);
        let p1 = Pose::new(2.0, UnitQuaternion::identity(), Vector3::new(2.0, 0.0, 0.0));
        let traj = Trajectory::new(vec![p0, p1]).unwrap();
        let q = traj.interpolate(1.0).unwrap();
        assert_relative_eq!(q.translation.x, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn interpolate_midpoint_yaw_is_half() {
        let p0 = Pose::identity(0.0);
        let p1 = Pose::new(
            1.0,
            UnitQuaternion::from_euler_angles(0.0, 0.0, deg(90.0)),
            Vector3::zeros(),
        );
        let traj = Trajectory::new(vec![p0, p1]).unwrap();
        let q = traj.interpolate(0.5).unwrap();
        let (_, _, yaw) = q.rotation.euler_angles();
        assert_relative_eq!(yaw, deg(45.0), epsilon = 1e-9);
    }

    #[test]
    fn interpolate_outside_span_fails() {
        let traj = Trajectory::new(vec![Pose::identity(0.0), Pose::identity(1.0)]).unwrap();
        assert!(matches!(
            traj.interpolate(1.5),
            Err(GeometryError::TimestampOutOfSpan { .. })
        ));
    }

    #[test]
    fn trajectory_rejects_non_monotone_timestamps() {
        let poses = vec![Pose::identity(0.0), Pose::identity(0.0)];
        assert_eq!(
            Trajectory::new(poses).unwrap_err(),
            GeometryError::NonMonotoneTimestamps(1)
        );
    }

    #[test]
    fn motion_compensation_under_constant_pose_is_identity() {
        let pose = Pose::new(
            0.0,
            UnitQuaternion::from_euler_angles(0.0, 0.0, 0.3),
            Vector3::new(5.0, 1.0, 0.0),
        );
        let mut later = pose;
        later.timestamp = 1.0;
        let traj = Trajectory::new(vec![pose, later]).unwrap();
        let pts: Vec<TimedPoint> = (0..100)
            .map(|i| {
                TimedPoint::from_position(
                    Vector3::new(i as f64 * 0.1, 1.0, -0.5),
                    i as f64 * 0.01,
                )
            })
            .collect();
        let out = motion_compensate(&pts, &traj, 0.0).unwrap();
        for (p, q) in pts.iter().zip(&out) {
            assert!((p.position - q).norm() <= 1e-12);
        }
    }

    #[test]
    fn motion_compensation_shifts_by_ego_translation() {
        // Ego moves at (v, 0, 0) with identity rotations; a point measured
        // Δt after the reference at sensor position q must come out at
        // q + (v·Δt, 0, 0).
        let v = 10.0;
        let poses: Vec<Pose> = (0..11)
            .map(|i| {
                let t = i as f64 * 0.01;
                Pose::new(t, UnitQuaternion::identity(), Vector3::new(v * t, 0.0, 0.0))
            })
            .collect();
        let traj = Trajectory::new(poses).unwrap();
        let dt = 0.073;
        let q = Vector3::new(4.0, 2.0, 1.0);
        let out = motion_compensate(&[TimedPoint::from_position(q, dt)], &traj, 0.0).unwrap();
        assert_relative_eq!(out[0].x, q.x + v * dt, epsilon = 1e-9);
        assert_relative_eq!(out[0].y, q.y, epsilon = 1e-12);
        assert_relative_eq!(out[0].z, q.z, epsilon = 1e-12);
    }

    #[test]
    fn rotating_ego_matches_exact_pose_oracle() {
        // Constant yaw rate; slerp of a pure yaw is linear in the angle, so
        // interpolating a densely sampled trajectory must match composing
        // the analytic pose at every firing timestamp.
        let yaw_rate = 1.2; // rad/s
        let analytic_pose = |t: f64| {
            Pose::new(
                t,
                UnitQuaternion::from_euler_angles(0.0, 0.0, yaw_rate * t),
                Vector3::new(8.0 * t, 0.0, 0.0),
            )
        };
        let poses: Vec<Pose> = (0..=100).map(|i| analytic_pose(i as f64 * 0.001)).collect();
        let traj = Trajectory::new(poses).unwrap();

        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let reference_time = 0.05;
        let ref_inv = analytic_pose(reference_time).inverse();
        let pts: Vec<TimedPoint> = (0..200)
            .map(|_| {
                TimedPoint::from_position(
                    Vector3::new(
                        rng.random_range(-20.0..20.0),
                        rng.random_range(-20.0..20.0),
                        rng.random_range(-2.0..5.0),
                    ),
                    rng.random_range(0.0..0.1),
                )
            })
            .collect();
        let out = motion_compensate(&pts, &traj, reference_time).unwrap();
        for (p, got) in pts.iter().zip(&out) {
            let want =
                ref_inv.transform_point(&analytic_pose(p.timestamp).transform_point(&p.position));
            assert!((want - got).norm() < 1e-9, "want={want:?} got={got:?}");
        }
    }

    #[test]
    fn motion_compensation_fails_whole_scan_on_out_of_span_timestamp() {
        let traj = Trajectory::new(vec![Pose::identity(0.0), Pose::identity(0.1)]).unwrap();
        let pts = vec![
            TimedPoint::from_position(Vector3::new(1.0, 0.0, 0.0), 0.05),
            TimedPoint::from_position(Vector3::new(1.0, 0.0, 0.0), 0.2),
        ];
        assert!(motion_compensate(&pts, &traj, 0.05).is_err());
    }

    #[test]
    fn pose_inverse_composes_to_identity() {
        let pose = Pose::new(
            0.0,
            UnitQuaternion::from_euler_angles(0.2, -0.1, 1.3),
            Vector3::new(4.0, -2.0, 0.7),
        );
        let id = pose.compose(&pose.inverse());
        assert!(id.rotation.angle() < 1e-9);
        assert!(id.translation.norm() < 1e-9);
    }
}
