//! Deterministic synthetic world: a seeded scene of poles, traffic lights
//! and shaped signs along an ego path, plus analytic LiDAR and camera
//! simulators. Every simulated LiDAR point carries its true source object
//! id in a sidecar, recorded before noise, which the test suites use as the
//! independent oracle.

pub mod raycast;

use alloc::vec::Vec;

use nalgebra::{UnitQuaternion, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::geometry::{Pose, SphericalCameraModel, TimedPoint, Trajectory};
use crate::mapping::{Detection, PinholeCamera};
use crate::math;
use crate::primitives::{
    CylinderPrimitive, Geometry, Landmark, PlanePrimitive, PlaneShape, SemanticClass,
};
use crate::render::LabelImage;

pub use raycast::ClutterBox;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SceneError {
    #[error("could not place object {0} after {1} attempts")]
    PlacementFailed(usize, usize),
    #[error("invalid spec: {0}")]
    InvalidSpec(&'static str),
}

/// Seeded scene description. Distances in meters, region in the map frame.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpec {
    pub seed: u64,
    pub pole_count: usize,
    pub traffic_light_count: usize,
    pub sign_count: usize,
    pub clutter_count: usize,
    /// Placement region `[x_min, x_max, y_min, y_max]`.
    pub region: [f64; 4],
    /// Minimum pairwise anchor distance between placed objects.
    pub min_spacing: f64,
    /// Half-width of the corridor around the ego path kept free.
    pub corridor_half_width: f64,
    pub ego_speed: f64,
    pub ego_duration: f64,
    /// Sensor height above ground.
    pub ego_height: f64,
    pub pole_radius: [f64; 2],
    pub pole_height: [f64; 2],
    pub light_radius: [f64; 2],
    pub light_length: [f64; 2],
    pub light_mount_height: [f64; 2],
    /// Characteristic sign dimension (width/diameter/side).
    pub sign_size: [f64; 2],
    pub sign_mount_height: [f64; 2],
    pub clutter_size: [f64; 2],
    pub max_range: f64,
}

impl Default for SceneSpec {
    fn default() -> Self {
        Self {
            seed: 1,
            pole_count: 8,
            traffic_light_count: 5,
            sign_count: 7,
            clutter_count: 6,
            region: [15.0, 115.0, -18.0, 18.0],
            min_spacing: 3.0,
            corridor_half_width: 2.5,
            ego_speed: 8.0,
            ego_duration: 10.0,
            ego_height: 1.9,
            pole_radius: [0.05, 0.18],
            pole_height: [2.5, 6.0],
            light_radius: [0.12, 0.25],
            light_length: [0.8, 1.3],
            light_mount_height: [2.5, 4.0],
            sign_size: [0.5, 0.9],
            sign_mount_height: [1.5, 2.8],
            clutter_size: [0.8, 2.5],
            max_range: 120.0,
        }
    }
}

/// Sensor and annotation noise knobs; all default to zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub range_sigma: f64,
    pub pose_translation_sigma: f64,
    pub pose_rotation_sigma: f64,
    pub mask_jitter_px: f64,
    /// Systematic outward bleed of mask contours, pixels. Segmentation
    /// masks tend to overshoot object boundaries, which pulls background
    /// into the per-instance depth population.
    pub mask_bleed_px: f64,
    pub dropout: f64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            range_sigma: 0.0,
            pose_translation_sigma: 0.0,
            pose_rotation_sigma: 0.0,
            mask_jitter_px: 0.0,
            mask_bleed_px: 0.0,
            dropout: 0.0,
        }
    }
}

/// Ground-truth world: landmarks, background geometry and the true ego
/// trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub landmarks: Vec<Landmark>,
    pub clutter: Vec<ClutterBox>,
    pub ground_z: f64,
    pub trajectory: Trajectory,
    pub max_range: f64,
}

impl Scene {
    pub fn landmark_by_id(&self, id: u32) -> Option<&Landmark> {
        self.landmarks.iter().find(|lm| lm.instance_id == id)
    }
}

/// Independent RNG stream derived from a master seed; streams never overlap
/// regardless of the parallel schedule.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn range_sample(rng: &mut ChaCha8Rng, range: [f64; 2]) -> f64 {
    if range[1] > range[0] {
        rng.random_range(range[0]..range[1])
    } else {
        range[0]
    }
}

/// Deterministic scene generation under `spec.seed`. Objects are rejected
/// until they respect the corridor and pairwise spacing; bounded retries
/// turn unsatisfiable requests into an error.
pub fn generate_scene(spec: &SceneSpec) -> Result<Scene, SceneError> {
    if spec.region[1] <= spec.region[0] || spec.region[3] <= spec.region[2] {
        return Err(SceneError::InvalidSpec("empty placement region"));
    }
    let mut rng = stream_rng(spec.seed, 0);

    // Straight ego path along +x at the corridor center, sampled at 100 Hz.
    let steps = (spec.ego_duration * 100.0) as usize;
    let poses: Vec<Pose> = (0..=steps)
        .map(|i| {
            let t = i as f64 * 0.01;
            Pose::new(
                t,
                UnitQuaternion::identity(),
                Vector3::new(spec.ego_speed * t, 0.0, spec.ego_height),
            )
        })
        .collect();
    let trajectory = Trajectory::new(poses).expect("monotone by construction");

    const MAX_ATTEMPTS: usize = 2000;
    let mut anchors: Vec<Vector3<f64>> = Vec::new();
    let place = |rng: &mut ChaCha8Rng, anchors: &mut Vec<Vector3<f64>>, obj: usize, z: f64| {
        for _ in 0..MAX_ATTEMPTS {
            let x = rng.random_range(spec.region[0]..spec.region[1]);
            let y = rng.random_range(spec.region[2]..spec.region[3]);
            if y.abs() < spec.corridor_half_width {
                continue;
            }
            let candidate = Vector3::new(x, y, z);
            if anchors
                .iter()
                .all(|a| math::hypot(a.x - x, a.y - y) >= spec.min_spacing)
            {
                anchors.push(candidate);
                return Ok(candidate);
            }
        }
        Err(SceneError::PlacementFailed(obj, MAX_ATTEMPTS))
    };

    let mut landmarks = Vec::new();
    let mut next_id = 1u32;
    for _ in 0..spec.pole_count {
        let radius = range_sample(&mut rng, spec.pole_radius);
        let height = range_sample(&mut rng, spec.pole_height);
        let at = place(&mut rng, &mut anchors, next_id as usize, 0.0)?;
        landmarks.push(
            Landmark::new(
                next_id,
                SemanticClass::Pole,
                Geometry::Cylinder(
                    CylinderPrimitive::new(
                        Vector3::new(at.x, at.y, 0.0),
                        Vector3::z(),
                        height,
                        radius,
                    )
                    .expect("positive dimensions"),
                ),
            )
            .expect("valid pole"),
        );
        next_id += 1;
    }
    for _ in 0..spec.traffic_light_count {
        let radius = range_sample(&mut rng, spec.light_radius);
        let length = range_sample(&mut rng, spec.light_length);
        let mount = range_sample(&mut rng, spec.light_mount_height);
        let at = place(&mut rng, &mut anchors, next_id as usize, mount)?;
        landmarks.push(
            Landmark::new(
                next_id,
                SemanticClass::TrafficLight,
                Geometry::Cylinder(
                    CylinderPrimitive::new(
                        Vector3::new(at.x, at.y, mount),
                        Vector3::z(),
                        length,
                        radius,
                    )
                    .expect("positive dimensions"),
                ),
            )
            .expect("valid light"),
        );
        next_id += 1;
    }
    for _ in 0..spec.sign_count {
        let size = range_sample(&mut rng, spec.sign_size);
        let mount = range_sample(&mut rng, spec.sign_mount_height);
        let at = place(&mut rng, &mut anchors, next_id as usize, mount)?;
        let shape = match rng.random_range(0..3) {
            0 => PlaneShape::Rectangle {
                width: size,
                height: size * rng.random_range(0.8..1.4),
            },
            1 => PlaneShape::Circle { radius: size / 2.0 },
            _ => PlaneShape::Triangle {
                side: size,
                apex_up: rng.random_bool(0.5),
            },
        };
        // Face a point on the ego path, with some yaw scatter.
        let toward_x = rng.random_range(spec.region[0]..spec.region[1]);
        let yaw = math::atan2(0.0 - at.y, toward_x - at.x)
            + rng.random_range(-0.4..0.4);
        landmarks.push(
            Landmark::new(
                next_id,
                SemanticClass::TrafficSign,
                Geometry::Plane(
                    PlanePrimitive::upright(Vector3::new(at.x, at.y, mount), yaw, shape)
                        .expect("valid sign"),
                ),
            )
            .expect("valid sign"),
        );
        next_id += 1;
    }

    let mut clutter = Vec::new();
    for i in 0..spec.clutter_count {
        let at = place(&mut rng, &mut anchors, landmarks.len() + i, 0.0)?;
        let sx = range_sample(&mut rng, spec.clutter_size);
        let sy = range_sample(&mut rng, spec.clutter_size);
        let sz = range_sample(&mut rng, spec.clutter_size);
        clutter.push(ClutterBox {
            min: Vector3::new(at.x - sx / 2.0, at.y - sy / 2.0, 0.0),
            max: Vector3::new(at.x + sx / 2.0, at.y + sy / 2.0, sz),
        });
    }

    Ok(Scene {
        landmarks,
        clutter,
        ground_z: 0.0,
        trajectory,
        max_range: spec.max_range,
    })
}

/// Adds zero-mean Gaussian noise to every pose of a trajectory (reported
/// poses for pipelines under pose-noise stress; the simulators keep using
/// the true trajectory).
pub fn perturb_trajectory(
    trajectory: &Trajectory,
    noise: &NoiseSpec,
    rng: &mut ChaCha8Rng,
) -> Trajectory {
    if noise.pose_translation_sigma == 0.0 && noise.pose_rotation_sigma == 0.0 {
        return trajectory.clone();
    }
    let nt = Normal::new(0.0, noise.pose_translation_sigma.max(1e-300)).unwrap();
    let nr = Normal::new(0.0, noise.pose_rotation_sigma.max(1e-300)).unwrap();
    let poses: Vec<Pose> = trajectory
        .poses()
        .iter()
        .map(|p| {
            let dt = Vector3::new(nt.sample(rng), nt.sample(rng), nt.sample(rng));
            let dr = UnitQuaternion::from_euler_angles(
                nr.sample(rng),
                nr.sample(rng),
                nr.sample(rng),
            );
            Pose::new(p.timestamp, dr * p.rotation, p.translation + dt)
        })
        .collect();
    Trajectory::new(poses).expect("timestamps preserved")
}

/// One simulated scan: noisy points in the firing-pose sensor frame, the
/// pre-noise truth sidecar, and the as-scanned truth label image.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedScan {
    pub start_time: f64,
    pub points: Vec<TimedPoint>,
    /// Source object id per point (0 = background), recorded before noise.
    pub truth_ids: Vec<u32>,
    /// Per-pixel true instance/class of the nearest surface along each
    /// pixel-center ray, unaffected by noise and dropout.
    pub truth_image: LabelImage,
}

/// Simulates one full scan starting at `start_time` over `scan_period`
/// seconds. Rays fire column by column across the period (one timestamp per
/// column); each point is expressed in the sensor frame of its firing pose.
pub fn simulate_lidar(
    scene: &Scene,
    start_time: f64,
    scan_period: f64,
    model: &SphericalCameraModel,
    noise: &NoiseSpec,
    rng: &mut ChaCha8Rng,
) -> SimulatedScan {
    let width = model.width();
    let height = model.height();
    let mut points = Vec::new();
    let mut truth_ids = Vec::new();
    let mut truth_image = LabelImage::background(width, height);
    let range_noise = Normal::new(0.0, noise.range_sigma.max(1e-300)).unwrap();

    for col in 0..width {
        let t = start_time + scan_period * col as f64 / width as f64;
        let pose = scene
            .trajectory
            .interpolate(t)
            .expect("scan within trajectory span");
        for row in 0..height {
            let dir_sensor = model.pixel_ray(col, row);
            let dir_map = pose.transform_vector(&dir_sensor);
            let Some((range, id)) = raycast::nearest_hit(
                &pose.translation,
                &dir_map,
                &scene.landmarks,
                &scene.clutter,
                Some(scene.ground_z),
                scene.max_range,
            ) else {
                continue;
            };
            let idx = truth_image.idx(col, row);
            truth_image.instance[idx] = id;
            truth_image.semantic[idx] = match scene.landmark_by_id(id) {
                Some(lm) => lm.class,
                None => SemanticClass::Background,
            };
            truth_image.depth_hint[idx] = range as f32;

            if noise.dropout > 0.0 && rng.random_bool(noise.dropout) {
                continue;
            }
            let measured = if noise.range_sigma > 0.0 {
                (range + range_noise.sample(rng)).max(1e-3)
            } else {
                range
            };
            points.push(TimedPoint::from_position(dir_sensor * measured, t));
            truth_ids.push(id);
        }
    }
    SimulatedScan {
        start_time,
        points,
        truth_ids,
        truth_image,
    }
}

/// Sutherland-Hodgman clip of a polygon against an axis-aligned rectangle.
fn clip_polygon_to_rect(
    polygon: &[[f64; 2]],
    min: [f64; 2],
    max: [f64; 2],
) -> Vec<[f64; 2]> {
    let mut current = polygon.to_vec();
    // (axis, bound, keep_below)
    let clips = [
        (0usize, min[0], false),
        (0usize, max[0], true),
        (1usize, min[1], false),
        (1usize, max[1], true),
    ];
    for (axis, bound, keep_below) in clips {
        if current.is_empty() {
            break;
        }
        let inside = |p: &[f64; 2]| {
            if keep_below {
                p[axis] <= bound
            } else {
                p[axis] >= bound
            }
        };
        let mut next = Vec::with_capacity(current.len() + 4);
        for i in 0..current.len() {
            let a = current[i];
            let b = current[(i + 1) % current.len()];
            let (ain, bin) = (inside(&a), inside(&b));
            if ain != bin {
                let t = (bound - a[axis]) / (b[axis] - a[axis]);
                let other = 1 - axis;
                let mut crossing = [0.0; 2];
                crossing[axis] = bound;
                crossing[other] = a[other] + t * (b[other] - a[other]);
                if ain {
                    next.push(a);
                }
                next.push(crossing);
            } else if ain {
                next.push(a);
            }
        }
        current = next;
    }
    current
}

fn polygon_area(polygon: &[[f64; 2]]) -> f64 {
    let mut area = 0.0;
    for i in 0..polygon.len() {
        let a = polygon[i];
        let b = polygon[(i + 1) % polygon.len()];
        area += a[0] * b[1] - b[0] * a[1];
    }
    area.abs() / 2.0
}

/// Vertical-cylinder silhouette contour seen from `origin`: both tangent
/// generator lines sampled top to bottom, forming a closed quad-like ring.
fn cylinder_silhouette(
    c: &CylinderPrimitive,
    origin: &Vector3<f64>,
    heights: usize,
) -> Option<Vec<Vector3<f64>>> {
    let center_xy = Vector3::new(c.base_point.x, c.base_point.y, 0.0);
    let origin_xy = Vector3::new(origin.x, origin.y, 0.0);
    let d = (origin_xy - center_xy).norm();
    if d <= c.radius * 1.01 {
        return None; // viewer inside or grazing
    }
    let u = (origin_xy - center_xy) / d;
    let perp = Vector3::new(-u.y, u.x, 0.0);
    let cos_t = c.radius / d;
    let sin_t = math::sqrt(1.0 - cos_t * cos_t);
    let mut ring = Vec::with_capacity(2 * heights);
    for side in [1.0, -1.0] {
        let tangent = center_xy + (u * cos_t + perp * (side * sin_t)) * c.radius;
        for k in 0..heights {
            let f = k as f64 / (heights - 1) as f64;
            let z = if side > 0.0 {
                c.base_point.z + c.length * f
            } else {
                c.base_point.z + c.length * (1.0 - f)
            };
            ring.push(Vector3::new(tangent.x, tangent.y, z));
        }
    }
    Some(ring)
}

/// Analytic silhouette polygons of the visible landmarks in one camera,
/// occlusion-resolved by sampling interior rays: detections more than half
/// occluded are dropped, milder occlusion keeps the full silhouette. Masks
/// are clipped to the image (truncated, as a detector would emit them);
/// heavily truncated or tiny remnants are dropped. Vertices are jittered
/// per `NoiseSpec`.
pub fn simulate_camera(
    scene: &Scene,
    camera: &PinholeCamera,
    frame_id: u64,
    noise: &NoiseSpec,
    rng: &mut ChaCha8Rng,
) -> Vec<Detection> {
    let jitter = Normal::new(0.0, noise.mask_jitter_px.max(1e-300)).unwrap();
    let origin = camera.pose.translation;
    let mut detections = Vec::new();

    for lm in &scene.landmarks {
        let contour: Vec<Vector3<f64>> = match &lm.geometry {
            Geometry::Cylinder(c) => match cylinder_silhouette(c, &origin, 8) {
                Some(ring) => ring,
                None => continue,
            },
            Geometry::Plane(p) => p.boundary_ring(32),
            Geometry::ExtrudedPlane { plane, .. } => plane.boundary_ring(32),
        };

        // Project; anything behind the camera drops the whole detection.
        let mut polygon = Vec::with_capacity(contour.len());
        let mut ok = true;
        for p in &contour {
            match camera.project(p) {
                Some(px) => polygon.push(px),
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if !ok || polygon.len() < 3 {
            continue;
        }
        let full_area = polygon_area(&polygon);
        let mut polygon = clip_polygon_to_rect(
            &polygon,
            [1.0, 1.0],
            [camera.width as f64 - 1.0, camera.height as f64 - 1.0],
        );
        // A detector would not fire on slivers or mostly-truncated objects.
        if polygon.len() < 3
            || polygon_area(&polygon) < 25.0
            || polygon_area(&polygon) < 0.3 * full_area
        {
            continue;
        }

        // Occlusion test on interior sample rays.
        let anchor = lm.anchor();
        let mut occluded = 0usize;
        let mut samples = 0usize;
        for target in contour
            .iter()
            .map(|p| anchor + (p - anchor) * 0.7)
            .chain(core::iter::once(anchor))
        {
            let dir = (target - origin).normalize();
            samples += 1;
            match raycast::nearest_hit(
                &origin,
                &dir,
                &scene.landmarks,
                &scene.clutter,
                Some(scene.ground_z),
                scene.max_range,
            ) {
                Some((_, id)) if id == lm.instance_id => {}
                _ => occluded += 1,
            }
        }
        if occluded * 2 > samples {
            continue;
        }

        if noise.mask_bleed_px > 0.0 {
            // Push every vertex outward from the polygon centroid.
            let n = polygon.len() as f64;
            let (cx, cy) = polygon
                .iter()
                .fold((0.0, 0.0), |(x, y), v| (x + v[0] / n, y + v[1] / n));
            for v in &mut polygon {
                let (dx, dy) = (v[0] - cx, v[1] - cy);
                let len = math::hypot(dx, dy).max(1e-9);
                v[0] += dx / len * noise.mask_bleed_px;
                v[1] += dy / len * noise.mask_bleed_px;
            }
        }
        if noise.mask_jitter_px > 0.0 {
            for v in &mut polygon {
                v[0] += jitter.sample(rng);
                v[1] += jitter.sample(rng);
            }
        }
        detections.push(Detection {
            frame_id,
            class: lm.class,
            mask_polygon: polygon,
            camera: *camera,
        });
    }
    detections
}

/// Raycast label oracle: per pixel center, the nearest hit among the given
/// (margin-expanded) landmarks within `tau`, ignoring background geometry.
/// This is the analytic counterpart of the polygon rasterizer.
pub fn raycast_label_image(
    landmarks: &[Landmark],
    ego_pose: &Pose,
    model: &SphericalCameraModel,
    tau: f64,
) -> LabelImage {
    let selected: Vec<Landmark> = landmarks
        .iter()
        .filter(|lm| (lm.anchor() - ego_pose.translation).norm() < tau)
        .copied()
        .collect();
    let mut image = LabelImage::background(model.width(), model.height());
    for col in 0..model.width() {
        for row in 0..model.height() {
            let dir = ego_pose.transform_vector(&model.pixel_ray(col, row));
            let mut best: Option<(f64, &Landmark)> = None;
            for lm in &selected {
                if let Some(t) = raycast::ray_landmark(&ego_pose.translation, &dir, lm) {
                    if best.is_none_or(|(bt, _)| t < bt) {
                        best = Some((t, lm));
                    }
                }
            }
            if let Some((t, lm)) = best {
                let idx = image.idx(col, row);
                image.instance[idx] = lm.instance_id;
                image.semantic[idx] = lm.class;
                image.depth_hint[idx] = t as f32;
            }
        }
    }
    image
}

/// Projects labeled points into the model at the reference pose and keeps
/// the nearest point's truth id per pixel: the 2D reference labeling for a
/// given (possibly motion-compensated) cloud. `landmarks` supplies the
/// id-to-class mapping. Pixels without any projected return carry no
/// evidence and are marked ignore, mirroring how range-image labels are
/// consumed (empty pixels are invalid).
pub fn truth_label_image_from_points(
    positions: &[Vector3<f64>],
    truth_ids: &[u32],
    landmarks: &[Landmark],
    model: &SphericalCameraModel,
) -> LabelImage {
    let class_of: alloc::collections::BTreeMap<u32, SemanticClass> = landmarks
        .iter()
        .map(|lm| (lm.instance_id, lm.class))
        .collect();
    let mut image = LabelImage::background(model.width(), model.height());
    let mut best_range = alloc::vec![f64::INFINITY; image.pixel_count()];
    for ig in image.ignore.iter_mut() {
        *ig = true;
    }
    for (p, &id) in positions.iter().zip(truth_ids) {
        let Ok(Some(ip)) = model.project(p) else {
            continue;
        };
        let (col, row) = (math::floor(ip.u) as usize, math::floor(ip.v) as usize);
        if col >= model.width() || row >= model.height() {
            continue;
        }
        let idx = image.idx(col, row);
        image.ignore[idx] = false;
        if ip.range < best_range[idx] {
            best_range[idx] = ip.range;
            image.instance[idx] = id;
            image.semantic[idx] = class_of
                .get(&id)
                .copied()
                .unwrap_or(SemanticClass::Background);
            image.depth_hint[idx] = ip.range as f32;
        }
    }
    image
}

/// Frame indices kept when decimating a 10 Hz base rate to `target_hz`:
/// every 5th frame for 2 Hz, every 20th for 0.5 Hz.
pub fn subsample_frame_indices(frame_count: usize, base_hz: f64, target_hz: f64) -> Vec<usize> {
    let step = math::round(base_hz / target_hz).max(1.0) as usize;
    (0..frame_count).step_by(step).collect()
}
