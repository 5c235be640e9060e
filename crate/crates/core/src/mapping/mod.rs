//! Semantic parametric map estimation: element-cloud extraction from masked
//! camera detections, greedy association in the map frame, and nonlinear
//! least-squares fitting of class-dependent primitives with shape priors.
//!
//! The fit minimizes a Huber-robustified sum over two residual families:
//! (a) point-to-surface distances of the element cloud and (b) the
//! [`Landmark::ray_hull_distance`] of every mask-contour viewing ray. Each
//! family is normalized by its residual count so neither dominates.

pub mod lm;

use alloc::vec::Vec;

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

use crate::geometry::Pose;
use crate::math;
use crate::primitives::{
    CylinderPrimitive, Geometry, Landmark, PlanePrimitive, PlaneShape, SemanticClass,
};
use crate::raster::point_in_polygon;

pub use lm::{Loss, LmOptions, LmReport};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error("element cloud has {points} points, need at least {needed}")]
    InsufficientSupport { points: usize, needed: usize },
    #[error("observation set has no detections")]
    NoDetections,
    #[error("fit collapsed to a degenerate primitive: {0}")]
    DegenerateGeometry(&'static str),
}

/// Pinhole camera: z forward, x right, y down; `pose` maps camera-frame
/// coordinates into the map frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PinholeCamera {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
    pub pose: Pose,
}

impl PinholeCamera {
    /// Projects a map-frame point; `None` when it is not strictly in front
    /// of the camera.
    pub fn project(&self, p_map: &Vector3<f64>) -> Option<[f64; 2]> {
        let pc = self.pose.inverse_transform_point(p_map);
        if pc.z <= 0.0 {
            return None;
        }
        Some([
            self.fx * pc.x / pc.z + self.cx,
            self.fy * pc.y / pc.z + self.cy,
        ])
    }

    /// Viewing ray through pixel `(u, v)`: map-frame origin and unit
    /// direction.
    pub fn pixel_ray(&self, u: f64, v: f64) -> (Vector3<f64>, Vector3<f64>) {
        let dir_cam = Vector3::new((u - self.cx) / self.fx, (v - self.cy) / self.fy, 1.0);
        let dir = self.pose.transform_vector(&dir_cam).normalize();
        (self.pose.translation, dir)
    }

    pub fn is_border_pixel(&self, u: f64, v: f64, margin: f64) -> bool {
        u <= margin
            || v <= margin
            || u >= self.width as f64 - margin
            || v >= self.height as f64 - margin
    }
}

/// One instance mask in one camera frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub frame_id: u64,
    pub class: SemanticClass,
    /// Ordered pixel-coordinate contour, at least 3 vertices.
    pub mask_polygon: Vec<[f64; 2]>,
    pub camera: PinholeCamera,
}

/// Detections of one physical object together with the LiDAR points that
/// project inside their masks (map frame).
#[derive(Debug, Clone)]
pub struct ObservationSet {
    pub detections: Vec<Detection>,
    pub element_cloud: Vec<Vector3<f64>>,
    /// Element cloud split by contributing detection (aligned with
    /// `detections`; empty for detections attached without points).
    detection_clouds: Vec<Vec<Vector3<f64>>>,
    detection_centroids: Vec<Vector3<f64>>,
    pub first_frame: u64,
}

impl ObservationSet {
    pub fn class(&self) -> SemanticClass {
        self.detections[0].class
    }

    /// Mean of the member detections' element-cloud centroids.
    pub fn centroid(&self) -> Vector3<f64> {
        let mut sum = Vector3::zeros();
        for c in &self.detection_centroids {
            sum += c;
        }
        sum / self.detection_centroids.len().max(1) as f64
    }

    fn merge_from(&mut self, other: ObservationSet) {
        self.element_cloud.extend(other.element_cloud);
        self.detection_clouds.extend(other.detection_clouds);
        self.detection_centroids.extend(other.detection_centroids);
        self.detections.extend(other.detections);
        self.first_frame = self.first_frame.min(other.first_frame);
    }

    /// The cloud the fitter works on: per contributing detection, only the
    /// points within the foreground depth band around that camera's
    /// nearest-rank 30th-percentile depth. Background points leaking
    /// through mask edges (camera/LiDAR parallax) sit at other depths and
    /// are removed here.
    fn foreground_cloud(&self, band: [f64; 2]) -> Vec<Vector3<f64>> {
        let mut out = Vec::with_capacity(self.element_cloud.len());
        for (det, cloud) in self.detections.iter().zip(&self.detection_clouds) {
            out.extend(foreground_band(det, cloud, band));
        }
        if out.is_empty() {
            // Degenerate split information: fall back to the raw cloud.
            out.extend_from_slice(&self.element_cloud);
        }
        out
    }
}

/// Camera-frame depth of a map point.
fn camera_depth(detection: &Detection, p: &Vector3<f64>) -> f64 {
    detection.camera.pose.inverse_transform_point(p).z
}

/// Points within `[p30 - band[0], p30 + band[1]]` of the nearest-rank
/// 30th-percentile camera depth of the detection's cloud.
fn foreground_band(
    detection: &Detection,
    cloud: &[Vector3<f64>],
    band: [f64; 2],
) -> Vec<Vector3<f64>> {
    if cloud.is_empty() {
        return Vec::new();
    }
    let mut depths: Vec<f64> = cloud.iter().map(|p| camera_depth(detection, p)).collect();
    let mut sorted = depths.clone();
    sorted.sort_by(f64::total_cmp);
    let k = math::ceil(0.30 * sorted.len() as f64).max(1.0) as usize;
    let d30 = sorted[k.min(sorted.len()) - 1];
    let mut out = Vec::with_capacity(cloud.len());
    for (p, d) in cloud.iter().zip(depths.drain(..)) {
        if d >= d30 - band[0] && d <= d30 + band[1] {
            out.push(*p);
        }
    }
    out
}

/// Solver report attached to every fitted landmark.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub landmark: Landmark,
    pub final_cost: f64,
    pub iterations: usize,
    pub converged: bool,
    pub inlier_fraction: f64,
    pub gradient_norm: f64,
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Huber scale for all fit residuals, meters.
    pub huber_scale: f64,
    pub max_iterations: usize,
    /// Minimum element-cloud size for a fit attempt.
    pub min_support: usize,
    /// Point residual magnitude below which a point counts as an inlier.
    pub inlier_threshold: f64,
    /// Sets with a smaller inlier fraction are dropped from the map.
    pub min_inlier_fraction: f64,
    /// Centroid gate for greedy association, meters.
    pub gating_distance: f64,
    /// Relative weight of the contour-ray family vs the point family.
    pub ray_weight_ratio: f64,
    /// A simpler shape family wins if its cost is within this fraction of
    /// the best family's cost.
    pub simplicity_margin: f64,
    /// Contour vertices within this many pixels of the image border are
    /// excluded from the ray residuals (truncated masks).
    pub border_margin_px: f64,
    /// Foreground depth band `[behind, ahead]` around each detection's
    /// 30th-percentile camera depth; points outside it are treated as
    /// parallax contamination and excluded from fitting.
    pub foreground_depth_band: [f64; 2],
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            huber_scale: 0.05,
            max_iterations: 100,
            min_support: 10,
            inlier_threshold: 0.10,
            min_inlier_fraction: 0.5,
            gating_distance: 1.0,
            ray_weight_ratio: 1.0,
            simplicity_margin: 0.05,
            border_margin_px: 1.0,
            foreground_depth_band: [1.0, 3.0],
        }
    }
}

/// Returns exactly the scan points whose camera projection lies strictly
/// inside the detection's mask polygon (and in front of the camera).
pub fn extract_element_cloud(
    detection: &Detection,
    scan_map: &[Vector3<f64>],
) -> Vec<Vector3<f64>> {
    scan_map
        .iter()
        .filter(|p| {
            detection
                .camera
                .project(p)
                .is_some_and(|px| point_in_polygon(&detection.mask_polygon, px))
        })
        .copied()
        .collect()
}

/// Why a detection did not make it into any observation set.
#[derive(Debug, Clone, PartialEq)]
pub struct DroppedDetection {
    pub frame_id: u64,
    pub class: SemanticClass,
    pub reason: &'static str,
}

/// Componentwise median of a point set: the association centroid. Masks
/// catch background points through their edges (parallax), which can drag
/// the mean centroid meters away from the object; the median shrugs that
/// contamination off.
pub fn robust_centroid(points: &[Vector3<f64>]) -> Vector3<f64> {
    let mut out = Vector3::zeros();
    let mut axis_values: Vec<f64> = Vec::with_capacity(points.len());
    for axis in 0..3 {
        axis_values.clear();
        axis_values.extend(points.iter().map(|p| p[axis]));
        axis_values.sort_by(f64::total_cmp);
        out[axis] = axis_values[axis_values.len() / 2];
    }
    out
}

/// Greedy nearest-neighbor association of per-frame detections on their
/// back-projected element-cloud centroids (componentwise medians of the
/// foreground-banded points). Two detections join one set iff they share
/// the class and their centroids are closer than the gate. Detections with
/// an empty element cloud are held back and attached to the nearest
/// existing set whose centroid lies within the gate of their mask
/// centroid's viewing ray, otherwise dropped with a diagnostic.
pub fn associate_detections(
    detections_with_clouds: Vec<(Detection, Vec<Vector3<f64>>)>,
    gating_distance: f64,
) -> (Vec<ObservationSet>, Vec<DroppedDetection>) {
    associate_detections_banded(detections_with_clouds, gating_distance, [1.0, 3.0])
}

pub fn associate_detections_banded(
    detections_with_clouds: Vec<(Detection, Vec<Vector3<f64>>)>,
    gating_distance: f64,
    foreground_depth_band: [f64; 2],
) -> (Vec<ObservationSet>, Vec<DroppedDetection>) {
    let mut sets: Vec<ObservationSet> = Vec::new();
    let mut held_back: Vec<Detection> = Vec::new();

    let mut ordered = detections_with_clouds;
    ordered.sort_by_key(|(d, _)| d.frame_id);

    for (detection, cloud) in ordered {
        if cloud.is_empty() {
            held_back.push(detection);
            continue;
        }
        let banded = foreground_band(&detection, &cloud, foreground_depth_band);
        let centroid = if banded.is_empty() {
            robust_centroid(&cloud)
        } else {
            robust_centroid(&banded)
        };
        let mut best: Option<(usize, f64)> = None;
        for (i, set) in sets.iter().enumerate() {
            if set.class() != detection.class {
                continue;
            }
            let dist = (set.centroid() - centroid).norm();
            if dist < gating_distance && best.is_none_or(|(_, d)| dist < d) {
                best = Some((i, dist));
            }
        }
        match best {
            Some((i, _)) => {
                sets[i].detections.push(detection);
                sets[i].element_cloud.extend(cloud.iter().copied());
                sets[i].detection_clouds.push(cloud);
                sets[i].detection_centroids.push(centroid);
            }
            None => sets.push(ObservationSet {
                first_frame: detection.frame_id,
                detections: alloc::vec![detection],
                element_cloud: cloud.clone(),
                detection_clouds: alloc::vec![cloud],
                detection_centroids: alloc::vec![centroid],
            }),
        }
    }

    let mut dropped = Vec::new();
    for detection in held_back {
        let n = detection.mask_polygon.len().max(1) as f64;
        let mask_centroid = detection
            .mask_polygon
            .iter()
            .fold([0.0, 0.0], |acc, v| [acc[0] + v[0], acc[1] + v[1]]);
        let (origin, dir) = detection
            .camera
            .pixel_ray(mask_centroid[0] / n, mask_centroid[1] / n);
        let mut best: Option<(usize, f64)> = None;
        for (i, set) in sets.iter().enumerate() {
            if set.class() != detection.class {
                continue;
            }
            let dist = crate::primitives::point_ray_distance(&set.centroid(), &origin, &dir);
            if dist < gating_distance && best.is_none_or(|(_, d)| dist < d) {
                best = Some((i, dist));
            }
        }
        match best {
            Some((i, _)) => {
                sets[i].detections.push(detection);
                sets[i].detection_clouds.push(Vec::new());
            }
            None => dropped.push(DroppedDetection {
                frame_id: detection.frame_id,
                class: detection.class,
                reason: "empty element cloud and no set within gate",
            }),
        }
    }

    // Deterministic output order: first appearance.
    sets.sort_by_key(|s| s.first_frame);
    (sets, dropped)
}

/// Map-frame contour viewing rays of the observation set, skipping vertices
/// on the image border.
fn contour_rays(observations: &ObservationSet, config: &SolverConfig) -> Vec<(Vector3<f64>, Vector3<f64>)> {
    let mut rays = Vec::new();
    for det in &observations.detections {
        for v in &det.mask_polygon {
            if det.camera.is_border_pixel(v[0], v[1], config.border_margin_px) {
                continue;
            }
            rays.push(det.camera.pixel_ray(v[0], v[1]));
        }
    }
    rays
}

/// Builds the residual weights: each family normalized by its count.
fn residual_weights(n_points: usize, n_rays: usize, ray_ratio: f64) -> Vec<f64> {
    let mut w = Vec::with_capacity(n_points + n_rays);
    let wp = 1.0 / n_points.max(1) as f64;
    let wr = ray_ratio / n_rays.max(1) as f64;
    w.extend(core::iter::repeat_n(wp, n_points));
    w.extend(core::iter::repeat_n(wr, n_rays));
    w
}

/// Minimum distance between a half-line and an infinite line.
fn ray_line_distance(
    ray_origin: &Vector3<f64>,
    ray_direction: &Vector3<f64>,
    line_point: &Vector3<f64>,
    line_direction: &Vector3<f64>,
) -> f64 {
    let w = ray_origin - line_point;
    let aa = ray_direction.norm_squared();
    let bb = ray_direction.dot(line_direction);
    let cc = line_direction.norm_squared();
    let denom = aa * cc - bb * bb;
    let s = if denom > 1e-15 {
        (bb * line_direction.dot(&w) - cc * ray_direction.dot(&w)) / denom
    } else {
        0.0
    };
    let s = s.max(0.0);
    let t = (line_direction.dot(&w) + s * bb) / cc;
    (w + ray_direction * s - line_direction * t).norm()
}

struct CylinderParams;

impl CylinderParams {
    /// params: [cx, cy, ax, ay, radius]; the axis passes through
    /// (cx, cy, z_ref) with direction normalize((ax, ay, 1)).
    fn axis(params: &[f64], z_ref: f64) -> (Vector3<f64>, Vector3<f64>) {
        let p0 = Vector3::new(params[0], params[1], z_ref);
        let dir = Vector3::new(params[2], params[3], 1.0).normalize();
        (p0, dir)
    }
}

fn fit_cylinder(
    cloud: &[Vector3<f64>],
    rays: &[(Vector3<f64>, Vector3<f64>)],
    config: &SolverConfig,
) -> Result<(Geometry, LmReport, Vec<f64>), FitError> {
    let centroid = robust_centroid(cloud);
    let z_ref = centroid.z;

    // Init: vertical axis through the centroid, median radial distance.
    let mut radial: Vec<f64> = cloud
        .iter()
        .map(|p| math::hypot(p.x - centroid.x, p.y - centroid.y))
        .collect();
    radial.sort_by(f64::total_cmp);
    let r0 = radial[radial.len() / 2].max(1e-3);
    let x0 = [centroid.x, centroid.y, 0.0, 0.0, r0];

    let weights = residual_weights(cloud.len(), rays.len(), config.ray_weight_ratio);
    let opts = LmOptions {
        max_iterations: config.max_iterations,
        ..Default::default()
    };

    let evaluate = |params: &[f64], out: &mut Vec<f64>| {
        out.clear();
        let (p0, dir) = CylinderParams::axis(params, z_ref);
        let radius = params[4].abs();
        for p in cloud {
            let rel = p - p0;
            let t = rel.dot(&dir);
            out.push((rel - dir * t).norm() - radius);
        }
        // A silhouette-tangent ray sits at distance exactly `radius` from
        // the infinite axis line, independent of the (unknown) axial
        // extent. Contour pixels on cap rims violate this; they are a
        // minority and the Huber loss damps them.
        for (origin, rdir) in rays {
            out.push(ray_line_distance(origin, rdir, &p0, &dir) - radius);
        }
    };

    let (params, report) = lm::minimize(&x0, &weights, Loss::Huber(config.huber_scale), &opts, evaluate);

    let (p0, dir) = CylinderParams::axis(&params, z_ref);
    let radius = params[4].abs();
    if radius <= 1e-6 {
        return Err(FitError::DegenerateGeometry("non-positive radius"));
    }
    let (mut t_min, mut t_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for p in cloud {
        let t = (p - p0).dot(&dir);
        t_min = t_min.min(t);
        t_max = t_max.max(t);
    }
    if !(t_max > t_min) {
        return Err(FitError::DegenerateGeometry("zero axial extent"));
    }
    let cylinder = CylinderPrimitive::new(p0 + dir * t_min, dir, t_max - t_min, radius)
        .map_err(|_| FitError::DegenerateGeometry("invalid cylinder parameters"))?;

    // Point residuals at the solution, for the inlier fraction.
    let residuals: Vec<f64> = cloud
        .iter()
        .map(|p| {
            let rel = p - p0;
            let t = rel.dot(&dir);
            (rel - dir * t).norm() - radius
        })
        .collect();
    Ok((Geometry::Cylinder(cylinder), report, residuals))
}

/// Candidate shape families ordered from simplest to most complex; the
/// order breaks near-ties in the shape-prior selection.
fn plane_families() -> [PlaneShape; 4] {
    [
        PlaneShape::Circle { radius: 1.0 },
        PlaneShape::Triangle {
            side: 1.0,
            apex_up: true,
        },
        PlaneShape::Triangle {
            side: 1.0,
            apex_up: false,
        },
        PlaneShape::Rectangle {
            width: 1.0,
            height: 1.0,
        },
    ]
}

fn simplicity_rank(shape: &PlaneShape) -> u8 {
    match shape {
        PlaneShape::Circle { .. } => 0,
        PlaneShape::Triangle { .. } => 1,
        PlaneShape::Rectangle { .. } => 2,
    }
}

fn build_plane(center: Vector3<f64>, yaw: f64, shape: PlaneShape) -> Option<PlanePrimitive> {
    PlanePrimitive::upright(center, yaw, shape).ok()
}

fn fit_plane_family(
    cloud: &[Vector3<f64>],
    config: &SolverConfig,
    family: PlaneShape,
    rays: &[(Vector3<f64>, Vector3<f64>)],
    init_center: Vector3<f64>,
    init_yaw: f64,
    init_extents: [f64; 2],
) -> Option<(Geometry, LmReport, Vec<f64>)> {
    let weights = residual_weights(cloud.len(), rays.len(), config.ray_weight_ratio);
    let opts = LmOptions {
        max_iterations: config.max_iterations,
        ..Default::default()
    };

    // params: [cx, cy, cz, yaw, dims...]
    let mut x0 = alloc::vec![init_center.x, init_center.y, init_center.z, init_yaw];
    match family {
        PlaneShape::Rectangle { .. } => {
            x0.push(init_extents[0].max(0.05));
            x0.push(init_extents[1].max(0.05));
        }
        PlaneShape::Circle { .. } => {
            x0.push((0.5 * (init_extents[0] + init_extents[1]) * 0.5).max(0.05))
        }
        PlaneShape::Triangle { .. } => x0.push(init_extents[0].max(init_extents[1]).max(0.05)),
    }

    let shape_of = |params: &[f64]| -> PlaneShape {
        match family {
            PlaneShape::Rectangle { .. } => PlaneShape::Rectangle {
                width: params[4].abs().max(1e-6),
                height: params[5].abs().max(1e-6),
            },
            PlaneShape::Circle { .. } => PlaneShape::Circle {
                radius: params[4].abs().max(1e-6),
            },
            PlaneShape::Triangle { apex_up, .. } => PlaneShape::Triangle {
                side: params[4].abs().max(1e-6),
                apex_up,
            },
        }
    };

    let evaluate = |params: &[f64], out: &mut Vec<f64>| {
        out.clear();
        let center = Vector3::new(params[0], params[1], params[2]);
        let yaw = params[3];
        let normal = Vector3::new(math::cos(yaw), math::sin(yaw), 0.0);
        for p in cloud {
            out.push((p - center).dot(&normal));
        }
        match build_plane(center, yaw, shape_of(params)) {
            Some(plane) => {
                let lm = Geometry::Plane(plane);
                let probe = Landmark::new(1, SemanticClass::TrafficSign, lm).expect("valid sign");
                for (origin, dir) in rays {
                    out.push(probe.ray_hull_distance(origin, dir));
                }
            }
            None => out.extend(core::iter::repeat_n(1e3, rays.len())),
        }
    };

    let (params, report) = lm::minimize(&x0, &weights, Loss::Huber(config.huber_scale), &opts, evaluate);
    let center = Vector3::new(params[0], params[1], params[2]);
    let plane = build_plane(center, params[3], shape_of(&params))?;
    let normal = plane.normal.into_inner();
    let residuals: Vec<f64> = cloud.iter().map(|p| (p - center).dot(&normal)).collect();
    Some((Geometry::Plane(plane), report, residuals))
}

fn fit_sign(
    observations: &ObservationSet,
    cloud: &[Vector3<f64>],
    rays: &[(Vector3<f64>, Vector3<f64>)],
    config: &SolverConfig,
) -> Result<(Geometry, LmReport, Vec<f64>), FitError> {
    // Plane init: robust centroid plus the PCA normal projected to
    // horizontal.
    let centroid = robust_centroid(cloud);
    let mut cov = Matrix3::<f64>::zeros();
    for p in cloud {
        let d = p - centroid;
        cov += d * d.transpose();
    }
    let eig = cov.symmetric_eigen();
    let mut min_idx = 0;
    for i in 1..3 {
        if eig.eigenvalues[i] < eig.eigenvalues[min_idx] {
            min_idx = i;
        }
    }
    let mut normal = eig.eigenvectors.column(min_idx).into_owned();
    normal.z = 0.0;
    if normal.norm() < 1e-9 {
        // Degenerate cloud: face the mean camera position.
        let mut cam = Vector3::zeros();
        for d in &observations.detections {
            cam += d.camera.pose.translation;
        }
        cam /= observations.detections.len() as f64;
        normal = cam - centroid;
        normal.z = 0.0;
    }
    let init_yaw = math::atan2(normal.y, normal.x);

    // Boundary samples: contour rays intersected with the initial plane
    // give robust extents and center even when the cloud is sparse.
    let plane_n = Vector3::new(math::cos(init_yaw), math::sin(init_yaw), 0.0);
    let up = Vector3::z();
    let right = up.cross(&plane_n);
    let mut hits: Vec<[f64; 2]> = Vec::new();
    for (origin, dir) in rays {
        let denom = dir.dot(&plane_n);
        if denom.abs() < 1e-9 {
            continue;
        }
        let t = (centroid - origin).dot(&plane_n) / denom;
        if t <= 0.0 {
            continue;
        }
        let hit = origin + dir * t;
        hits.push([(hit - centroid).dot(&right), (hit - centroid).dot(&up)]);
    }
    let (mut init_center, mut init_extents) = (centroid, [0.3, 0.3]);
    if hits.len() >= 3 {
        let (mut rmin, mut rmax) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut umin, mut umax) = (f64::INFINITY, f64::NEG_INFINITY);
        for h in &hits {
            rmin = rmin.min(h[0]);
            rmax = rmax.max(h[0]);
            umin = umin.min(h[1]);
            umax = umax.max(h[1]);
        }
        init_center = centroid + right * (0.5 * (rmin + rmax)) + up * (0.5 * (umin + umax));
        init_extents = [rmax - rmin, umax - umin];
    }

    // Shape prior: fit every family, keep the lowest cost, preferring the
    // simpler family within the margin.
    let mut candidates: Vec<(Geometry, LmReport, Vec<f64>)> = Vec::new();
    for family in plane_families() {
        if let Some(fit) = fit_plane_family(
            cloud,
            config,
            family,
            rays,
            init_center,
            init_yaw,
            init_extents,
        ) {
            candidates.push(fit);
        }
    }
    if candidates.is_empty() {
        return Err(FitError::DegenerateGeometry("no plane family converged"));
    }
    let best_cost = candidates
        .iter()
        .map(|(_, r, _)| r.final_cost)
        .fold(f64::INFINITY, f64::min);
    candidates.sort_by(|a, b| {
        let (Geometry::Plane(pa), Geometry::Plane(pb)) = (&a.0, &b.0) else {
            unreachable!()
        };
        simplicity_rank(&pa.shape)
            .cmp(&simplicity_rank(&pb.shape))
            .then(a.1.final_cost.total_cmp(&b.1.final_cost))
    });
    let winner = candidates
        .into_iter()
        .find(|(_, r, _)| r.final_cost <= best_cost * (1.0 + config.simplicity_margin))
        .expect("at least the best candidate qualifies");
    Ok(winner)
}

/// Fits a class-dependent primitive to one observation set. The fit works
/// on the foreground-banded cloud and the mask-contour viewing rays.
pub fn fit_landmark(
    observations: &ObservationSet,
    config: &SolverConfig,
) -> Result<FitResult, FitError> {
    if observations.detections.is_empty() {
        return Err(FitError::NoDetections);
    }
    let cloud = observations.foreground_cloud(config.foreground_depth_band);
    if cloud.len() < config.min_support {
        return Err(FitError::InsufficientSupport {
            points: cloud.len(),
            needed: config.min_support,
        });
    }
    let rays = contour_rays(observations, config);
    let (geometry, report, point_residuals) = match observations.class() {
        SemanticClass::TrafficSign => fit_sign(observations, &cloud, &rays, config)?,
        _ => fit_cylinder(&cloud, &rays, config)?,
    };
    let inliers = point_residuals
        .iter()
        .filter(|r| r.abs() <= config.inlier_threshold)
        .count();
    let landmark = Landmark::new(1, observations.class(), geometry)
        .map_err(|_| FitError::DegenerateGeometry("class/geometry mismatch"))?;
    Ok(FitResult {
        landmark,
        final_cost: report.final_cost,
        iterations: report.iterations,
        converged: report.converged,
        inlier_fraction: inliers as f64 / point_residuals.len().max(1) as f64,
        gradient_norm: report.gradient_norm,
    })
}

/// Per-frame input to [`build_map`].
#[derive(Debug, Clone)]
pub struct FrameObservations {
    pub frame_id: u64,
    pub detections: Vec<Detection>,
    /// The frame's LiDAR points transformed into the map frame.
    pub scan_map: Vec<Vector3<f64>>,
}

/// A fitted landmark together with its solver report.
#[derive(Debug, Clone)]
pub struct MappedLandmark {
    pub landmark: Landmark,
    pub fit: FitDiagnostic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitDiagnostic {
    pub final_cost: f64,
    pub iterations: usize,
    pub converged: bool,
    pub inlier_fraction: f64,
    pub support_points: usize,
    pub observation_count: usize,
}

#[derive(Debug, Clone)]
pub struct RejectedSet {
    pub first_frame: u64,
    pub class: SemanticClass,
    pub reason: alloc::string::String,
}

/// The estimated semantic parametric map with per-landmark diagnostics.
#[derive(Debug, Clone, Default)]
pub struct ParametricMap {
    pub landmarks: Vec<MappedLandmark>,
    pub rejected: Vec<RejectedSet>,
    pub dropped_detections: Vec<DroppedDetection>,
}

impl ParametricMap {
    pub fn landmark_refs(&self) -> Vec<Landmark> {
        self.landmarks.iter().map(|m| m.landmark).collect()
    }
}

/// Full pipeline: extract element clouds, associate, fit, merge duplicates,
/// filter. Non-converged fits and sets below the inlier threshold are
/// rejected with diagnostics; instance ids are assigned sequentially in fit
/// order. The per-set fits are independent; the serial loop keeps the
/// result deterministic for a fixed input order.
pub fn build_map(frames: &[FrameObservations], config: &SolverConfig) -> ParametricMap {
    use alloc::string::ToString;

    let mut with_clouds = Vec::new();
    for frame in frames {
        for det in &frame.detections {
            let cloud = extract_element_cloud(det, &frame.scan_map);
            with_clouds.push((det.clone(), cloud));
        }
    }
    let (sets, dropped_detections) = associate_detections_banded(
        with_clouds,
        config.gating_distance,
        config.foreground_depth_band,
    );

    let mut map = ParametricMap {
        dropped_detections,
        ..Default::default()
    };

    // First pass: fit every set.
    let mut accepted: Vec<(ObservationSet, FitResult)> = Vec::new();
    for set in sets {
        match fit_landmark(&set, config) {
            Ok(fit) if fit.converged && fit.inlier_fraction >= config.min_inlier_fraction => {
                accepted.push((set, fit));
            }
            Ok(fit) => map.rejected.push(RejectedSet {
                first_frame: set.first_frame,
                class: set.class(),
                reason: if fit.converged {
                    alloc::format!("inlier fraction {:.3} below threshold", fit.inlier_fraction)
                } else {
                    "did not converge".to_string()
                },
            }),
            Err(e) => map.rejected.push(RejectedSet {
                first_frame: set.first_frame,
                class: set.class(),
                reason: alloc::format!("{e}"),
            }),
        }
    }

    // Duplicate suppression: association can split one physical object
    // across sets (long-range contaminated centroids); fits that land
    // within the gate of an earlier fit of the same class merge into it
    // and the union is refit once.
    let mut merged: Vec<(ObservationSet, FitResult)> = Vec::new();
    for (set, fit) in accepted {
        let duplicate_of = merged.iter().position(|(_, kept)| {
            kept.landmark.class == fit.landmark.class
                && (kept.landmark.anchor() - fit.landmark.anchor()).norm()
                    < config.gating_distance
        });
        match duplicate_of {
            Some(i) => {
                let (kept_set, _) = &mut merged[i];
                kept_set.merge_from(set);
                match fit_landmark(kept_set, config) {
                    Ok(refit)
                        if refit.converged
                            && refit.inlier_fraction >= config.min_inlier_fraction =>
                    {
                        merged[i].1 = refit;
                    }
                    // A failed refit keeps the original landmark; the
                    // extra observations stay attached for diagnostics.
                    _ => {}
                }
            }
            None => merged.push((set, fit)),
        }
    }

    let mut next_id: u32 = 1;
    for (set, fit) in merged {
        let mut landmark = fit.landmark;
        landmark.instance_id = next_id;
        next_id += 1;
        map.landmarks.push(MappedLandmark {
            landmark,
            fit: FitDiagnostic {
                final_cost: fit.final_cost,
                iterations: fit.iterations,
                converged: fit.converged,
                inlier_fraction: fit.inlier_fraction,
                support_points: set.element_cloud.len(),
                observation_count: set.detections.len(),
            },
        });
    }
    map
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Pose;
    use nalgebra::{Matrix3, Rotation3, UnitQuaternion};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn camera_at(position: Vector3<f64>, look_at: Vector3<f64>) -> PinholeCamera {
        let forward = (look_at - position).normalize();
        let right = forward.cross(&Vector3::z()).normalize();
        let down = forward.cross(&right);
        let rot = Rotation3::from_matrix_unchecked(Matrix3::from_columns(&[right, down, forward]));
        PinholeCamera {
            fx: 1500.0,
            fy: 1500.0,
            cx: 1000.0,
            cy: 750.0,
            width: 2000,
            height: 1500,
            pose: Pose::new(0.0, UnitQuaternion::from_rotation_matrix(&rot), position),
        }
    }

    /// Projects an ordered 3D contour into the camera, panicking if any
    /// point is behind it.
    fn project_contour(camera: &PinholeCamera, contour: &[Vector3<f64>]) -> Vec<[f64; 2]> {
        contour
            .iter()
            .map(|p| camera.project(p).expect("contour point in front of camera"))
            .collect()
    }

    /// Silhouette contour of a vertical cylinder seen from `origin`:
    /// both tangent generator lines sampled at `heights` z values.
    fn cylinder_silhouette(
        cyl: &CylinderPrimitive,
        origin: Vector3<f64>,
        heights: usize,
    ) -> Vec<Vector3<f64>> {
        let c = Vector3::new(cyl.base_point.x, cyl.base_point.y, 0.0);
        let o = Vector3::new(origin.x, origin.y, 0.0);
        let d = (o - c).norm();
        let u = (o - c) / d;
        let perp = Vector3::new(-u.y, u.x, 0.0);
        let cos_t = cyl.radius / d;
        let sin_t = math::sqrt(1.0 - cos_t * cos_t);
        let mut contour = Vec::new();
        for side in [1.0, -1.0] {
            let tangent_xy = c + (u * cos_t + perp * (side * sin_t)) * cyl.radius;
            let zs: Vec<f64> = (0..heights)
                .map(|i| cyl.base_point.z + cyl.length * i as f64 / (heights - 1) as f64)
                .collect();
            if side > 0.0 {
                for z in zs {
                    contour.push(Vector3::new(tangent_xy.x, tangent_xy.y, z));
                }
            } else {
                for z in zs.into_iter().rev() {
                    contour.push(Vector3::new(tangent_xy.x, tangent_xy.y, z));
                }
            }
        }
        contour
    }

    fn cylinder_observations(
        cyl: &CylinderPrimitive,
        camera_positions: &[Vector3<f64>],
        n_points: usize,
        range_noise: f64,
        rng: &mut ChaCha8Rng,
    ) -> ObservationSet {
        let target = cyl.centroid();
        let cameras: Vec<PinholeCamera> = camera_positions
            .iter()
            .map(|p| camera_at(*p, target))
            .collect();
        let noise = Normal::new(0.0, range_noise.max(1e-300)).unwrap();
        let mut cloud = Vec::with_capacity(n_points);
        for i in 0..n_points {
            let phi = rng.random_range(0.0..math::TAU);
            let z = rng.random_range(0.0..cyl.length);
            let mut p = cyl.base_point
                + Vector3::new(cyl.radius * math::cos(phi), cyl.radius * math::sin(phi), z);
            if range_noise > 0.0 {
                let sensor = camera_positions[i % camera_positions.len()];
                let dir = (p - sensor).normalize();
                p += dir * noise.sample(rng);
            }
            cloud.push(p);
        }
        let detections: Vec<Detection> = cameras
            .iter()
            .enumerate()
            .map(|(i, cam)| Detection {
                frame_id: i as u64,
                class: SemanticClass::Pole,
                mask_polygon: project_contour(cam, &cylinder_silhouette(cyl, cam.pose.translation, 8)),
                camera: *cam,
            })
            .collect();
        let centroid = cloud.iter().sum::<Vector3<f64>>() / cloud.len() as f64;
        ObservationSet {
            detections,
            element_cloud: cloud.clone(),
            detection_clouds: alloc::vec![cloud],
            detection_centroids: alloc::vec![centroid],
            first_frame: 0,
        }
    }

    fn sign_observations(
        plane: &PlanePrimitive,
        camera_positions: &[Vector3<f64>],
        n_points: usize,
        range_noise: f64,
        rng: &mut ChaCha8Rng,
    ) -> ObservationSet {
        let cameras: Vec<PinholeCamera> = camera_positions
            .iter()
            .map(|p| camera_at(*p, plane.center))
            .collect();
        let noise = Normal::new(0.0, range_noise.max(1e-300)).unwrap();
        let mut cloud = Vec::with_capacity(n_points);
        for i in 0..n_points {
            // Rejection-sample the shape interior in local coordinates.
            let local = loop {
                let r = rng.random_range(-1.5..1.5);
                let u = rng.random_range(-1.5..1.5);
                if plane.shape.contains_local([r, u]) {
                    break [r, u];
                }
            };
            let mut p = plane.to_world(local);
            if range_noise > 0.0 {
                let sensor = camera_positions[i % camera_positions.len()];
                let dir = (p - sensor).normalize();
                p += dir * noise.sample(rng);
            }
            cloud.push(p);
        }
        let ring = plane.boundary_ring(32);
        let detections: Vec<Detection> = cameras
            .iter()
            .enumerate()
            .map(|(i, cam)| Detection {
                frame_id: i as u64,
                class: SemanticClass::TrafficSign,
                mask_polygon: project_contour(cam, &ring),
                camera: *cam,
            })
            .collect();
        let centroid = cloud.iter().sum::<Vector3<f64>>() / cloud.len() as f64;
        ObservationSet {
            detections,
            element_cloud: cloud.clone(),
            detection_clouds: alloc::vec![cloud],
            detection_centroids: alloc::vec![centroid],
            first_frame: 0,
        }
    }

    fn three_views() -> Vec<Vector3<f64>> {
        alloc::vec![
            Vector3::new(0.0, 0.0, 1.8),
            Vector3::new(4.0, -6.0, 1.8),
            Vector3::new(-3.0, 5.0, 1.8),
        ]
    }

    #[test]
    fn noiseless_cylinder_recovers_generator_parameters() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let truth =
            CylinderPrimitive::new(Vector3::new(12.0, 3.0, 0.0), Vector3::z(), 4.0, 0.07).unwrap();
        let obs = cylinder_observations(&truth, &three_views(), 200, 0.0, &mut rng);
        let fit = fit_landmark(&obs, &SolverConfig::default()).unwrap();
        assert!(fit.converged);
        assert!(fit.gradient_norm < 1e-6);
        assert!((fit.inlier_fraction - 1.0).abs() < 1e-12);
        let Geometry::Cylinder(got) = fit.landmark.geometry else {
            panic!("expected cylinder")
        };
        assert!(
            (got.radius - truth.radius).abs() < 1e-6,
            "radius={} want={}",
            got.radius,
            truth.radius
        );
        let angle = math::acos(got.axis.dot(&truth.axis).clamp(-1.0, 1.0));
        assert!(angle < 1e-6, "axis angle={angle}");
        // The fitted axis line passes through the true axis.
        let (_, radial) = truth.cylindrical_coords(&got.centroid());
        assert!(radial < 1e-6, "axis offset={radial}");
    }

    #[test]
    fn noisy_cylinder_radius_within_a_centimeter() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let truth =
            CylinderPrimitive::new(Vector3::new(10.0, -2.0, 0.0), Vector3::z(), 5.0, 0.15).unwrap();
        let views = alloc::vec![
            Vector3::new(0.0, 0.0, 1.8),
            Vector3::new(2.0, -8.0, 1.8),
            Vector3::new(-4.0, 3.0, 1.8),
            Vector3::new(6.0, 6.0, 1.8),
            Vector3::new(-2.0, -6.0, 1.8),
        ];
        let obs = cylinder_observations(&truth, &views, 300, 0.02, &mut rng);
        let fit = fit_landmark(&obs, &SolverConfig::default()).unwrap();
        assert!(fit.converged);
        let Geometry::Cylinder(got) = fit.landmark.geometry else {
            panic!()
        };
        assert!(
            (got.radius - truth.radius).abs() < 0.01,
            "radius={} want={}",
            got.radius,
            truth.radius
        );
    }

    #[test]
    fn circle_sign_wins_the_shape_prior_selection() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let truth = PlanePrimitive::upright(
            Vector3::new(15.0, 2.0, 2.5),
            math::PI, // facing back toward the cameras
            PlaneShape::Circle { radius: 0.42 },
        )
        .unwrap();
        // Oblique views: the circle appears as an ellipse in every camera.
        let views = alloc::vec![
            Vector3::new(0.0, -4.0, 1.5),
            Vector3::new(2.0, 7.0, 1.2),
            Vector3::new(-1.0, 1.0, 2.2),
        ];
        let obs = sign_observations(&truth, &views, 150, 0.0, &mut rng);
        let fit = fit_landmark(&obs, &SolverConfig::default()).unwrap();
        let Geometry::Plane(got) = fit.landmark.geometry else {
            panic!("expected plane")
        };
        let PlaneShape::Circle { radius } = got.shape else {
            panic!("circle family must win, got {:?}", got.shape)
        };
        assert!((radius - 0.42).abs() < 1e-3, "radius={radius}");
        assert!((got.center - truth.center).norm() < 1e-2);
    }

    #[test]
    fn rectangle_sign_recovers_dimensions() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let truth = PlanePrimitive::upright(
            Vector3::new(14.0, -3.0, 2.0),
            0.9 * math::PI,
            PlaneShape::Rectangle {
                width: 0.6,
                height: 0.9,
            },
        )
        .unwrap();
        let obs = sign_observations(&truth, &three_views(), 150, 0.0, &mut rng);
        let fit = fit_landmark(&obs, &SolverConfig::default()).unwrap();
        let Geometry::Plane(got) = fit.landmark.geometry else {
            panic!()
        };
        let PlaneShape::Rectangle { width, height } = got.shape else {
            panic!("rectangle family must win, got {:?}", got.shape)
        };
        assert!((width - 0.6).abs() < 5e-3, "width={width}");
        assert!((height - 0.9).abs() < 5e-3, "height={height}");
    }

    #[test]
    fn fit_is_equivariant_under_yaw_and_translation() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let truth =
            CylinderPrimitive::new(Vector3::new(11.0, 1.0, 0.0), Vector3::z(), 3.0, 0.12).unwrap();
        let obs = cylinder_observations(&truth, &three_views(), 150, 0.0, &mut rng);
        let fit_a = fit_landmark(&obs, &SolverConfig::default()).unwrap();

        let yaw = UnitQuaternion::from_euler_angles(0.0, 0.0, 0.7);
        let shift = Vector3::new(-20.0, 13.0, 4.0);
        let move_pt = |p: &Vector3<f64>| yaw * p + shift;
        let mut moved = obs.clone();
        for p in &mut moved.element_cloud {
            *p = move_pt(p);
        }
        for cloud in &mut moved.detection_clouds {
            for p in cloud.iter_mut() {
                *p = move_pt(p);
            }
        }
        for c in &mut moved.detection_centroids {
            *c = move_pt(c);
        }
        for det in &mut moved.detections {
            det.camera.pose = Pose::new(
                det.camera.pose.timestamp,
                yaw * det.camera.pose.rotation,
                move_pt(&det.camera.pose.translation),
            );
        }
        let fit_b = fit_landmark(&moved, &SolverConfig::default()).unwrap();

        let (Geometry::Cylinder(a), Geometry::Cylinder(b)) =
            (fit_a.landmark.geometry, fit_b.landmark.geometry)
        else {
            panic!()
        };
        assert!(
            (b.radius - a.radius).abs() < 1e-6,
            "radius {} vs {}",
            a.radius,
            b.radius
        );
        assert!(
            (move_pt(&a.base_point) - b.base_point).norm() < 1e-6,
            "base {:?} vs {:?}",
            move_pt(&a.base_point),
            b.base_point
        );
        let moved_axis = yaw * a.axis.into_inner();
        assert!(math::acos(moved_axis.dot(&b.axis).clamp(-1.0, 1.0)) < 1e-6);
    }

    #[test]
    fn duplicating_the_element_cloud_does_not_move_the_minimizer() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let truth =
            CylinderPrimitive::new(Vector3::new(9.0, 4.0, 0.0), Vector3::z(), 4.0, 0.09).unwrap();
        let obs = cylinder_observations(&truth, &three_views(), 120, 0.01, &mut rng);
        let mut doubled = obs.clone();
        doubled.element_cloud.extend(obs.element_cloud.clone());
        let fit_a = fit_landmark(&obs, &SolverConfig::default()).unwrap();
        let fit_b = fit_landmark(&doubled, &SolverConfig::default()).unwrap();
        let (Geometry::Cylinder(a), Geometry::Cylinder(b)) =
            (fit_a.landmark.geometry, fit_b.landmark.geometry)
        else {
            panic!()
        };
        assert!((a.radius - b.radius).abs() < 1e-9);
        assert!((a.base_point - b.base_point).norm() < 1e-9);
    }

    #[test]
    fn fit_cost_is_non_increasing_over_accepted_iterations() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let truth =
            CylinderPrimitive::new(Vector3::new(8.0, 0.0, 0.0), Vector3::z(), 3.0, 0.2).unwrap();
        let obs = cylinder_observations(&truth, &three_views(), 100, 0.02, &mut rng);
        let config = SolverConfig::default();
        let cloud = obs.foreground_cloud(config.foreground_depth_band);
        let rays = contour_rays(&obs, &config);
        let (_, report, _) = fit_cylinder(&cloud, &rays, &config).unwrap();
        for w in report.cost_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-15, "trace={:?}", report.cost_trace);
        }
    }

    #[test]
    fn insufficient_support_is_rejected_with_reason() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let truth =
            CylinderPrimitive::new(Vector3::new(8.0, 0.0, 0.0), Vector3::z(), 3.0, 0.2).unwrap();
        let mut obs = cylinder_observations(&truth, &three_views(), 5, 0.0, &mut rng);
        obs.element_cloud.truncate(5);
        assert_eq!(
            fit_landmark(&obs, &SolverConfig::default()).unwrap_err(),
            FitError::InsufficientSupport {
                points: 5,
                needed: 10
            }
        );
    }

    #[test]
    fn extract_excludes_points_behind_the_camera() {
        let cam = camera_at(Vector3::zeros(), Vector3::new(10.0, 0.0, 0.0));
        let det = Detection {
            frame_id: 0,
            class: SemanticClass::Pole,
            mask_polygon: alloc::vec![[0.0, 0.0], [2000.0, 0.0], [2000.0, 1500.0], [0.0, 1500.0]],
            camera: cam,
        };
        let scan = alloc::vec![Vector3::new(-5.0, 0.0, 0.0), Vector3::new(5.0, 0.0, 0.0)];
        let cloud = extract_element_cloud(&det, &scan);
        assert_eq!(cloud, alloc::vec![Vector3::new(5.0, 0.0, 0.0)]);
    }

    #[test]
    fn extract_includes_point_projecting_to_the_polygon_centroid() {
        let cam = camera_at(Vector3::zeros(), Vector3::new(10.0, 0.0, 0.0));
        // A convex mask around the principal point.
        let det = Detection {
            frame_id: 0,
            class: SemanticClass::Pole,
            mask_polygon: alloc::vec![[900.0, 650.0], [1100.0, 650.0], [1100.0, 850.0], [900.0, 850.0]],
            camera: cam,
        };
        // Projects exactly to the principal point = polygon centroid.
        let scan = alloc::vec![Vector3::new(10.0, 0.0, 0.0)];
        assert_eq!(extract_element_cloud(&det, &scan).len(), 1);
    }

    #[test]
    fn extract_matches_even_odd_oracle_on_random_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let cam = camera_at(Vector3::zeros(), Vector3::new(10.0, 0.0, 0.0));
        // Non-convex pentagon mask.
        let poly = alloc::vec![
            [800.0, 600.0],
            [1200.0, 620.0],
            [1000.0, 760.0],
            [1250.0, 900.0],
            [780.0, 880.0],
        ];
        let det = Detection {
            frame_id: 0,
            class: SemanticClass::Pole,
            mask_polygon: poly.clone(),
            camera: cam,
        };
        let scan: Vec<Vector3<f64>> = (0..10_000)
            .map(|_| {
                Vector3::new(
                    rng.random_range(0.5..30.0),
                    rng.random_range(-6.0..6.0),
                    rng.random_range(-3.0..3.0),
                )
            })
            .collect();
        let cloud = extract_element_cloud(&det, &scan);
        // Independent even-odd oracle.
        let oracle_inside = |px: [f64; 2]| {
            let mut inside = false;
            let mut j = poly.len() - 1;
            for i in 0..poly.len() {
                if (poly[i][1] > px[1]) != (poly[j][1] > px[1])
                    && px[0]
                        < poly[i][0]
                            + (px[1] - poly[i][1]) / (poly[j][1] - poly[i][1])
                                * (poly[j][0] - poly[i][0])
                {
                    inside = !inside;
                }
                j = i;
            }
            inside
        };
        let mut want = Vec::new();
        for p in &scan {
            if let Some(px) = cam.project(p) {
                if oracle_inside(px) {
                    want.push(*p);
                }
            }
        }
        assert_eq!(cloud, want);
    }

    fn dummy_detection(frame: u64, class: SemanticClass) -> Detection {
        Detection {
            frame_id: frame,
            class,
            mask_polygon: alloc::vec![[10.0, 10.0], [20.0, 10.0], [15.0, 20.0]],
            camera: camera_at(Vector3::new(0.0, 0.0, 1.5), Vector3::new(10.0, 0.0, 1.5)),
        }
    }

    #[test]
    fn association_groups_one_object_seen_in_five_frames() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let base = Vector3::new(10.0, 2.0, 1.0);
        let input: Vec<(Detection, Vec<Vector3<f64>>)> = (0..5)
            .map(|f| {
                let jitter = Vector3::new(
                    rng.random_range(-0.15..0.15),
                    rng.random_range(-0.15..0.15),
                    0.0,
                );
                (
                    dummy_detection(f, SemanticClass::Pole),
                    alloc::vec![base + jitter],
                )
            })
            .collect();
        let (sets, dropped) = associate_detections(input, 1.0);
        assert_eq!(sets.len(), 1);
        assert_eq!(sets[0].detections.len(), 5);
        assert!(dropped.is_empty());
    }

    #[test]
    fn association_separates_two_poles_five_meters_apart() {
        let input = alloc::vec![
            (
                dummy_detection(0, SemanticClass::Pole),
                alloc::vec![Vector3::new(10.0, 0.0, 1.0)]
            ),
            (
                dummy_detection(1, SemanticClass::Pole),
                alloc::vec![Vector3::new(10.0, 5.0, 1.0)]
            ),
        ];
        let (sets, _) = associate_detections(input, 1.0);
        assert_eq!(sets.len(), 2);
    }

    #[test]
    fn association_is_perfect_when_spacing_exceeds_three_gates() {
        // 20 objects with >= 3 m spacing, gate 1 m: ground-truth
        // correspondence must be recovered exactly.
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let mut centers = Vec::new();
        while centers.len() < 20 {
            let c = Vector3::new(
                rng.random_range(-40.0..40.0),
                rng.random_range(-40.0..40.0),
                1.0,
            );
            if centers.iter().all(|o: &Vector3<f64>| (o - c).norm() >= 3.0) {
                centers.push(c);
            }
        }
        let mut input = Vec::new();
        let mut truth = Vec::new();
        for frame in 0..6u64 {
            for (obj, c) in centers.iter().enumerate() {
                let jitter = Vector3::new(
                    rng.random_range(-0.2..0.2),
                    rng.random_range(-0.2..0.2),
                    rng.random_range(-0.2..0.2),
                );
                input.push((
                    dummy_detection(frame, SemanticClass::Pole),
                    alloc::vec![c + jitter],
                ));
                truth.push(obj);
            }
        }
        let (sets, dropped) = associate_detections(input, 1.0);
        assert!(dropped.is_empty());
        assert_eq!(sets.len(), 20);
        for set in &sets {
            assert_eq!(set.detections.len(), 6);
            // All member centroids belong to one true object.
            let c = set.centroid();
            let nearest = centers
                .iter()
                .map(|o| (o - c).norm())
                .fold(f64::INFINITY, f64::min);
            assert!(nearest < 0.5);
        }
    }

    #[test]
    fn empty_detection_input_yields_empty_map() {
        let map = build_map(&[], &SolverConfig::default());
        assert!(map.landmarks.is_empty());
        assert!(map.rejected.is_empty());
    }
}
