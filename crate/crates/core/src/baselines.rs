//! The two single-shot camera-to-LiDAR pseudo-label baselines and the
//! field-of-view ignore logic.
//!
//! Both operate on one synchronized (image, scan) pair and emit labels in
//! the same formats as the map-based pipeline, so outputs are drop-in
//! comparable. The first baseline preserves the mask shape by lifting it to
//! a single representative depth; the second preserves each point's
//! measured depth and renders the convex hull of the member pixels.

use alloc::vec::Vec;

use nalgebra::Vector3;

use crate::frustum::{LabeledPoint, LabeledPointCloud};
use crate::geometry::{Pose, SphericalCameraModel, TimedPoint};
use crate::mapping::Detection;
use crate::math;
use crate::primitives::SemanticClass;
use crate::raster::{self, point_in_polygon, FillTarget};
use crate::render::LabelImage;

/// Supervised field of view of the single-shot baselines; everything
/// outside is marked ignore.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FovPolicy {
    /// Total azimuth span centered on the camera axis, radians.
    pub supervised_azimuth_span: f64,
}

impl Default for FovPolicy {
    fn default() -> Self {
        Self {
            supervised_azimuth_span: 100.0_f64.to_radians(),
        }
    }
}

/// One synchronized camera/LiDAR frame handed to a baseline.
#[derive(Debug, Clone, Copy)]
pub struct BaselineFrame<'a> {
    pub detections: &'a [Detection],
    /// Points in the reference-pose sensor frame.
    pub points: &'a [TimedPoint],
    /// Reference pose (map from sensor).
    pub lidar_pose: &'a Pose,
    pub model: &'a SphericalCameraModel,
}

impl BaselineFrame<'_> {
    /// Azimuth of the camera forward axis in the LiDAR frame.
    pub fn camera_axis_azimuth(&self) -> f64 {
        let Some(det) = self.detections.first() else {
            return 0.0;
        };
        let fwd_map = det.camera.pose.transform_vector(&Vector3::z());
        let fwd = self.lidar_pose.rotation.inverse() * fwd_map;
        math::atan2(fwd.y, fwd.x)
    }
}

/// Nearest-rank percentile: the k-th smallest value with
/// `k = ceil(fraction * n)`; always one of the inputs.
pub fn nearest_rank_percentile(values: &[f64], fraction: f64) -> f64 {
    debug_assert!(!values.is_empty());
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let k = math::ceil(fraction * sorted.len() as f64).max(1.0) as usize;
    sorted[k.min(sorted.len()) - 1]
}

/// Camera-frame depths of the scan points whose camera projection falls
/// inside the detection mask, with the point indices.
fn in_mask_points(
    detection: &Detection,
    frame: &BaselineFrame<'_>,
) -> (Vec<usize>, Vec<f64>) {
    let mut indices = Vec::new();
    let mut depths = Vec::new();
    for (i, p) in frame.points.iter().enumerate() {
        let p_map = frame.lidar_pose.transform_point(&p.position);
        let p_cam = detection.camera.pose.inverse_transform_point(&p_map);
        if p_cam.z <= 0.0 {
            continue;
        }
        let px = [
            detection.camera.fx * p_cam.x / p_cam.z + detection.camera.cx,
            detection.camera.fy * p_cam.y / p_cam.z + detection.camera.cy,
        ];
        if point_in_polygon(&detection.mask_polygon, px) {
            indices.push(i);
            depths.push(p_cam.z);
        }
    }
    (indices, depths)
}

fn background_cloud(points: &[TimedPoint]) -> LabeledPointCloud {
    LabeledPointCloud {
        points: points
            .iter()
            .map(|p| LabeledPoint {
                position: [p.position.x as f32, p.position.y as f32, p.position.z as f32],
                range: p.range as f32,
                timestamp: p.timestamp,
                semantic: SemanticClass::Background,
                instance: 0,
                ignore: false,
            })
            .collect(),
    }
}

/// Projects a lidar-frame point to continuous pixel coordinates, unwrapping
/// the column around `anchor_u` on full-turn models.
fn project_unwrapped(
    model: &SphericalCameraModel,
    p: &Vector3<f64>,
    anchor_u: f64,
) -> Option<[f64; 2]> {
    let ip = model.project_unbounded(p).ok()?;
    let width = model.width() as f64;
    let mut du = ip.u - anchor_u;
    if model.wraps() {
        du -= width * math::round(du / width);
    }
    Some([anchor_u + du, ip.v])
}

/// Diagnostics of one lifted instance, used by the shape-preservation
/// checks.
#[derive(Debug, Clone)]
pub struct LiftedInstance {
    pub instance_id: u32,
    pub class: SemanticClass,
    pub representative_depth: f64,
    /// Mask contour lifted to the representative depth, map frame.
    pub contour_3d: Vec<Vector3<f64>>,
    pub supporting_points: usize,
}

/// Shape-preserving lifting: each instance mask is lifted to the nearest-
/// rank 30th percentile of its member point depths and reprojected into the
/// spherical LiDAR image, preserving the contour. 3D labels transfer
/// through the rendered pixel region without a depth gate. Instances with
/// no supporting points are dropped.
pub fn shape_preserving_lift(
    frame: &BaselineFrame<'_>,
    fov: &FovPolicy,
) -> (LabelImage, LabeledPointCloud, Vec<LiftedInstance>) {
    let mut image = LabelImage::background(frame.model.width(), frame.model.height());
    let mut lifted: Vec<LiftedInstance> = Vec::new();

    for (det_idx, det) in frame.detections.iter().enumerate() {
        let (_, depths) = in_mask_points(det, frame);
        if depths.is_empty() {
            continue;
        }
        let depth = nearest_rank_percentile(&depths, 0.30);
        let contour_3d: Vec<Vector3<f64>> = det
            .mask_polygon
            .iter()
            .map(|v| {
                let dir_cam = Vector3::new(
                    (v[0] - det.camera.cx) / det.camera.fx,
                    (v[1] - det.camera.cy) / det.camera.fy,
                    1.0,
                );
                det.camera.pose.transform_point(&(dir_cam * depth))
            })
            .collect();
        lifted.push(LiftedInstance {
            instance_id: det_idx as u32 + 1,
            class: det.class,
            representative_depth: depth,
            contour_3d,
            supporting_points: depths.len(),
        });
    }

    // Far instances first so nearer ones overwrite on overlap.
    lifted.sort_by(|a, b| {
        b.representative_depth
            .total_cmp(&a.representative_depth)
            .then(b.instance_id.cmp(&a.instance_id))
    });
    let target = if frame.model.wraps() {
        FillTarget::Wrapping
    } else {
        FillTarget::Clipping
    };
    for inst in &lifted {
        let sensor: Vec<Vector3<f64>> = inst
            .contour_3d
            .iter()
            .map(|p| frame.lidar_pose.inverse_transform_point(p))
            .collect();
        let Some(first) = sensor.first() else { continue };
        let Ok(anchor) = frame.model.project_unbounded(first) else {
            continue;
        };
        let polygon: Vec<[f64; 2]> = sensor
            .iter()
            .filter_map(|p| project_unwrapped(frame.model, p, anchor.u))
            .collect();
        if polygon.len() < 3 {
            continue;
        }
        let (w, h) = (image.width, image.height);
        raster::fill_polygon_with_outline(&polygon, w, h, target, |col, row| {
            let idx = row * w + col;
            image.instance[idx] = inst.instance_id;
            image.semantic[idx] = inst.class;
            image.depth_hint[idx] = inst.representative_depth as f32;
        });
    }
    lifted.sort_by_key(|l| l.instance_id);

    // 3D labels through the pixel regions, no depth gate.
    let mut cloud = background_cloud(frame.points);
    for (p, lp) in frame.points.iter().zip(cloud.points.iter_mut()) {
        if let Ok(Some(ip)) = frame.model.project(&p.position) {
            let (col, row) = (math::floor(ip.u) as usize, math::floor(ip.v) as usize);
            if col < image.width && row < image.height {
                let idx = image.idx(col, row);
                if image.instance[idx] != 0 {
                    lp.instance = image.instance[idx];
                    lp.semantic = image.semantic[idx];
                }
            }
        }
    }

    let cam_az = frame.camera_axis_azimuth();
    apply_fov_ignore_image(&mut image, frame.model, cam_az, fov);
    apply_fov_ignore_cloud(&mut cloud, cam_az, fov);
    (image, cloud, lifted)
}

/// Depth-preserving projection: the instance masks act as a lookup table
/// assigning labels to the LiDAR points that project into them (ranges
/// untouched); the 2D segment is the filled convex hull of the member
/// points' spherical pixel coordinates, degenerating to the raw pixels for
/// fewer than three points.
pub fn depth_preserving_projection(
    frame: &BaselineFrame<'_>,
    fov: &FovPolicy,
) -> (LabelImage, LabeledPointCloud) {
    let mut image = LabelImage::background(frame.model.width(), frame.model.height());
    let mut cloud = background_cloud(frame.points);

    struct Member {
        instance_id: u32,
        class: SemanticClass,
        median_range: f64,
        pixels: Vec<[f64; 2]>,
        point_indices: Vec<usize>,
    }
    let mut members: Vec<Member> = Vec::new();
    for (det_idx, det) in frame.detections.iter().enumerate() {
        let (indices, _) = in_mask_points(det, frame);
        if indices.is_empty() {
            continue;
        }
        let mut pixels = Vec::new();
        let mut anchor_u = None;
        for &i in &indices {
            if let Ok(Some(ip)) = frame.model.project(&frame.points[i].position) {
                let a = *anchor_u.get_or_insert(ip.u);
                let width = frame.model.width() as f64;
                let mut du = ip.u - a;
                if frame.model.wraps() {
                    du -= width * math::round(du / width);
                }
                pixels.push([a + du, ip.v]);
            }
        }
        let ranges: Vec<f64> = indices.iter().map(|&i| frame.points[i].range).collect();
        members.push(Member {
            instance_id: det_idx as u32 + 1,
            class: det.class,
            median_range: nearest_rank_percentile(&ranges, 0.5),
            pixels,
            point_indices: indices,
        });
    }

    // 3D: later detections overwrite on mask overlap, deterministically.
    for m in &members {
        for &i in &m.point_indices {
            cloud.points[i].instance = m.instance_id;
            cloud.points[i].semantic = m.class;
        }
    }

    // 2D: hulls painted far to near.
    members.sort_by(|a, b| {
        b.median_range
            .total_cmp(&a.median_range)
            .then(b.instance_id.cmp(&a.instance_id))
    });
    let target = if frame.model.wraps() {
        FillTarget::Wrapping
    } else {
        FillTarget::Clipping
    };
    for m in &members {
        let (w, h) = (image.width, image.height);
        let mut paint = |col: usize, row: usize| {
            let idx = row * w + col;
            image.instance[idx] = m.instance_id;
            image.semantic[idx] = m.class;
            image.depth_hint[idx] = m.median_range as f32;
        };
        let hull = raster::convex_hull(&m.pixels);
        match hull.len() {
            0 => {}
            1 => raster::rasterize_segment(hull[0], hull[0], w, h, target, &mut paint),
            2 => raster::rasterize_segment(hull[0], hull[1], w, h, target, &mut paint),
            _ => raster::fill_polygon_with_outline(&hull, w, h, target, &mut paint),
        }
    }

    let cam_az = frame.camera_axis_azimuth();
    apply_fov_ignore_image(&mut image, frame.model, cam_az, fov);
    apply_fov_ignore_cloud(&mut cloud, cam_az, fov);
    (image, cloud)
}

/// Marks every pixel whose column azimuth differs from the camera axis by
/// more than half the supervised span as ignore (clearing any label there);
/// labels inside the span are untouched.
pub fn apply_fov_ignore_image(
    image: &mut LabelImage,
    model: &SphericalCameraModel,
    camera_axis_azimuth: f64,
    fov: &FovPolicy,
) {
    let half = fov.supervised_azimuth_span / 2.0;
    let [az_min, _] = model.azimuth_range();
    for col in 0..image.width {
        let az = az_min + (col as f64 + 0.5) * model.azimuth_resolution();
        let rel = math::wrap_angle(az - camera_axis_azimuth, -math::PI);
        if rel.abs() <= half {
            continue;
        }
        for row in 0..image.height {
            let idx = image.idx(col, row);
            image.ignore[idx] = true;
            image.instance[idx] = 0;
            image.semantic[idx] = SemanticClass::Background;
            image.depth_hint[idx] = 0.0;
        }
    }
}

/// Per-point version of the field-of-view ignore rule.
pub fn apply_fov_ignore_cloud(cloud: &mut LabeledPointCloud, camera_axis_azimuth: f64, fov: &FovPolicy) {
    let half = fov.supervised_azimuth_span / 2.0;
    for p in &mut cloud.points {
        let az = math::atan2(p.position[1] as f64, p.position[0] as f64);
        let rel = math::wrap_angle(az - camera_axis_azimuth, -math::PI);
        if rel.abs() > half {
            p.ignore = true;
            p.instance = 0;
            p.semantic = SemanticClass::Background;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mapping::PinholeCamera;
    use nalgebra::{Matrix3, Rotation3, UnitQuaternion};

    fn deg(d: f64) -> f64 {
        d.to_radians()
    }

    fn model() -> SphericalCameraModel {
        SphericalCameraModel::full_turn(1812, 128, [deg(-25.0), deg(15.0)]).unwrap()
    }

    /// Forward-looking camera co-located with the LiDAR at the origin.
    fn forward_camera() -> PinholeCamera {
        let rot = Rotation3::from_matrix_unchecked(Matrix3::from_columns(&[
            -nalgebra::Vector3::y(),
            -nalgebra::Vector3::z(),
            nalgebra::Vector3::x(),
        ]));
        PinholeCamera {
            fx: 1718.5,
            fy: 1718.5,
            cx: 2048.0,
            cy: 768.0,
            width: 4096,
            height: 1536,
            pose: Pose::new(0.0, UnitQuaternion::from_rotation_matrix(&rot), Vector3::zeros()),
        }
    }

    #[test]
    fn percentile_is_nearest_rank() {
        let depths = [10.0, 11.0, 12.0, 13.0, 14.0, 15.0, 16.0, 17.0, 18.0, 20.0];
        assert_eq!(nearest_rank_percentile(&depths, 0.30), 12.0);
        assert_eq!(nearest_rank_percentile(&[8.0], 0.30), 8.0);
        // Result is always one of the inputs.
        let vals = [3.25, 1.5, 9.75, 2.125, 7.0];
        let p = nearest_rank_percentile(&vals, 0.30);
        assert!(vals.contains(&p));
    }

    #[test]
    fn percentile_resists_parallax_contamination() {
        // 70% sign points near 20 m, 30% background at 30 m: the 30th
        // percentile stays inside the foreground cluster.
        let mut depths = Vec::new();
        for i in 0..70 {
            depths.push(20.0 + 0.001 * i as f64);
        }
        for _ in 0..30 {
            depths.push(30.0);
        }
        let d = nearest_rank_percentile(&depths, 0.30);
        assert!((d - 20.0).abs() < 0.2, "depth={d}");
    }

    fn sign_detection_and_points() -> (Detection, Vec<TimedPoint>) {
        let cam = forward_camera();
        // A square sign at 20 m ahead, 1 m wide, centered on the axis.
        let corners_map = [
            Vector3::new(20.0, 0.5, -0.5),
            Vector3::new(20.0, -0.5, -0.5),
            Vector3::new(20.0, -0.5, 0.5),
            Vector3::new(20.0, 0.5, 0.5),
        ];
        let mask: Vec<[f64; 2]> = corners_map
            .iter()
            .map(|p| {
                let pc = cam.pose.inverse_transform_point(p);
                [cam.fx * pc.x / pc.z + cam.cx, cam.fy * pc.y / pc.z + cam.cy]
            })
            .collect();
        let detection = Detection {
            frame_id: 0,
            class: SemanticClass::TrafficSign,
            mask_polygon: mask,
            camera: cam,
        };
        let mut points = Vec::new();
        for i in 0..10 {
            for j in 0..10 {
                let y = -0.45 + 0.1 * i as f64;
                let z = -0.45 + 0.1 * j as f64;
                points.push(TimedPoint::from_position(Vector3::new(20.0, y, z), 0.0));
            }
        }
        // Clutter outside the mask.
        points.push(TimedPoint::from_position(Vector3::new(5.0, 3.0, 0.0), 0.0));
        (detection, points)
    }

    #[test]
    fn lift_reprojects_contour_vertices_back_onto_the_mask() {
        let (det, points) = sign_detection_and_points();
        let lidar_pose = Pose::identity(0.0);
        let m = model();
        let frame = BaselineFrame {
            detections: core::slice::from_ref(&det),
            points: &points,
            lidar_pose: &lidar_pose,
            model: &m,
        };
        let (image, _, lifted) = shape_preserving_lift(&frame, &FovPolicy::default());
        assert_eq!(lifted.len(), 1);
        assert_eq!(lifted[0].supporting_points, 100);
        // Vertex correspondence: lifting then reprojecting into the camera
        // reproduces the mask contour.
        for (v3, v2) in lifted[0].contour_3d.iter().zip(&det.mask_polygon) {
            let px = det.camera.project(v3).unwrap();
            assert!((px[0] - v2[0]).abs() < 1.0 && (px[1] - v2[1]).abs() < 1.0);
        }
        assert!(image.instance.iter().any(|&i| i == 1));
    }

    #[test]
    fn lift_labels_points_through_the_pixel_region_without_depth_gate() {
        let (det, mut points) = sign_detection_and_points();
        // A wall point far behind the sign but inside its pixel region.
        points.push(TimedPoint::from_position(Vector3::new(30.0, 0.0, 0.0), 0.0));
        let lidar_pose = Pose::identity(0.0);
        let m = model();
        let frame = BaselineFrame {
            detections: core::slice::from_ref(&det),
            points: &points,
            lidar_pose: &lidar_pose,
            model: &m,
        };
        let (_, cloud, _) = shape_preserving_lift(&frame, &FovPolicy::default());
        let wall = cloud.points.last().unwrap();
        assert_eq!(wall.instance, 1, "single-depth lift has no depth gate");
    }

    #[test]
    fn projection_baseline_preserves_ranges_and_labels_mask_members() {
        let (det, points) = sign_detection_and_points();
        let lidar_pose = Pose::identity(0.0);
        let m = model();
        let frame = BaselineFrame {
            detections: core::slice::from_ref(&det),
            points: &points,
            lidar_pose: &lidar_pose,
            model: &m,
        };
        let (image, cloud) = depth_preserving_projection(&frame, &FovPolicy::default());
        assert_eq!(cloud.points.len(), points.len());
        let mut labeled = 0;
        for (p, lp) in points.iter().zip(&cloud.points) {
            assert_eq!(lp.range, p.range as f32, "range must be untouched");
            if lp.instance == 1 {
                labeled += 1;
            }
        }
        assert_eq!(labeled, 100);
        assert!(image.instance.iter().any(|&i| i == 1));
    }

    #[test]
    fn projection_baseline_hull_matches_half_plane_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(61);
        for _ in 0..50 {
            let n = rng.random_range(3..12);
            let pts: Vec<[f64; 2]> = (0..n)
                .map(|_| {
                    [
                        rng.random_range(2.0..30.0),
                        rng.random_range(2.0..14.0),
                    ]
                })
                .collect();
            let hull = raster::convex_hull(&pts);
            if hull.len() < 3 {
                continue;
            }
            let mut got = std::collections::BTreeSet::new();
            raster::fill_polygon(&hull, 32, 16, FillTarget::Clipping, |c, r| {
                got.insert((c, r));
            });
            // Half-plane intersection oracle: pixel center inside all hull
            // edges (hull orientation is consistent, so one sign works).
            let mut sign = 0.0;
            for i in 0..hull.len() {
                let a = hull[i];
                let b = hull[(i + 1) % hull.len()];
                let c = hull[(i + 2) % hull.len()];
                sign += (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0]);
            }
            let orient = sign.signum();
            for row in 0..16usize {
                for col in 0..32usize {
                    let (px, py) = (col as f64 + 0.5, row as f64 + 0.5);
                    let mut inside = true;
                    let mut boundary = false;
                    for i in 0..hull.len() {
                        let a = hull[i];
                        let b = hull[(i + 1) % hull.len()];
                        let cr = (b[0] - a[0]) * (py - a[1]) - (b[1] - a[1]) * (px - a[0]);
                        if cr * orient < 0.0 {
                            inside = false;
                        }
                        if cr == 0.0 {
                            boundary = true;
                        }
                    }
                    if boundary {
                        continue; // on-edge pixels follow the fill's half-open rule
                    }
                    assert_eq!(
                        got.contains(&(col, row)),
                        inside,
                        "hull={hull:?} col={col} row={row}"
                    );
                }
            }
        }
    }

    #[test]
    fn degenerate_hulls_render_as_points_or_a_line() {
        let lidar_pose = Pose::identity(0.0);
        let m = model();
        let cam = forward_camera();
        // Three collinear points along a row of the range image: equal
        // elevation, increasing azimuth. The mask is a thin box around
        // their camera projections.
        let points: Vec<TimedPoint> = [-0.4, 0.0, 0.4]
            .iter()
            .map(|&y| TimedPoint::from_position(Vector3::new(15.0, y, 0.0), 0.0))
            .collect();
        let projected: Vec<[f64; 2]> = points
            .iter()
            .map(|p| cam.project(&p.position).unwrap())
            .collect();
        let (u_lo, u_hi) = (projected[2][0] - 5.0, projected[0][0] + 5.0);
        let v_mid = projected[0][1];
        let mask = vec![
            [u_lo, v_mid - 5.0],
            [u_hi, v_mid - 5.0],
            [u_hi, v_mid + 5.0],
            [u_lo, v_mid + 5.0],
        ];
        let det = Detection {
            frame_id: 0,
            class: SemanticClass::Pole,
            mask_polygon: mask,
            camera: cam,
        };
        let frame = BaselineFrame {
            detections: core::slice::from_ref(&det),
            points: &points,
            lidar_pose: &lidar_pose,
            model: &m,
        };
        let (image, cloud) = depth_preserving_projection(&frame, &FovPolicy::default());
        // 3D labels still assigned.
        assert!(cloud.points.iter().all(|p| p.instance == 1));
        // The 2D segment is a one-pixel-high line.
        let rows: std::collections::BTreeSet<usize> = (0..image.pixel_count())
            .filter(|&i| image.instance[i] == 1)
            .map(|i| i / image.width)
            .collect();
        assert_eq!(rows.len(), 1, "collinear points must fill a single row");
    }

    #[test]
    fn fov_ignore_thresholds_at_half_span() {
        let m = model();
        let mut image = LabelImage::background(m.width(), m.height());
        image.instance[0] = 7;
        image.semantic[0] = SemanticClass::Pole;
        apply_fov_ignore_image(&mut image, &m, 0.0, &FovPolicy::default());
        let col_of = |az_deg: f64| {
            let az = deg(az_deg);
            ((az + math::PI) / m.azimuth_resolution()) as usize
        };
        let idx49 = image.idx(col_of(49.0), 5);
        let idx51 = image.idx(col_of(51.0), 5);
        assert!(!image.ignore[idx49]);
        assert!(image.ignore[idx51]);
        // Column 0 is at azimuth -π: ignored, and its label was cleared.
        assert!(image.ignore[0]);
        assert_eq!(image.instance[0], 0);
        assert_eq!(image.semantic[0], SemanticClass::Background);

        let ignored = image.ignore.iter().filter(|&&b| b).count();
        let fraction = ignored as f64 / image.pixel_count() as f64;
        let want = (360.0 - 100.0) / 360.0;
        let one_column = 1.0 / m.width() as f64;
        assert!(
            (fraction - want).abs() <= one_column,
            "fraction={fraction} want={want}"
        );
    }

    #[test]
    fn baselines_label_nothing_outside_the_camera_frustum() {
        let (det, points) = sign_detection_and_points();
        let lidar_pose = Pose::identity(0.0);
        let m = model();
        let frame = BaselineFrame {
            detections: core::slice::from_ref(&det),
            points: &points,
            lidar_pose: &lidar_pose,
            model: &m,
        };
        let fov = FovPolicy::default();
        let half = fov.supervised_azimuth_span / 2.0;
        let (img1, cloud1, _) = shape_preserving_lift(&frame, &fov);
        let (img2, cloud2) = depth_preserving_projection(&frame, &fov);
        for image in [&img1, &img2] {
            for col in 0..image.width {
                let az = -math::PI + (col as f64 + 0.5) * m.azimuth_resolution();
                if az.abs() > half {
                    for row in 0..image.height {
                        assert_eq!(image.instance[image.idx(col, row)], 0);
                    }
                }
            }
        }
        for cloud in [&cloud1, &cloud2] {
            for p in &cloud.points {
                let az = math::atan2(p.position[1] as f64, p.position[0] as f64);
                if az.abs() > half {
                    assert_eq!(p.instance, 0);
                }
            }
        }
    }
}
