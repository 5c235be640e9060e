//! Assigns semantic/instance labels to 3D LiDAR points by combining each
//! rendered 2D pixel region with an object-specific depth interval: the
//! frustum of a landmark. A point inherits instance `i` iff its spherical
//! projection lands in `i`'s (dilated) pixel region and its range lies in
//! `i`'s depth interval.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::geometry::{Pose, SphericalCameraModel, TimedPoint};
use crate::math;
use crate::primitives::{Geometry, Landmark, SemanticClass};
use crate::render::LabelImage;

/// Outward padding applied to both ends of every depth interval, meters.
/// Together with the margin expansion this guarantees the frustum encloses
/// the whole map element.
pub const DEPTH_PADDING: f64 = 0.10;

/// Pixel region (by instance id in the rendered image) paired with the
/// landmark's depth interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frustum {
    pub instance_id: u32,
    /// Closed interval `[near, far]`, meters.
    pub depth_interval: [f64; 2],
}

/// One labeled LiDAR return in the reference-pose sensor frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabeledPoint {
    pub position: [f32; 3],
    pub range: f32,
    pub timestamp: f64,
    pub semantic: SemanticClass,
    pub instance: u32,
    pub ignore: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LabeledPointCloud {
    pub points: Vec<LabeledPoint>,
}

/// Depth interval of a margin-expanded landmark as seen from the ego pose:
/// the hull-keypoint distance extremes, padded outward. Cylinder bounds are
/// computed analytically from the axis so the radius bound is exact rather
/// than ring-sampling dependent.
pub fn landmark_depth_interval(
    landmark: &Landmark,
    ego_pose: &Pose,
    samples_per_arc: usize,
) -> [f64; 2] {
    let origin = ego_pose.translation;
    let (near, far) = match &landmark.geometry {
        Geometry::Cylinder(c) => {
            let top = c.top_point();
            // Any lateral/cap surface point lies within `radius` of the
            // axis segment; the farthest axis point is an endpoint.
            let seg_dist = point_segment_distance(&origin, &c.base_point, &top);
            let far = (origin - c.base_point).norm().max((origin - top).norm()) + c.radius;
            (seg_dist - c.radius, far)
        }
        _ => {
            let mut near = f64::INFINITY;
            let mut far = f64::NEG_INFINITY;
            for kp in landmark.hull_keypoints(samples_per_arc) {
                let d = (kp - origin).norm();
                near = near.min(d);
                far = far.max(d);
            }
            (near, far)
        }
    };
    [(near - DEPTH_PADDING).max(0.0), far + DEPTH_PADDING]
}

fn point_segment_distance(p: &nalgebra::Vector3<f64>, a: &nalgebra::Vector3<f64>, b: &nalgebra::Vector3<f64>) -> f64 {
    let ab = b - a;
    let t = ((p - a).dot(&ab) / ab.norm_squared()).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

/// Builds the per-instance frusta for the landmarks present in the rendered
/// image.
pub fn build_frusta(
    landmarks: &[Landmark],
    label_image: &LabelImage,
    ego_pose: &Pose,
    samples_per_arc: usize,
) -> BTreeMap<u32, Frustum> {
    let mut present: BTreeMap<u32, Frustum> = BTreeMap::new();
    let rendered: alloc::collections::BTreeSet<u32> =
        label_image.instance.iter().copied().filter(|&i| i != 0).collect();
    for lm in landmarks {
        if rendered.contains(&lm.instance_id) {
            present.insert(
                lm.instance_id,
                Frustum {
                    instance_id: lm.instance_id,
                    depth_interval: landmark_depth_interval(lm, ego_pose, samples_per_arc),
                },
            );
        }
    }
    present
}

/// Labels a motion-compensated point cloud against a label image rendered
/// for the same reference pose. Interval boundaries are inclusive; points
/// projecting outside the model, onto background pixels, or failing the
/// depth gate become background.
pub fn label_points(
    points: &[TimedPoint],
    label_image: &LabelImage,
    model: &SphericalCameraModel,
    frusta: &BTreeMap<u32, Frustum>,
) -> LabeledPointCloud {
    let mut out = Vec::with_capacity(points.len());
    for p in points {
        let mut semantic = SemanticClass::Background;
        let mut instance = 0u32;
        if let Ok(Some(ip)) = model.project(&p.position) {
            let col = math::floor(ip.u) as i64;
            let row = math::floor(ip.v) as i64;
            if col >= 0
                && (col as usize) < label_image.width
                && row >= 0
                && (row as usize) < label_image.height
            {
                let idx = label_image.idx(col as usize, row as usize);
                let id = label_image.instance[idx];
                if id != 0 {
                    if let Some(frustum) = frusta.get(&id) {
                        if ip.range >= frustum.depth_interval[0]
                            && ip.range <= frustum.depth_interval[1]
                        {
                            semantic = label_image.semantic[idx];
                            instance = id;
                        }
                    }
                }
            }
        }
        out.push(LabeledPoint {
            position: [p.position.x as f32, p.position.y as f32, p.position.z as f32],
            range: p.range as f32,
            timestamp: p.timestamp,
            semantic,
            instance,
            ignore: false,
        });
    }
    LabeledPointCloud { points: out }
}
