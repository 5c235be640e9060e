//! Renders the parametric map into the LiDAR range-image domain: per-pixel
//! semantic class, instance id and a depth hint, with painter's-algorithm
//! occlusion, range gating, minimum-size filtering and dilation.

use alloc::vec;
use alloc::vec::Vec;

use crate::geometry::{Pose, SphericalCameraModel};
use crate::math;
use crate::primitives::{Geometry, Landmark, SemanticClass};
use crate::raster::{self, FillTarget};

/// Per-pixel semantic class, instance id (0 = none), ignore flag and the
/// distance of the rendered landmark's anchor (0 where none).
#[derive(Debug, Clone, PartialEq)]
pub struct LabelImage {
    pub width: usize,
    pub height: usize,
    pub semantic: Vec<SemanticClass>,
    pub instance: Vec<u32>,
    pub ignore: Vec<bool>,
    pub depth_hint: Vec<f32>,
}

impl LabelImage {
    pub fn background(width: usize, height: usize) -> Self {
        let n = width * height;
        Self {
            width,
            height,
            semantic: vec![SemanticClass::Background; n],
            instance: vec![0; n],
            ignore: vec![false; n],
            depth_hint: vec![0.0; n],
        }
    }

    #[inline]
    pub fn idx(&self, col: usize, row: usize) -> usize {
        row * self.width + col
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }
}

/// Pixel-rectangle region of interest, `[u_min, u_max) x [v_min, v_max)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoiRect {
    pub u_min: f64,
    pub v_min: f64,
    pub u_max: f64,
    pub v_max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderConfig {
    /// Landmark selection threshold τ, meters (strict).
    pub range_threshold: f64,
    /// Segments with fewer filled pixels after occlusion overwriting are
    /// erased.
    pub min_segment_pixels: usize,
    /// 8-connected dilation passes applied to surviving segments.
    pub dilation: usize,
    /// Region of interest for landmark retention; `None` means the full
    /// image.
    pub roi: Option<RoiRect>,
    /// Ring sampling density for curved hull outlines.
    pub samples_per_arc: usize,
}

impl Default for RenderConfig {
    fn default() -> Self {
        Self {
            range_threshold: 50.0,
            min_segment_pixels: 4,
            dilation: 1,
            roi: None,
            samples_per_arc: 16,
        }
    }
}

/// Returns exactly the landmarks whose anchor is strictly closer than `tau`
/// to the ego translation.
pub fn select_landmarks(map: &[Landmark], ego_pose: &Pose, tau: f64) -> Vec<Landmark> {
    map.iter()
        .filter(|lm| (lm.anchor() - ego_pose.translation).norm() < tau)
        .copied()
        .collect()
}

/// The rendered image plus the intermediate rasters the invariants are
/// stated on.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderOutput {
    pub image: LabelImage,
    /// Instance raster after painting, before the minimum-size filter.
    pub pre_filter_instance: Vec<u32>,
    /// Instance raster after the size filter, before dilation.
    pub pre_dilation_instance: Vec<u32>,
}

struct ProjectedPolygon {
    vertices: Vec<[f64; 2]>,
    ordered: bool,
}

/// Projects the landmark's hull keypoints into continuous pixel
/// coordinates, unwrapping the azimuth around the anchor so a shape
/// straddling the seam stays contiguous (the fill folds it back).
fn project_hull(
    landmark: &Landmark,
    ego_pose: &Pose,
    model: &SphericalCameraModel,
    samples_per_arc: usize,
) -> Option<ProjectedPolygon> {
    let anchor_sensor = ego_pose.inverse_transform_point(&landmark.anchor());
    let anchor_ip = model.project_unbounded(&anchor_sensor).ok()?;
    let width = model.width() as f64;
    let mut vertices = Vec::new();
    for kp in landmark.hull_keypoints(samples_per_arc) {
        let p = ego_pose.inverse_transform_point(&kp);
        let ip = model.project_unbounded(&p).ok()?;
        let mut du = ip.u - anchor_ip.u;
        if model.wraps() {
            // Fold the column delta into (-width/2, width/2].
            du -= width * math::round(du / width);
        }
        vertices.push([anchor_ip.u + du, ip.v]);
    }
    // Planes come as an ordered boundary ring; cylinders and extruded
    // planes as point sets whose image-space outline is their convex hull.
    let ordered = matches!(landmark.geometry, Geometry::Plane(_));
    Some(ProjectedPolygon { vertices, ordered })
}

fn roi_contains(roi: &Option<RoiRect>, model: &SphericalCameraModel, u: f64, v: f64) -> bool {
    let folded_u = if model.wraps() {
        math::rem_euclid(u, model.width() as f64)
    } else {
        u
    };
    match roi {
        Some(r) => folded_u >= r.u_min && folded_u < r.u_max && v >= r.v_min && v < r.v_max,
        None => {
            folded_u >= 0.0
                && folded_u < model.width() as f64
                && v >= 0.0
                && v < model.height() as f64
        }
    }
}

/// Renders margin-expanded landmarks into a label image: landmarks are
/// painted in decreasing anchor distance (nearer overwrites), segments
/// smaller than the pixel threshold are erased afterwards, and the
/// survivors are dilated without ever overwriting another instance.
pub fn render_labels(
    landmarks: &[Landmark],
    ego_pose: &Pose,
    model: &SphericalCameraModel,
    config: &RenderConfig,
) -> RenderOutput {
    let mut image = LabelImage::background(model.width(), model.height());
    let selected = select_landmarks(landmarks, ego_pose, config.range_threshold);

    // Painter's order: far to near; equal distances render the lower id
    // later so it deterministically wins.
    let mut order: Vec<(f64, Landmark)> = selected
        .into_iter()
        .map(|lm| ((lm.anchor() - ego_pose.translation).norm(), lm))
        .collect();
    order.sort_by(|a, b| {
        b.0.total_cmp(&a.0)
            .then(b.1.instance_id.cmp(&a.1.instance_id))
    });

    let target = if model.wraps() {
        FillTarget::Wrapping
    } else {
        FillTarget::Clipping
    };

    let mut meta: alloc::collections::BTreeMap<u32, (SemanticClass, f64)> =
        alloc::collections::BTreeMap::new();
    for (distance, lm) in &order {
        let Some(projected) = project_hull(lm, ego_pose, model, config.samples_per_arc) else {
            continue;
        };
        if !projected
            .vertices
            .iter()
            .any(|v| roi_contains(&config.roi, model, v[0], v[1]))
        {
            continue;
        }
        let polygon = if projected.ordered {
            projected.vertices
        } else {
            raster::convex_hull(&projected.vertices)
        };
        meta.insert(lm.instance_id, (lm.class, *distance));
        let (width, height) = (image.width, image.height);
        let mut paint = |col: usize, row: usize| {
            let idx = row * width + col;
            image.instance[idx] = lm.instance_id;
            image.semantic[idx] = lm.class;
            image.depth_hint[idx] = *distance as f32;
        };
        if polygon.len() >= 3 {
            raster::fill_polygon_with_outline(&polygon, width, height, target, &mut paint);
        } else if polygon.len() == 2 {
            raster::rasterize_segment(polygon[0], polygon[1], width, height, target, &mut paint);
        }
    }

    let pre_filter_instance = image.instance.clone();

    // Minimum-size filter on the post-occlusion segments.
    let mut pixel_counts: alloc::collections::BTreeMap<u32, usize> =
        alloc::collections::BTreeMap::new();
    for &id in &image.instance {
        if id != 0 {
            *pixel_counts.entry(id).or_insert(0) += 1;
        }
    }
    for idx in 0..image.pixel_count() {
        let id = image.instance[idx];
        if id != 0 && pixel_counts[&id] < config.min_segment_pixels {
            image.instance[idx] = 0;
            image.semantic[idx] = SemanticClass::Background;
            image.depth_hint[idx] = 0.0;
        }
    }

    let pre_dilation_instance = image.instance.clone();

    // Dilation grows each surviving segment without relabeling pixels owned
    // by another instance; growth conflicts resolve toward the nearer
    // anchor, then the lower id.
    if config.dilation > 0 {
        let mut grown: Vec<(usize, u32)> = Vec::new();
        {
            let meta_ref = &meta;
            raster::dilate_instances(
                &mut image.instance,
                image.width,
                image.height,
                model.wraps(),
                config.dilation,
                |a, b| {
                    let da = meta_ref.get(&a).map(|x| x.1).unwrap_or(f64::INFINITY);
                    let db = meta_ref.get(&b).map(|x| x.1).unwrap_or(f64::INFINITY);
                    da.total_cmp(&db).then(a.cmp(&b))
                },
                |idx, id| grown.push((idx, id)),
            );
        }
        for (idx, id) in grown {
            if let Some(&(class, distance)) = meta.get(&id) {
                image.semantic[idx] = class;
                image.depth_hint[idx] = distance as f32;
            }
        }
    }

    RenderOutput {
        image,
        pre_filter_instance,
        pre_dilation_instance,
    }
}

/// Per-pixel class raster derived from a label image; the instance channel
/// is dropped, ignore is preserved.
#[derive(Debug, Clone, PartialEq)]
pub struct SemanticRaster {
    pub width: usize,
    pub height: usize,
    pub classes: Vec<SemanticClass>,
    pub ignore: Vec<bool>,
}

pub fn derive_semantic(image: &LabelImage) -> SemanticRaster {
    SemanticRaster {
        width: image.width,
        height: image.height,
        classes: image.semantic.clone(),
        ignore: image.ignore.clone(),
    }
}

/// One "thing" segment of a panoptic partition.
#[derive(Debug, Clone, PartialEq)]
pub struct PanopticSegment {
    pub instance_id: u32,
    pub class: SemanticClass,
    /// Linear pixel indices owned by the segment.
    pub pixels: Vec<usize>,
}

/// Panoptic view of a label image: one segment per surviving instance id,
/// with background as the single stuff region (id 0 in the raster).
#[derive(Debug, Clone, PartialEq)]
pub struct PanopticPartition {
    pub width: usize,
    pub height: usize,
    pub segments: Vec<PanopticSegment>,
    pub id_raster: Vec<u32>,
    pub ignore: Vec<bool>,
}

pub fn derive_panoptic(image: &LabelImage) -> PanopticPartition {
    let mut by_id: alloc::collections::BTreeMap<u32, PanopticSegment> =
        alloc::collections::BTreeMap::new();
    for idx in 0..image.pixel_count() {
        let id = image.instance[idx];
        if id == 0 || image.ignore[idx] {
            continue;
        }
        by_id
            .entry(id)
            .or_insert_with(|| PanopticSegment {
                instance_id: id,
                class: image.semantic[idx],
                pixels: Vec::new(),
            })
            .pixels
            .push(idx);
    }
    PanopticPartition {
        width: image.width,
        height: image.height,
        segments: by_id.into_values().collect(),
        id_raster: image.instance.clone(),
        ignore: image.ignore.clone(),
    }
}
