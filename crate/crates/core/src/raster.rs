//! 2D rasterization helpers shared by the label renderer and the baselines:
//! even-odd scanline polygon fill at pixel centers, monotone-chain convex
//! hull, and a DDA line rasterizer for degenerate hulls.
//!
//! Polygons live in continuous pixel coordinates. The `u` axis may be
//! "unwrapped" beyond the image width; [`FillTarget::Wrapping`] folds
//! columns back modulo the width so that shapes straddling the azimuth seam
//! of a full-turn sensor never smear across the image.

use alloc::vec::Vec;

use crate::math;

/// How filled columns map to image columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FillTarget {
    /// Columns outside `[0, width)` are discarded.
    Clipping,
    /// Columns are folded modulo the width (full-turn azimuth).
    Wrapping,
}

/// Emits `(col, row)` for every pixel whose center lies inside the polygon
/// under the even-odd rule. Vertices are continuous pixel coordinates;
/// pixel `(c, r)` has center `(c + 0.5, r + 0.5)`.
pub fn fill_polygon(
    vertices: &[[f64; 2]],
    width: usize,
    height: usize,
    target: FillTarget,
    mut emit: impl FnMut(usize, usize),
) {
    if vertices.len() < 3 {
        return;
    }
    let (mut v_min, mut v_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in vertices {
        v_min = v_min.min(v[1]);
        v_max = v_max.max(v[1]);
    }
    let row_start = math::floor(v_min.max(0.0)) as usize;
    let row_end_excl = math::ceil(v_max.min(height as f64)).max(0.0) as usize;

    let mut crossings: Vec<f64> = Vec::new();
    for row in row_start..row_end_excl.min(height) {
        let y = row as f64 + 0.5;
        crossings.clear();
        for i in 0..vertices.len() {
            let a = vertices[i];
            let b = vertices[(i + 1) % vertices.len()];
            // Half-open rule: each crossing counted exactly once, no
            // special casing for vertices on the scanline.
            if (a[1] <= y) != (b[1] <= y) {
                crossings.push(a[0] + (y - a[1]) * (b[0] - a[0]) / (b[1] - a[1]));
            }
        }
        crossings.sort_by(f64::total_cmp);
        for pair in crossings.chunks_exact(2) {
            let (x0, x1) = (pair[0], pair[1]);
            // Pixel centers c + 0.5 in [x0, x1).
            let first = math::ceil(x0 - 0.5) as i64;
            let last_excl = math::ceil(x1 - 0.5) as i64;
            for col in first..last_excl {
                match target {
                    FillTarget::Clipping => {
                        if col >= 0 && (col as usize) < width {
                            emit(col as usize, row);
                        }
                    }
                    FillTarget::Wrapping => {
                        emit(col.rem_euclid(width as i64) as usize, row);
                    }
                }
            }
        }
    }
}

/// Even-odd (crossing number) point-in-polygon test. Points exactly on an
/// edge are not guaranteed either way, matching the strict-interior reading
/// used for mask membership.
pub fn point_in_polygon(polygon: &[[f64; 2]], p: [f64; 2]) -> bool {
    let mut inside = false;
    let n = polygon.len();
    for i in 0..n {
        let a = polygon[i];
        let b = polygon[(i + 1) % n];
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
            if p[0] < x {
                inside = !inside;
            }
        }
    }
    inside
}

/// Monotone-chain convex hull in counter-clockwise order (y up). Collinear
/// inputs collapse to their two extreme points.
pub fn convex_hull(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut pts: Vec<[f64; 2]> = points.to_vec();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup_by(|a, b| a[0] == b[0] && a[1] == b[1]);
    let n = pts.len();
    if n < 3 {
        return pts;
    }
    let cross = |o: &[f64; 2], a: &[f64; 2], b: &[f64; 2]| {
        (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
    };
    let mut lower: Vec<[f64; 2]> = Vec::new();
    for p in &pts {
        while lower.len() >= 2 && cross(&lower[lower.len() - 2], &lower[lower.len() - 1], p) <= 0.0
        {
            lower.pop();
        }
        lower.push(*p);
    }
    let mut upper: Vec<[f64; 2]> = Vec::new();
    for p in pts.iter().rev() {
        while upper.len() >= 2 && cross(&upper[upper.len() - 2], &upper[upper.len() - 1], p) <= 0.0
        {
            upper.pop();
        }
        upper.push(*p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Even-odd interior fill plus the polygon outline: thin shapes (an
/// edge-on plane, a sub-pixel-wide cylinder) always mark the pixels their
/// boundary passes through instead of vanishing.
pub fn fill_polygon_with_outline(
    vertices: &[[f64; 2]],
    width: usize,
    height: usize,
    target: FillTarget,
    mut emit: impl FnMut(usize, usize),
) {
    fill_polygon(vertices, width, height, target, &mut emit);
    for i in 0..vertices.len() {
        let a = vertices[i];
        let b = vertices[(i + 1) % vertices.len()];
        rasterize_segment(a, b, width, height, target, &mut emit);
    }
}

/// Marks the pixels under the segment from `a` to `b` (continuous pixel
/// coordinates), used for degenerate one-dimensional hulls.
pub fn rasterize_segment(
    a: [f64; 2],
    b: [f64; 2],
    width: usize,
    height: usize,
    target: FillTarget,
    mut emit: impl FnMut(usize, usize),
) {
    let steps = math::ceil(math::hypot(b[0] - a[0], b[1] - a[1])).max(1.0) as usize * 2;
    for i in 0..=steps {
        let t = i as f64 / steps as f64;
        let u = a[0] + t * (b[0] - a[0]);
        let v = a[1] + t * (b[1] - a[1]);
        let row = math::floor(v) as i64;
        let col = math::floor(u) as i64;
        if row < 0 || row as usize >= height {
            continue;
        }
        match target {
            FillTarget::Clipping => {
                if col >= 0 && (col as usize) < width {
                    emit(col as usize, row as usize);
                }
            }
            FillTarget::Wrapping => emit(col.rem_euclid(width as i64) as usize, row as usize),
        }
    }
}

/// One 8-connected dilation pass over an instance raster. A background pixel
/// adjacent to exactly one instance joins it; a pixel adjacent to several
/// instances joins the one `priority` ranks first. Pixels already owned by
/// an instance are never relabeled.
pub fn dilate_instances(
    instance: &mut [u32],
    width: usize,
    height: usize,
    wrap_columns: bool,
    passes: usize,
    priority: impl Fn(u32, u32) -> core::cmp::Ordering,
    mut on_grow: impl FnMut(usize, u32),
) {
    for _ in 0..passes {
        let snapshot: Vec<u32> = instance.to_vec();
        for row in 0..height {
            for col in 0..width {
                let idx = row * width + col;
                if snapshot[idx] != 0 {
                    continue;
                }
                let mut winner: u32 = 0;
                for dr in -1i64..=1 {
                    for dc in -1i64..=1 {
                        if dr == 0 && dc == 0 {
                            continue;
                        }
                        let r = row as i64 + dr;
                        if r < 0 || r as usize >= height {
                            continue;
                        }
                        let c = col as i64 + dc;
                        let c = if wrap_columns {
                            c.rem_euclid(width as i64)
                        } else if c < 0 || c as usize >= width {
                            continue;
                        } else {
                            c
                        };
                        let neighbor = snapshot[r as usize * width + c as usize];
                        if neighbor != 0
                            && (winner == 0
                                || priority(neighbor, winner) == core::cmp::Ordering::Less)
                        {
                            winner = neighbor;
                        }
                    }
                }
                if winner != 0 {
                    instance[idx] = winner;
                    on_grow(idx, winner);
                }
            }
        }
    }
}
