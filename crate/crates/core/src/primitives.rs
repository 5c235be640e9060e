//! Semantic geometric primitives: cylinders for poles and traffic lights,
//! upright shaped planes for traffic signs, plus margin expansion,
//! point-containment tests and the ray-to-hull residual used by the fitter.

use alloc::vec::Vec;

use nalgebra::{Unit, Vector3};
use thiserror::Error;

use crate::math;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PrimitiveError {
    #[error("axis/normal/up vector must have unit norm, got {0}")]
    NonUnitVector(f64),
    #[error("dimension must be positive, got {0}")]
    NonPositiveDimension(f64),
    #[error("plane normal must be horizontal (z component {0})")]
    TiltedNormal(f64),
    #[error("plane up vector must be orthogonal to the normal (dot {0})")]
    SkewedUpVector(f64),
    #[error("instance id must be positive")]
    ZeroInstanceId,
    #[error("class {0:?} cannot carry this geometry")]
    ClassGeometryMismatch(SemanticClass),
    #[error("landmark is already margin-expanded")]
    AlreadyExpanded,
}

/// Semantic label. `Background` is never assigned to a landmark.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(u8)]
pub enum SemanticClass {
    Background = 0,
    Pole = 1,
    TrafficLight = 2,
    TrafficSign = 3,
}

impl SemanticClass {
    /// The three object ("thing") classes, excluding background.
    pub const THINGS: [SemanticClass; 3] = [
        SemanticClass::Pole,
        SemanticClass::TrafficLight,
        SemanticClass::TrafficSign,
    ];

    pub fn from_u8(v: u8) -> Option<Self> {
        match v {
            0 => Some(SemanticClass::Background),
            1 => Some(SemanticClass::Pole),
            2 => Some(SemanticClass::TrafficLight),
            3 => Some(SemanticClass::TrafficSign),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SemanticClass::Background => "background",
            SemanticClass::Pole => "pole",
            SemanticClass::TrafficLight => "traffic_light",
            SemanticClass::TrafficSign => "traffic_sign",
        }
    }
}

/// Finite solid cylinder: `base_point + s * axis` for `s` in `[0, length]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CylinderPrimitive {
    pub base_point: Vector3<f64>,
    pub axis: Unit<Vector3<f64>>,
    pub length: f64,
    pub radius: f64,
}

impl CylinderPrimitive {
    pub fn new(
        base_point: Vector3<f64>,
        axis: Vector3<f64>,
        length: f64,
        radius: f64,
    ) -> Result<Self, PrimitiveError> {
        let norm = axis.norm();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(PrimitiveError::NonUnitVector(norm));
        }
        if length <= 0.0 {
            return Err(PrimitiveError::NonPositiveDimension(length));
        }
        if radius <= 0.0 {
            return Err(PrimitiveError::NonPositiveDimension(radius));
        }
        Ok(Self {
            base_point,
            axis: Unit::new_normalize(axis),
            length,
            radius,
        })
    }

    pub fn top_point(&self) -> Vector3<f64> {
        self.base_point + self.axis.into_inner() * self.length
    }

    pub fn centroid(&self) -> Vector3<f64> {
        self.base_point + self.axis.into_inner() * (self.length * 0.5)
    }

    /// (axial coordinate, radial distance) of `point` in cylinder coordinates.
    pub fn cylindrical_coords(&self, point: &Vector3<f64>) -> (f64, f64) {
        let rel = point - self.base_point;
        let axial = rel.dot(&self.axis);
        let radial = (rel - self.axis.into_inner() * axial).norm();
        (axial, radial)
    }
}

/// Boundary family of an upright sign plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PlaneShape {
    Rectangle { width: f64, height: f64 },
    Circle { radius: f64 },
    /// Equilateral triangle with the given side length; `apex_up` selects
    /// which way the apex points.
    Triangle { side: f64, apex_up: bool },
}

impl PlaneShape {
    fn validate(&self) -> Result<(), PrimitiveError> {
        let dims: &[f64] = match self {
            PlaneShape::Rectangle { width, height } => &[*width, *height],
            PlaneShape::Circle { radius } => &[*radius],
            PlaneShape::Triangle { side, .. } => &[*side],
        };
        for &d in dims {
            if d <= 0.0 {
                return Err(PrimitiveError::NonPositiveDimension(d));
            }
        }
        Ok(())
    }

    /// Closed counter-clockwise boundary in local (right, up) coordinates,
    /// centered on the shape centroid. Circles are sampled with
    /// `samples_per_arc` points.
    pub fn boundary_local(&self, samples_per_arc: usize) -> Vec<[f64; 2]> {
        match *self {
            PlaneShape::Rectangle { width, height } => {
                let (hw, hh) = (width * 0.5, height * 0.5);
                alloc::vec![[hw, -hh], [hw, hh], [-hw, hh], [-hw, -hh]]
            }
            PlaneShape::Circle { radius } => (0..samples_per_arc)
                .map(|i| {
                    let phi = math::TAU * i as f64 / samples_per_arc as f64;
                    [radius * math::cos(phi), radius * math::sin(phi)]
                })
                .collect(),
            PlaneShape::Triangle { side, apex_up } => {
                // Vertices relative to the centroid of an equilateral
                // triangle: apex at 2/3 of the height, base at 1/3.
                let h = side * math::sqrt(3.0) / 2.0;
                let (apex, base) = (2.0 * h / 3.0, h / 3.0);
                if apex_up {
                    alloc::vec![[side * 0.5, -base], [0.0, apex], [-side * 0.5, -base]]
                } else {
                    alloc::vec![[side * 0.5, base], [-side * 0.5, base], [0.0, -apex]]
                }
            }
        }
    }

    /// Signed in-plane distance from a local point to the shape boundary,
    /// negative inside.
    pub fn signed_distance_local(&self, p: [f64; 2]) -> f64 {
        match *self {
            PlaneShape::Circle { radius } => math::hypot(p[0], p[1]) - radius,
            _ => polygon_signed_distance(&self.boundary_local(0), p),
        }
    }

    pub fn contains_local(&self, p: [f64; 2]) -> bool {
        self.signed_distance_local(p) <= 0.0
    }
}

/// Signed distance from `p` to a convex/simple polygon boundary; negative
/// inside by the even-odd rule.
fn polygon_signed_distance(poly: &[[f64; 2]], p: [f64; 2]) -> f64 {
    let mut dist = f64::INFINITY;
    let mut inside = false;
    let n = poly.len();
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        dist = dist.min(segment_distance_2d(a, b, p));
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
            if p[0] < x {
                inside = !inside;
            }
        }
    }
    if inside {
        -dist
    } else {
        dist
    }
}

fn segment_distance_2d(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> f64 {
    let (abx, aby) = (b[0] - a[0], b[1] - a[1]);
    let (apx, apy) = (p[0] - a[0], p[1] - a[1]);
    let len2 = abx * abx + aby * aby;
    let t = if len2 > 0.0 {
        ((apx * abx + apy * aby) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    math::hypot(apx - t * abx, apy - t * aby)
}

/// Upright plane with a known boundary shape. The normal is horizontal,
/// `up` lies in the plane; `(right, up, normal)` with `right = up × normal`
/// forms a right-handed frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanePrimitive {
    pub center: Vector3<f64>,
    pub normal: Unit<Vector3<f64>>,
    pub up: Unit<Vector3<f64>>,
    pub shape: PlaneShape,
}

impl PlanePrimitive {
    pub fn new(
        center: Vector3<f64>,
        normal: Vector3<f64>,
        up: Vector3<f64>,
        shape: PlaneShape,
    ) -> Result<Self, PrimitiveError> {
        let n_norm = normal.norm();
        if (n_norm - 1.0).abs() > 1e-9 {
            return Err(PrimitiveError::NonUnitVector(n_norm));
        }
        let u_norm = up.norm();
        if (u_norm - 1.0).abs() > 1e-9 {
            return Err(PrimitiveError::NonUnitVector(u_norm));
        }
        if normal.z.abs() > 1e-9 {
            return Err(PrimitiveError::TiltedNormal(normal.z));
        }
        let dot = normal.dot(&up);
        if dot.abs() > 1e-9 {
            return Err(PrimitiveError::SkewedUpVector(dot));
        }
        shape.validate()?;
        Ok(Self {
            center,
            normal: Unit::new_normalize(normal),
            up: Unit::new_normalize(up),
            shape,
        })
    }

    /// Upright plane whose normal has the given yaw and whose up axis is
    /// vertical — the common case for road signs.
    pub fn upright(
        center: Vector3<f64>,
        normal_yaw: f64,
        shape: PlaneShape,
    ) -> Result<Self, PrimitiveError> {
        Self::new(
            center,
            Vector3::new(math::cos(normal_yaw), math::sin(normal_yaw), 0.0),
            Vector3::z(),
            shape,
        )
    }

    pub fn right(&self) -> Vector3<f64> {
        self.up.cross(&self.normal)
    }

    /// Local (right, up, normal) coordinates of a map-frame point.
    pub fn local_coords(&self, point: &Vector3<f64>) -> (f64, f64, f64) {
        let rel = point - self.center;
        (rel.dot(&self.right()), rel.dot(&self.up), rel.dot(&self.normal))
    }

    pub fn to_world(&self, local: [f64; 2]) -> Vector3<f64> {
        self.center + self.right() * local[0] + self.up.into_inner() * local[1]
    }

    /// Closed CCW boundary ring in the map frame (CCW seen from the
    /// `+normal` side).
    pub fn boundary_ring(&self, samples_per_arc: usize) -> Vec<Vector3<f64>> {
        self.shape
            .boundary_local(samples_per_arc)
            .into_iter()
            .map(|l| self.to_world(l))
            .collect()
    }
}

/// Geometry carried by a landmark. Margin expansion turns a plane into an
/// extruded plane (a thin prism along the normal).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Geometry {
    Cylinder(CylinderPrimitive),
    Plane(PlanePrimitive),
    /// A sign plane extruded by `half_thickness` on both sides of the plane.
    ExtrudedPlane {
        plane: PlanePrimitive,
        half_thickness: f64,
    },
}

impl Geometry {
    pub fn centroid(&self) -> Vector3<f64> {
        match self {
            Geometry::Cylinder(c) => c.centroid(),
            Geometry::Plane(p) | Geometry::ExtrudedPlane { plane: p, .. } => p.center,
        }
    }
}

/// Uncertainty margins applied before label generation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarginPolicy {
    /// Radius expansion for traffic-light cylinders, meters.
    pub traffic_light_radius_margin: f64,
    /// Radius expansion for pole cylinders, meters.
    pub pole_radius_margin: f64,
    /// Total thickness assumed when extruding sign planes to a box, meters.
    pub plane_box_width: f64,
    /// Segment dilation applied to rendered 2D labels, pixels.
    pub pixel_dilation: usize,
}

impl Default for MarginPolicy {
    fn default() -> Self {
        Self {
            traffic_light_radius_margin: 0.05,
            pole_radius_margin: 0.07,
            plane_box_width: 0.10,
            pixel_dilation: 1,
        }
    }
}

/// A semantic geometric primitive with identity. The anchor used for range
/// queries and depth ordering is the geometric centroid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Landmark {
    pub instance_id: u32,
    pub class: SemanticClass,
    pub geometry: Geometry,
    expanded: bool,
}

impl Landmark {
    pub fn new(
        instance_id: u32,
        class: SemanticClass,
        geometry: Geometry,
    ) -> Result<Self, PrimitiveError> {
        if instance_id == 0 {
            return Err(PrimitiveError::ZeroInstanceId);
        }
        let ok = match (&class, &geometry) {
            (SemanticClass::Pole, Geometry::Cylinder(_)) => true,
            (SemanticClass::TrafficLight, Geometry::Cylinder(_)) => true,
            (SemanticClass::TrafficSign, Geometry::Plane(_)) => true,
            (SemanticClass::TrafficSign, Geometry::ExtrudedPlane { .. }) => true,
            _ => false,
        };
        if !ok {
            return Err(PrimitiveError::ClassGeometryMismatch(class));
        }
        Ok(Self {
            instance_id,
            class,
            geometry,
            expanded: matches!(geometry, Geometry::ExtrudedPlane { .. }),
        })
    }

    /// The point used for range queries and depth ordering.
    pub fn anchor(&self) -> Vector3<f64> {
        self.geometry.centroid()
    }

    pub fn is_expanded(&self) -> bool {
        self.expanded
    }

    /// Applies the uncertainty margins: cylinder radii grow by the
    /// class-specific margin, sign planes become thin prisms. Expanding an
    /// already expanded landmark is an error.
    pub fn expand_margin(&self, policy: &MarginPolicy) -> Result<Landmark, PrimitiveError> {
        if self.expanded {
            return Err(PrimitiveError::AlreadyExpanded);
        }
        let geometry = match self.geometry {
            Geometry::Cylinder(mut c) => {
                c.radius += match self.class {
                    SemanticClass::TrafficLight => policy.traffic_light_radius_margin,
                    _ => policy.pole_radius_margin,
                };
                Geometry::Cylinder(c)
            }
            Geometry::Plane(plane) => Geometry::ExtrudedPlane {
                plane,
                half_thickness: policy.plane_box_width * 0.5,
            },
            Geometry::ExtrudedPlane { .. } => unreachable!("guarded by the expanded flag"),
        };
        Ok(Landmark {
            instance_id: self.instance_id,
            class: self.class,
            geometry,
            expanded: true,
        })
    }

    /// Ordered key points of the primitive's silhouette-relevant outline in
    /// the map frame: cylinder rings (bottom then top, each CCW around the
    /// axis) plus the two axis endpoints, the boundary ring for planes, and
    /// both offset rings for extruded planes.
    pub fn hull_keypoints(&self, samples_per_arc: usize) -> Vec<Vector3<f64>> {
        match &self.geometry {
            Geometry::Cylinder(c) => {
                let axis = c.axis.into_inner();
                // Any unit vector orthogonal to the axis seeds the rings.
                let seed = if axis.x.abs() < 0.9 {
                    Vector3::x()
                } else {
                    Vector3::y()
                };
                let e1 = (seed - axis * seed.dot(&axis)).normalize();
                let e2 = axis.cross(&e1);
                let mut pts = Vec::with_capacity(2 * samples_per_arc + 2);
                for ring in 0..2 {
                    let center = if ring == 0 {
                        c.base_point
                    } else {
                        c.top_point()
                    };
                    for i in 0..samples_per_arc {
                        let phi = math::TAU * i as f64 / samples_per_arc as f64;
                        pts.push(center + (e1 * math::cos(phi) + e2 * math::sin(phi)) * c.radius);
                    }
                }
                pts.push(c.base_point);
                pts.push(c.top_point());
                pts
            }
            Geometry::Plane(p) => p.boundary_ring(samples_per_arc),
            Geometry::ExtrudedPlane {
                plane,
                half_thickness,
            } => {
                let offset = plane.normal.into_inner() * *half_thickness;
                let ring = plane.boundary_ring(samples_per_arc);
                let mut pts = Vec::with_capacity(ring.len() * 2);
                pts.extend(ring.iter().map(|p| p + offset));
                pts.extend(ring.iter().map(|p| p - offset));
                pts
            }
        }
    }

    /// Solid point containment. For unexpanded planes only points exactly on
    /// the plane (zero thickness) are contained.
    pub fn contains_point(&self, point: &Vector3<f64>) -> bool {
        match &self.geometry {
            Geometry::Cylinder(c) => {
                let (axial, radial) = c.cylindrical_coords(point);
                (0.0..=c.length).contains(&axial) && radial <= c.radius
            }
            Geometry::Plane(plane) => {
                let (r, u, w) = plane.local_coords(point);
                w == 0.0 && plane.shape.contains_local([r, u])
            }
            Geometry::ExtrudedPlane {
                plane,
                half_thickness,
            } => {
                let (r, u, w) = plane.local_coords(point);
                w.abs() <= *half_thickness && plane.shape.contains_local([r, u])
            }
        }
    }

    /// Signed residual between a viewing ray (half-line) and the primitive's
    /// silhouette hull, negative when the ray pierces the interior:
    /// - cylinders: distance between the ray and the axis segment, minus the
    ///   radius (zero exactly for grazing rays);
    /// - planes: signed in-plane distance from the ray's plane intersection
    ///   to the shape boundary; rays that do not hit the plane in front of
    ///   the origin fall back to the 3D distance to the boundary ring.
    pub fn ray_hull_distance(
        &self,
        ray_origin: &Vector3<f64>,
        ray_direction: &Vector3<f64>,
    ) -> f64 {
        match &self.geometry {
            Geometry::Cylinder(c) => {
                ray_segment_distance(ray_origin, ray_direction, &c.base_point, &c.top_point())
                    - c.radius
            }
            Geometry::Plane(plane) | Geometry::ExtrudedPlane { plane, .. } => {
                let denom = ray_direction.dot(&plane.normal);
                if denom.abs() > 1e-12 {
                    let t = (plane.center - ray_origin).dot(&plane.normal) / denom;
                    if t > 0.0 {
                        let hit = ray_origin + ray_direction * t;
                        let (r, u, _) = plane.local_coords(&hit);
                        return plane.shape.signed_distance_local([r, u]);
                    }
                }
                // No forward intersection: nearest hull point to the ray.
                plane
                    .boundary_ring(64)
                    .iter()
                    .map(|b| point_ray_distance(b, ray_origin, ray_direction))
                    .fold(f64::INFINITY, f64::min)
            }
        }
    }

    /// Surface distance used as the point residual during fitting: distance
    /// of a point to the primitive surface (cylinder lateral surface or the
    /// sign's carrier plane).
    pub fn surface_distance(&self, point: &Vector3<f64>) -> f64 {
        match &self.geometry {
            Geometry::Cylinder(c) => {
                let (_, radial) = c.cylindrical_coords(point);
                radial - c.radius
            }
            Geometry::Plane(plane) | Geometry::ExtrudedPlane { plane, .. } => {
                (point - plane.center).dot(&plane.normal)
            }
        }
    }
}

/// Minimum distance between a half-line and a segment.
pub fn ray_segment_distance(
    ray_origin: &Vector3<f64>,
    ray_direction: &Vector3<f64>,
    seg_a: &Vector3<f64>,
    seg_b: &Vector3<f64>,
) -> f64 {
    // Parameterize ray point = o + s*d (s >= 0), segment point = a + t*(b-a)
    // (t in [0,1]); minimize the squared distance with clamping.
    let d = ray_direction;
    let e = seg_b - seg_a;
    let w = ray_origin - seg_a;
    let a = d.dot(d);
    let b = d.dot(&e);
    let c = e.dot(&e);
    let dd = d.dot(&w);
    let ee = e.dot(&w);
    let denom = a * c - b * b;

    let (mut s, mut t);
    if denom > 1e-15 {
        s = (b * ee - c * dd) / denom;
        t = (a * ee - b * dd) / denom;
    } else {
        // Parallel: fix t from s = 0.
        s = 0.0;
        t = if c > 0.0 { ee / c } else { 0.0 };
    }
    // Clamp and re-solve the free variable.
    if s < 0.0 {
        s = 0.0;
        t = if c > 0.0 { (ee / c).clamp(0.0, 1.0) } else { 0.0 };
    }
    if t < 0.0 {
        t = 0.0;
        s = (-dd / a).max(0.0);
    } else if t > 1.0 {
        t = 1.0;
        s = ((b - dd) / a).max(0.0);
    }
    let ray_pt = ray_origin + d * s;
    let seg_pt = seg_a + e * t;
    (ray_pt - seg_pt).norm()
}

/// Distance from a point to a half-line.
pub fn point_ray_distance(
    point: &Vector3<f64>,
    ray_origin: &Vector3<f64>,
    ray_direction: &Vector3<f64>,
) -> f64 {
    let rel = point - ray_origin;
    let s = rel.dot(ray_direction).max(0.0) / ray_direction.norm_squared();
    (rel - ray_direction * s).norm()
}
