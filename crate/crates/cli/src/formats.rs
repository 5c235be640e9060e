//! On-disk formats: binary rasters and point clouds (little-endian, with a
//! magic, version, payload length and CRC32), plus the human-readable map
//! and trajectory text files. All round-trips are lossless; parse failures
//! name the byte offset.

use std::io::{Read, Write};
use std::path::Path;

use maplabel_core::frustum::{LabeledPoint, LabeledPointCloud};
use maplabel_core::geometry::{Pose, TimedPoint, Trajectory};
use maplabel_core::mapping::{FitDiagnostic, MappedLandmark, ParametricMap};
use maplabel_core::primitives::{
    CylinderPrimitive, Geometry, Landmark, PlanePrimitive, PlaneShape, SemanticClass,
};
use maplabel_core::render::LabelImage;
use nalgebra::Vector3;
use thiserror::Error;

pub const LABEL_IMAGE_MAGIC: &[u8; 8] = b"MLLBLIMG";
pub const CLOUD_MAGIC: &[u8; 8] = b"MLLBLCLD";
pub const SCAN_MAGIC: &[u8; 8] = b"MLSCAN00";
pub const TRUTH_MAGIC: &[u8; 8] = b"MLTRUTH0";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("{path}: unexpected magic at byte 0")]
    BadMagic { path: String },
    #[error("{path}: unsupported version {found} at byte 8 (expected {expected})")]
    BadVersion {
        path: String,
        found: u32,
        expected: u32,
    },
    #[error("{path}: truncated at byte {offset} (needed {needed} more bytes)")]
    Truncated {
        path: String,
        offset: usize,
        needed: usize,
    },
    #[error("{path}: checksum mismatch for payload starting at byte {offset}")]
    ChecksumMismatch { path: String, offset: usize },
    #[error("{path}: invalid field at byte {offset}: {what}")]
    InvalidField {
        path: String,
        offset: usize,
        what: String,
    },
    #[error("{path}:{line}: {what}")]
    TextParse {
        path: String,
        line: usize,
        what: String,
    },
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

/// CRC-32 (IEEE 802.3, reflected polynomial 0xEDB88320).
pub fn crc32(data: &[u8]) -> u32 {
    let mut crc = !0u32;
    for &byte in data {
        crc ^= byte as u32;
        for _ in 0..8 {
            let mask = (crc & 1).wrapping_neg();
            crc = (crc >> 1) ^ (0xEDB8_8320 & mask);
        }
    }
    !crc
}

struct Reader<'a> {
    data: &'a [u8],
    offset: usize,
    path: &'a str,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], FormatError> {
        if self.offset + n > self.data.len() {
            return Err(FormatError::Truncated {
                path: self.path.to_string(),
                offset: self.data.len(),
                needed: self.offset + n - self.data.len(),
            });
        }
        let out = &self.data[self.offset..self.offset + n];
        self.offset += n;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8, FormatError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, FormatError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, FormatError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f32(&mut self) -> Result<f32, FormatError> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64, FormatError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn class(&mut self) -> Result<SemanticClass, FormatError> {
        let offset = self.offset;
        let v = self.u8()?;
        SemanticClass::from_u8(v).ok_or_else(|| FormatError::InvalidField {
            path: self.path.to_string(),
            offset,
            what: format!("unknown semantic class {v}"),
        })
    }
}

/// Checks magic/version and the payload length + CRC header; returns the
/// payload reader.
fn open_payload<'a>(
    data: &'a [u8],
    path: &'a str,
    magic: &[u8; 8],
) -> Result<Reader<'a>, FormatError> {
    let mut r = Reader {
        data,
        offset: 0,
        path,
    };
    if r.take(8)? != magic {
        return Err(FormatError::BadMagic {
            path: path.to_string(),
        });
    }
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(FormatError::BadVersion {
            path: path.to_string(),
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    let payload_len = r.u64()? as usize;
    let stored_crc = r.u32()?;
    let payload_start = r.offset;
    if payload_start + payload_len != data.len() {
        return Err(FormatError::Truncated {
            path: path.to_string(),
            offset: data.len(),
            needed: (payload_start + payload_len).saturating_sub(data.len()),
        });
    }
    if crc32(&data[payload_start..]) != stored_crc {
        return Err(FormatError::ChecksumMismatch {
            path: path.to_string(),
            offset: payload_start,
        });
    }
    Ok(r)
}

fn write_with_header(path: &Path, magic: &[u8; 8], payload: &[u8]) -> Result<(), FormatError> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    file.write_all(magic)?;
    file.write_all(&FORMAT_VERSION.to_le_bytes())?;
    file.write_all(&(payload.len() as u64).to_le_bytes())?;
    file.write_all(&crc32(payload).to_le_bytes())?;
    file.write_all(payload)?;
    file.flush()?;
    Ok(())
}

fn read_all(path: &Path) -> Result<Vec<u8>, FormatError> {
    let mut data = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut data)?;
    Ok(data)
}

// --- label image: header, then per pixel (class u8, instance u32,
// ignore u8, depth_hint f32), row-major ---

pub fn write_label_image(path: &Path, image: &LabelImage) -> Result<(), FormatError> {
    let mut payload = Vec::with_capacity(8 + image.pixel_count() * 10);
    payload.extend_from_slice(&(image.width as u32).to_le_bytes());
    payload.extend_from_slice(&(image.height as u32).to_le_bytes());
    for i in 0..image.pixel_count() {
        payload.push(image.semantic[i] as u8);
        payload.extend_from_slice(&image.instance[i].to_le_bytes());
        payload.push(image.ignore[i] as u8);
        payload.extend_from_slice(&image.depth_hint[i].to_le_bytes());
    }
    write_with_header(path, LABEL_IMAGE_MAGIC, &payload)
}

pub fn read_label_image(path: &Path) -> Result<LabelImage, FormatError> {
    let data = read_all(path)?;
    let path_str = path.display().to_string();
    let mut r = open_payload(&data, &path_str, LABEL_IMAGE_MAGIC)?;
    let width = r.u32()? as usize;
    let height = r.u32()? as usize;
    let mut image = LabelImage::background(width, height);
    for i in 0..width * height {
        image.semantic[i] = r.class()?;
        image.instance[i] = r.u32()?;
        image.ignore[i] = r.u8()? != 0;
        image.depth_hint[i] = r.f32()?;
    }
    Ok(image)
}

// --- labeled point cloud: header, then per point (3x f32 position,
// f32 range, f64 timestamp, class u8, instance u32, ignore u8) ---

pub fn write_labeled_cloud(path: &Path, cloud: &LabeledPointCloud) -> Result<(), FormatError> {
    let mut payload = Vec::with_capacity(8 + cloud.points.len() * 30);
    payload.extend_from_slice(&(cloud.points.len() as u64).to_le_bytes());
    for p in &cloud.points {
        for c in p.position {
            payload.extend_from_slice(&c.to_le_bytes());
        }
        payload.extend_from_slice(&p.range.to_le_bytes());
        payload.extend_from_slice(&p.timestamp.to_le_bytes());
        payload.push(p.semantic as u8);
        payload.extend_from_slice(&p.instance.to_le_bytes());
        payload.push(p.ignore as u8);
    }
    write_with_header(path, CLOUD_MAGIC, &payload)
}

pub fn read_labeled_cloud(path: &Path) -> Result<LabeledPointCloud, FormatError> {
    let data = read_all(path)?;
    let path_str = path.display().to_string();
    let mut r = open_payload(&data, &path_str, CLOUD_MAGIC)?;
    let count = r.u64()? as usize;
    let mut points = Vec::with_capacity(count);
    for _ in 0..count {
        let position = [r.f32()?, r.f32()?, r.f32()?];
        let range = r.f32()?;
        let timestamp = r.f64()?;
        let semantic = r.class()?;
        let instance = r.u32()?;
        let ignore = r.u8()? != 0;
        points.push(LabeledPoint {
            position,
            range,
            timestamp,
            semantic,
            instance,
            ignore,
        });
    }
    Ok(LabeledPointCloud { points })
}

// --- raw scan: header, then per point (3x f32 position in the firing
// sensor frame, f32 range, f64 timestamp) ---

pub fn write_scan(path: &Path, points: &[TimedPoint]) -> Result<(), FormatError> {
    let mut payload = Vec::with_capacity(8 + points.len() * 24);
    payload.extend_from_slice(&(points.len() as u64).to_le_bytes());
    for p in points {
        for c in [p.position.x, p.position.y, p.position.z] {
            payload.extend_from_slice(&(c as f32).to_le_bytes());
        }
        payload.extend_from_slice(&(p.range as f32).to_le_bytes());
        payload.extend_from_slice(&p.timestamp.to_le_bytes());
    }
    write_with_header(path, SCAN_MAGIC, &payload)
}

pub fn read_scan(path: &Path) -> Result<Vec<TimedPoint>, FormatError> {
    let data = read_all(path)?;
    let path_str = path.display().to_string();
    let mut r = open_payload(&data, &path_str, SCAN_MAGIC)?;
    let count = r.u64()? as usize;
    let mut points = Vec::with_capacity(count);
    for _ in 0..count {
        let position = Vector3::new(r.f32()? as f64, r.f32()? as f64, r.f32()? as f64);
        let range = r.f32()? as f64;
        let timestamp = r.f64()?;
        points.push(TimedPoint {
            position,
            timestamp,
            range,
        });
    }
    Ok(points)
}

// --- truth sidecar: header, then one u32 source object id per point ---

pub fn write_truth_ids(path: &Path, ids: &[u32]) -> Result<(), FormatError> {
    let mut payload = Vec::with_capacity(8 + ids.len() * 4);
    payload.extend_from_slice(&(ids.len() as u64).to_le_bytes());
    for id in ids {
        payload.extend_from_slice(&id.to_le_bytes());
    }
    write_with_header(path, TRUTH_MAGIC, &payload)
}

pub fn read_truth_ids(path: &Path) -> Result<Vec<u32>, FormatError> {
    let data = read_all(path)?;
    let path_str = path.display().to_string();
    let mut r = open_payload(&data, &path_str, TRUTH_MAGIC)?;
    let count = r.u64()? as usize;
    let mut ids = Vec::with_capacity(count);
    for _ in 0..count {
        ids.push(r.u32()?);
    }
    Ok(ids)
}

// --- trajectory: text, one pose per line:
// "timestamp tx ty tz qw qx qy qz" ---

pub fn write_trajectory(path: &Path, trajectory: &Trajectory) -> Result<(), FormatError> {
    let mut out = String::from("# maplabel trajectory v1: t tx ty tz qw qx qy qz\n");
    for p in trajectory.poses() {
        let q = p.rotation.quaternion();
        out.push_str(&format!(
            "{} {} {} {} {} {} {} {}\n",
            p.timestamp, p.translation.x, p.translation.y, p.translation.z, q.w, q.i, q.j, q.k
        ));
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn read_trajectory(path: &Path) -> Result<Trajectory, FormatError> {
    let text = std::fs::read_to_string(path)?;
    let path_str = path.display().to_string();
    let mut poses = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<f64> = line
            .split_whitespace()
            .map(|f| f.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| FormatError::TextParse {
                path: path_str.clone(),
                line: lineno + 1,
                what: format!("bad number: {e}"),
            })?;
        if fields.len() != 8 {
            return Err(FormatError::TextParse {
                path: path_str.clone(),
                line: lineno + 1,
                what: format!("expected 8 fields, found {}", fields.len()),
            });
        }
        let pose = Pose::from_parts(
            fields[0],
            [fields[4], fields[5], fields[6], fields[7]],
            Vector3::new(fields[1], fields[2], fields[3]),
        )
        .map_err(|e| FormatError::TextParse {
            path: path_str.clone(),
            line: lineno + 1,
            what: e.to_string(),
        })?;
        poses.push(pose);
    }
    Trajectory::new(poses).map_err(|e| FormatError::TextParse {
        path: path_str,
        line: 0,
        what: e.to_string(),
    })
}

// --- parametric map: human-readable text, one landmark record per line ---

const MAP_HEADER: &str = "maplabel map v1";

fn vec3_field(v: &Vector3<f64>) -> String {
    format!("{},{},{}", v.x, v.y, v.z)
}

fn shape_field(shape: &PlaneShape) -> String {
    match shape {
        PlaneShape::Rectangle { width, height } => format!("rectangle:{width},{height}"),
        PlaneShape::Circle { radius } => format!("circle:{radius}"),
        PlaneShape::Triangle { side, apex_up } => {
            format!("triangle:{side},{}", if *apex_up { "up" } else { "down" })
        }
    }
}

fn geometry_fields(geometry: &Geometry) -> String {
    match geometry {
        Geometry::Cylinder(c) => format!(
            "geometry=cylinder base={} axis={} length={} radius={}",
            vec3_field(&c.base_point),
            vec3_field(&c.axis),
            c.length,
            c.radius
        ),
        Geometry::Plane(p) => format!(
            "geometry=plane center={} normal={} up={} shape={}",
            vec3_field(&p.center),
            vec3_field(&p.normal),
            vec3_field(&p.up),
            shape_field(&p.shape)
        ),
        Geometry::ExtrudedPlane {
            plane,
            half_thickness,
        } => format!(
            "geometry=extruded_plane center={} normal={} up={} shape={} half_thickness={}",
            vec3_field(&plane.center),
            vec3_field(&plane.normal),
            vec3_field(&plane.up),
            shape_field(&plane.shape),
            half_thickness
        ),
    }
}

pub fn write_map(path: &Path, map: &ParametricMap) -> Result<(), FormatError> {
    let mut out = String::from(MAP_HEADER);
    out.push('\n');
    for m in &map.landmarks {
        out.push_str(&format!(
            "landmark id={} class={} {} cost={} iterations={} converged={} inliers={} support={} observations={}\n",
            m.landmark.instance_id,
            m.landmark.class.name(),
            geometry_fields(&m.landmark.geometry),
            m.fit.final_cost,
            m.fit.iterations,
            m.fit.converged,
            m.fit.inlier_fraction,
            m.fit.support_points,
            m.fit.observation_count,
        ));
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Writes a ground-truth landmark set in the same format (no fit fields).
pub fn write_truth_map(path: &Path, landmarks: &[Landmark]) -> Result<(), FormatError> {
    let mut out = String::from(MAP_HEADER);
    out.push('\n');
    for lm in landmarks {
        out.push_str(&format!(
            "landmark id={} class={} {}\n",
            lm.instance_id,
            lm.class.name(),
            geometry_fields(&lm.geometry)
        ));
    }
    std::fs::write(path, out)?;
    Ok(())
}

fn parse_vec3(s: &str) -> Option<Vector3<f64>> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return None;
    }
    Some(Vector3::new(
        parts[0].parse().ok()?,
        parts[1].parse().ok()?,
        parts[2].parse().ok()?,
    ))
}

fn parse_shape(s: &str) -> Option<PlaneShape> {
    let (kind, rest) = s.split_once(':')?;
    match kind {
        "rectangle" => {
            let (w, h) = rest.split_once(',')?;
            Some(PlaneShape::Rectangle {
                width: w.parse().ok()?,
                height: h.parse().ok()?,
            })
        }
        "circle" => Some(PlaneShape::Circle {
            radius: rest.parse().ok()?,
        }),
        "triangle" => {
            let (side, orient) = rest.split_once(',')?;
            Some(PlaneShape::Triangle {
                side: side.parse().ok()?,
                apex_up: match orient {
                    "up" => true,
                    "down" => false,
                    _ => return None,
                },
            })
        }
        _ => None,
    }
}

pub fn read_map(path: &Path) -> Result<ParametricMap, FormatError> {
    let text = std::fs::read_to_string(path)?;
    let path_str = path.display().to_string();
    let mut lines = text.lines().enumerate();
    let parse_err = |lineno: usize, what: String| FormatError::TextParse {
        path: path_str.clone(),
        line: lineno + 1,
        what,
    };
    match lines.next() {
        Some((_, header)) if header.trim() == MAP_HEADER => {}
        Some((n, header)) => {
            return Err(parse_err(n, format!("unexpected header {header:?}")));
        }
        None => return Err(parse_err(0, "empty map file".into())),
    }

    let mut map = ParametricMap::default();
    for (lineno, line) in lines {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = std::collections::BTreeMap::new();
        let mut words = line.split_whitespace();
        if words.next() != Some("landmark") {
            return Err(parse_err(lineno, "expected a landmark record".into()));
        }
        for word in words {
            let (k, v) = word
                .split_once('=')
                .ok_or_else(|| parse_err(lineno, format!("bad field {word:?}")))?;
            fields.insert(k, v);
        }
        let field = |k: &str| -> Result<&str, FormatError> {
            fields
                .get(k)
                .copied()
                .ok_or_else(|| parse_err(lineno, format!("missing field {k}")))
        };
        let id: u32 = field("id")?
            .parse()
            .map_err(|e| parse_err(lineno, format!("bad id: {e}")))?;
        let class = match field("class")? {
            "pole" => SemanticClass::Pole,
            "traffic_light" => SemanticClass::TrafficLight,
            "traffic_sign" => SemanticClass::TrafficSign,
            other => return Err(parse_err(lineno, format!("unknown class {other}"))),
        };
        let bad_geom = |what: &str| parse_err(lineno, format!("bad geometry: {what}"));
        let geometry = match field("geometry")? {
            "cylinder" => {
                let base = parse_vec3(field("base")?).ok_or_else(|| bad_geom("base"))?;
                let axis = parse_vec3(field("axis")?).ok_or_else(|| bad_geom("axis"))?;
                let length: f64 = field("length")?.parse().map_err(|_| bad_geom("length"))?;
                let radius: f64 = field("radius")?.parse().map_err(|_| bad_geom("radius"))?;
                Geometry::Cylinder(
                    CylinderPrimitive::new(base, axis, length, radius)
                        .map_err(|e| bad_geom(&e.to_string()))?,
                )
            }
            kind @ ("plane" | "extruded_plane") => {
                let center = parse_vec3(field("center")?).ok_or_else(|| bad_geom("center"))?;
                let normal = parse_vec3(field("normal")?).ok_or_else(|| bad_geom("normal"))?;
                let up = parse_vec3(field("up")?).ok_or_else(|| bad_geom("up"))?;
                let shape = parse_shape(field("shape")?).ok_or_else(|| bad_geom("shape"))?;
                let plane = PlanePrimitive::new(center, normal, up, shape)
                    .map_err(|e| bad_geom(&e.to_string()))?;
                if kind == "plane" {
                    Geometry::Plane(plane)
                } else {
                    let half: f64 = field("half_thickness")?
                        .parse()
                        .map_err(|_| bad_geom("half_thickness"))?;
                    Geometry::ExtrudedPlane {
                        plane,
                        half_thickness: half,
                    }
                }
            }
            other => return Err(parse_err(lineno, format!("unknown geometry {other}"))),
        };
        let landmark =
            Landmark::new(id, class, geometry).map_err(|e| parse_err(lineno, e.to_string()))?;
        let fit = if fields.contains_key("cost") {
            FitDiagnostic {
                final_cost: field("cost")?
                    .parse()
                    .map_err(|e| parse_err(lineno, format!("bad cost: {e}")))?,
                iterations: field("iterations")?
                    .parse()
                    .map_err(|e| parse_err(lineno, format!("bad iterations: {e}")))?,
                converged: field("converged")?
                    .parse()
                    .map_err(|e| parse_err(lineno, format!("bad converged: {e}")))?,
                inlier_fraction: field("inliers")?
                    .parse()
                    .map_err(|e| parse_err(lineno, format!("bad inliers: {e}")))?,
                support_points: field("support")?
                    .parse()
                    .map_err(|e| parse_err(lineno, format!("bad support: {e}")))?,
                observation_count: field("observations")?
                    .parse()
                    .map_err(|e| parse_err(lineno, format!("bad observations: {e}")))?,
            }
        } else {
            FitDiagnostic {
                final_cost: 0.0,
                iterations: 0,
                converged: true,
                inlier_fraction: 1.0,
                support_points: 0,
                observation_count: 0,
            }
        };
        map.landmarks.push(MappedLandmark { landmark, fit });
    }
    Ok(map)
}

// --- detections: JSON per frame ---

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct CameraDto {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
    pub translation: [f64; 3],
    /// Unit quaternion (w, x, y, z), camera-to-map.
    pub rotation_wxyz: [f64; 4],
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct DetectionDto {
    pub class: String,
    pub polygon: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct DetectionFrameDto {
    pub frame_id: u64,
    pub camera: CameraDto,
    pub detections: Vec<DetectionDto>,
}

pub fn write_detections(
    path: &Path,
    frame_id: u64,
    camera: &maplabel_core::mapping::PinholeCamera,
    detections: &[maplabel_core::mapping::Detection],
) -> Result<(), FormatError> {
    let q = camera.pose.rotation.quaternion();
    let dto = DetectionFrameDto {
        frame_id,
        camera: CameraDto {
            fx: camera.fx,
            fy: camera.fy,
            cx: camera.cx,
            cy: camera.cy,
            width: camera.width,
            height: camera.height,
            translation: [
                camera.pose.translation.x,
                camera.pose.translation.y,
                camera.pose.translation.z,
            ],
            rotation_wxyz: [q.w, q.i, q.j, q.k],
        },
        detections: detections
            .iter()
            .map(|d| DetectionDto {
                class: d.class.name().to_string(),
                polygon: d.mask_polygon.clone(),
            })
            .collect(),
    };
    let json = serde_json::to_string_pretty(&dto).expect("serializable");
    std::fs::write(path, json)?;
    Ok(())
}

pub fn read_detections(
    path: &Path,
) -> Result<(u64, Vec<maplabel_core::mapping::Detection>), FormatError> {
    let path_str = path.display().to_string();
    let text = std::fs::read_to_string(path)?;
    let dto: DetectionFrameDto =
        serde_json::from_str(&text).map_err(|e| FormatError::TextParse {
            path: path_str.clone(),
            line: e.line(),
            what: e.to_string(),
        })?;
    let pose = Pose::from_parts(0.0, dto.camera.rotation_wxyz, dto.camera.translation.into())
        .map_err(|e| FormatError::TextParse {
            path: path_str.clone(),
            line: 0,
            what: e.to_string(),
        })?;
    let camera = maplabel_core::mapping::PinholeCamera {
        fx: dto.camera.fx,
        fy: dto.camera.fy,
        cx: dto.camera.cx,
        cy: dto.camera.cy,
        width: dto.camera.width,
        height: dto.camera.height,
        pose,
    };
    let mut detections = Vec::new();
    for d in dto.detections {
        let class = match d.class.as_str() {
            "pole" => SemanticClass::Pole,
            "traffic_light" => SemanticClass::TrafficLight,
            "traffic_sign" => SemanticClass::TrafficSign,
            other => {
                return Err(FormatError::TextParse {
                    path: path_str.clone(),
                    line: 0,
                    what: format!("unknown class {other}"),
                })
            }
        };
        detections.push(maplabel_core::mapping::Detection {
            frame_id: dto.frame_id,
            class,
            mask_polygon: d.polygon,
            camera,
        });
    }
    Ok((dto.frame_id, detections))
}
