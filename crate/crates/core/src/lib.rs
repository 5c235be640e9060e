//! Core algorithms for building a semantic parametric landmark map from
//! camera detections and ego poses, and for rendering that map into a LiDAR
//! sensor's domain as 2D range-image labels and 3D point-wise labels.
//!
//! The crate is `no_std` (with `alloc`); all IO, file formats and the CLI
//! live in the companion `maplabel-cli` crate. Everything here is a pure
//! function over immutable inputs and safe to call from any number of
//! workers.
//!
//! Module map:
//! - [`geometry`]: rigid-body math, the spherical range-image projection,
//!   pose interpolation and per-point motion compensation.
//! - [`primitives`]: semantic geometric primitives (cylinders, shaped
//!   planes), hulls, margin expansion and containment tests.
//! - [`mapping`]: detection association and nonlinear least-squares fitting
//!   of primitives to element point clouds and mask contour rays.
//! - [`render`]: occlusion-aware rasterization of the map into per-pixel
//!   semantic/instance labels.
//! - [`frustum`]: frustum-based labeling of 3D points from rendered 2D
//!   labels plus per-landmark depth intervals.
//! - [`baselines`]: the two single-shot camera-to-LiDAR baselines and the
//!   field-of-view ignore logic.
//! - [`synth`]: a deterministic synthetic world with analytic sensor
//!   simulators, used as the independent oracle by the test suites.
//! - [`metrics`]: mIoU and panoptic quality evaluation honoring ignore
//!   regions.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod baselines;
pub mod frustum;
pub mod geometry;
pub mod mapping;
pub mod math;
pub mod metrics;
pub mod primitives;
pub mod raster;
pub mod render;
pub mod synth;

pub use geometry::{GeometryError, Pose, SphericalCameraModel, TimedPoint, Trajectory};
pub use primitives::{
    CylinderPrimitive, Geometry, Landmark, MarginPolicy, PlanePrimitive, PlaneShape, SemanticClass,
};
