//! Pipeline configuration: one TOML file holds every knob; CLI flags
//! override file values (flag > file > default).

use std::path::Path;

use maplabel_core::baselines::FovPolicy;
use maplabel_core::geometry::{GeometryError, Pose, SphericalCameraModel};
use maplabel_core::mapping::{PinholeCamera, SolverConfig};
use maplabel_core::primitives::MarginPolicy;
use maplabel_core::render::RenderConfig;
use maplabel_core::synth::{NoiseSpec, SceneSpec};
use nalgebra::{Matrix3, Rotation3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LidarConfig {
    pub width: usize,
    pub height: usize,
    pub elevation_min_deg: f64,
    pub elevation_max_deg: f64,
}

impl Default for LidarConfig {
    fn default() -> Self {
        Self {
            width: 1812,
            height: 128,
            elevation_min_deg: -25.0,
            elevation_max_deg: 15.0,
        }
    }
}

impl LidarConfig {
    pub fn model(&self) -> Result<SphericalCameraModel> {
        SphericalCameraModel::full_turn(
            self.width,
            self.height,
            [
                self.elevation_min_deg.to_radians(),
                self.elevation_max_deg.to_radians(),
            ],
        )
        .map_err(|e: GeometryError| CliError::Config(e.to_string()))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CameraConfig {
    pub width: usize,
    pub height: usize,
    /// Horizontal field of view; the focal length follows from it.
    pub horizontal_fov_deg: f64,
    /// Camera position in the ego (LiDAR) frame.
    pub mount_translation: [f64; 3],
}

impl Default for CameraConfig {
    fn default() -> Self {
        Self {
            width: 4096,
            height: 1536,
            horizontal_fov_deg: 100.0,
            // Windshield camera: forward of and below a roof LiDAR, which
            // produces the parallax the baselines have to cope with.
            mount_translation: [0.8, 0.0, -0.5],
        }
    }
}

impl CameraConfig {
    /// Camera intrinsics plus its pose for a given ego pose. The camera
    /// looks along ego +x; camera frame is z forward, x right, y down.
    pub fn camera_at(&self, ego_pose: &Pose) -> PinholeCamera {
        let fx = self.width as f64 / 2.0 / (self.horizontal_fov_deg.to_radians() / 2.0).tan();
        let rot = Rotation3::from_matrix_unchecked(Matrix3::from_columns(&[
            -Vector3::y(),
            -Vector3::z(),
            Vector3::x(),
        ]));
        let mount = Pose::new(
            0.0,
            UnitQuaternion::from_rotation_matrix(&rot),
            Vector3::from(self.mount_translation),
        );
        let pose = ego_pose.compose(&mount);
        PinholeCamera {
            fx,
            fy: fx,
            cx: self.width as f64 / 2.0,
            cy: self.height as f64 / 2.0,
            width: self.width,
            height: self.height,
            pose,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MarginConfig {
    pub traffic_light_radius: f64,
    pub pole_radius: f64,
    pub plane_box_width: f64,
    pub pixel_dilation: usize,
}

impl Default for MarginConfig {
    fn default() -> Self {
        let d = MarginPolicy::default();
        Self {
            traffic_light_radius: d.traffic_light_radius_margin,
            pole_radius: d.pole_radius_margin,
            plane_box_width: d.plane_box_width,
            pixel_dilation: d.pixel_dilation,
        }
    }
}

impl MarginConfig {
    pub fn policy(&self) -> MarginPolicy {
        MarginPolicy {
            traffic_light_radius_margin: self.traffic_light_radius,
            pole_radius_margin: self.pole_radius,
            plane_box_width: self.plane_box_width,
            pixel_dilation: self.pixel_dilation,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineKnobs {
    /// Landmark selection range τ, meters.
    pub range_threshold: f64,
    /// Frame sampling frequency, Hz (base recording rate is 10 Hz).
    pub frequency_hz: f64,
    #[serde(default = "default_true")]
    pub motion_compensation: bool,
    pub min_segment_pixels: usize,
    pub samples_per_arc: usize,
}

impl Default for PipelineKnobs {
    fn default() -> Self {
        Self {
            range_threshold: 50.0,
            frequency_hz: 10.0,
            motion_compensation: true,
            min_segment_pixels: 4,
            samples_per_arc: 16,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverKnobs {
    pub huber_scale: f64,
    pub max_iterations: usize,
    pub min_support: usize,
    pub inlier_threshold: f64,
    pub min_inlier_fraction: f64,
    pub gating_distance: f64,
    pub ray_weight_ratio: f64,
    pub simplicity_margin: f64,
    pub border_margin_px: f64,
    pub foreground_depth_band: [f64; 2],
}

impl Default for SolverKnobs {
    fn default() -> Self {
        let d = SolverConfig::default();
        Self {
            huber_scale: d.huber_scale,
            max_iterations: d.max_iterations,
            min_support: d.min_support,
            inlier_threshold: d.inlier_threshold,
            min_inlier_fraction: d.min_inlier_fraction,
            gating_distance: d.gating_distance,
            ray_weight_ratio: d.ray_weight_ratio,
            simplicity_margin: d.simplicity_margin,
            border_margin_px: d.border_margin_px,
            foreground_depth_band: d.foreground_depth_band,
        }
    }
}

impl SolverKnobs {
    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            huber_scale: self.huber_scale,
            max_iterations: self.max_iterations,
            min_support: self.min_support,
            inlier_threshold: self.inlier_threshold,
            min_inlier_fraction: self.min_inlier_fraction,
            gating_distance: self.gating_distance,
            ray_weight_ratio: self.ray_weight_ratio,
            simplicity_margin: self.simplicity_margin,
            border_margin_px: self.border_margin_px,
            foreground_depth_band: self.foreground_depth_band,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FovConfig {
    pub supervised_span_deg: f64,
}

impl Default for FovConfig {
    fn default() -> Self {
        Self {
            supervised_span_deg: 100.0,
        }
    }
}

impl FovConfig {
    pub fn policy(&self) -> FovPolicy {
        FovPolicy {
            supervised_azimuth_span: self.supervised_span_deg.to_radians(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneConfig {
    pub pole_count: usize,
    pub traffic_light_count: usize,
    pub sign_count: usize,
    pub clutter_count: usize,
    pub region: [f64; 4],
    pub min_spacing: f64,
    pub corridor_half_width: f64,
    pub ego_speed: f64,
    pub ego_duration: f64,
    pub ego_height: f64,
    pub max_range: f64,
    /// Gap inserted between the train and eval sequence regions, meters.
    pub split_separation: f64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        let d = SceneSpec::default();
        Self {
            pole_count: d.pole_count,
            traffic_light_count: d.traffic_light_count,
            sign_count: d.sign_count,
            clutter_count: d.clutter_count,
            region: d.region,
            min_spacing: d.min_spacing,
            corridor_half_width: d.corridor_half_width,
            ego_speed: d.ego_speed,
            ego_duration: d.ego_duration,
            ego_height: d.ego_height,
            max_range: d.max_range,
            split_separation: 100.0,
        }
    }
}

impl SceneConfig {
    pub fn scene_spec(&self, seed: u64) -> SceneSpec {
        SceneSpec {
            seed,
            pole_count: self.pole_count,
            traffic_light_count: self.traffic_light_count,
            sign_count: self.sign_count,
            clutter_count: self.clutter_count,
            region: self.region,
            min_spacing: self.min_spacing,
            corridor_half_width: self.corridor_half_width,
            ego_speed: self.ego_speed,
            ego_duration: self.ego_duration,
            ego_height: self.ego_height,
            max_range: self.max_range,
            ..SceneSpec::default()
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    pub range_sigma: f64,
    pub pose_translation_sigma: f64,
    pub pose_rotation_sigma_deg: f64,
    pub mask_jitter_px: f64,
    pub mask_bleed_px: f64,
    pub dropout: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            range_sigma: 0.02,
            pose_translation_sigma: 0.0,
            pose_rotation_sigma_deg: 0.0,
            mask_jitter_px: 2.0,
            mask_bleed_px: 3.0,
            dropout: 0.02,
        }
    }
}

impl NoiseConfig {
    pub fn noise_spec(&self) -> NoiseSpec {
        NoiseSpec {
            range_sigma: self.range_sigma,
            pose_translation_sigma: self.pose_translation_sigma,
            pose_rotation_sigma: self.pose_rotation_sigma_deg.to_radians(),
            mask_jitter_px: self.mask_jitter_px,
            mask_bleed_px: self.mask_bleed_px,
            dropout: self.dropout,
        }
    }
}

/// The one configuration file for all pipeline stages.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub lidar: LidarConfig,
    pub camera: CameraConfig,
    pub pipeline: PipelineKnobs,
    pub margins: MarginConfig,
    pub solver: SolverKnobs,
    pub fov: FovConfig,
    pub scene: SceneConfig,
    pub noise: NoiseConfig,
}

/// Flag-level overrides; every field beats the config file when present.
#[derive(Debug, Clone, Default)]
pub struct ConfigOverrides {
    pub seed: Option<u64>,
    pub range_threshold: Option<f64>,
    pub frequency_hz: Option<f64>,
    pub motion_compensation: Option<bool>,
}

impl PipelineConfig {
    pub fn load(path: Option<&Path>, overrides: &ConfigOverrides) -> Result<Self> {
        let mut config = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)?;
                toml::from_str(&text)
                    .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
            }
            None => PipelineConfig::default(),
        };
        if let Some(seed) = overrides.seed {
            config.seed = seed;
        }
        if let Some(tau) = overrides.range_threshold {
            config.pipeline.range_threshold = tau;
        }
        if let Some(hz) = overrides.frequency_hz {
            config.pipeline.frequency_hz = hz;
        }
        if let Some(mc) = overrides.motion_compensation {
            config.pipeline.motion_compensation = mc;
        }
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.pipeline.range_threshold <= 0.0 {
            return Err(CliError::Config("range_threshold must be positive".into()));
        }
        if self.pipeline.frequency_hz <= 0.0 || self.pipeline.frequency_hz > 10.0 {
            return Err(CliError::Config(
                "frequency_hz must be in (0, 10] (base rate is 10 Hz)".into(),
            ));
        }
        if self.pipeline.min_segment_pixels < 1 {
            return Err(CliError::Config("min_segment_pixels must be >= 1".into()));
        }
        let span = self.fov.supervised_span_deg;
        if !(span > 0.0 && span <= 360.0) {
            return Err(CliError::Config(
                "fov.supervised_span_deg must be in (0, 360]".into(),
            ));
        }
        self.lidar.model()?;
        Ok(())
    }

    pub fn render_config(&self) -> RenderConfig {
        RenderConfig {
            range_threshold: self.pipeline.range_threshold,
            min_segment_pixels: self.pipeline.min_segment_pixels,
            dilation: self.margins.pixel_dilation,
            roi: None,
            samples_per_arc: self.pipeline.samples_per_arc,
        }
    }
}
