//! Stage drivers behind the CLI subcommands. Per-frame work fans out over a
//! worker pool (size from `MAPLABEL_WORKERS`); every frame writes its own
//! files, so outputs are byte-identical for any worker count.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use maplabel_core::baselines::{depth_preserving_projection, shape_preserving_lift, BaselineFrame};
use maplabel_core::frustum::{build_frusta, label_points, LabeledPoint, LabeledPointCloud};
use maplabel_core::geometry::{motion_compensate, SphericalCameraModel, TimedPoint, Trajectory};
use maplabel_core::mapping::{build_map, FrameObservations};
use maplabel_core::metrics::{miou_3d, panoptic_quality, ConfusionAccumulator, PanopticAccumulator};
use maplabel_core::primitives::{Landmark, SemanticClass};
use maplabel_core::render::{derive_panoptic, render_labels, LabelImage};
use maplabel_core::synth::{
    generate_scene, perturb_trajectory, simulate_camera, simulate_lidar, stream_rng,
    subsample_frame_indices, Scene, SceneSpec,
};
use nalgebra::Vector3;
use rayon::prelude::*;

use crate::config::PipelineConfig;
use crate::dataset::{frame_file, DatasetManifest, SequenceEntry, SequencePaths, SplitEntry};
use crate::error::{CliError, Result};
use crate::formats;

/// RNG stream offsets: stream 0 seeds scene generation, frame streams
/// start at 1, pose noise uses a disjoint high stream.
const POSE_NOISE_STREAM: u64 = 1 << 32;
const BASE_HZ: f64 = 10.0;

/// Builds the worker pool from `MAPLABEL_WORKERS` (default: all cores).
pub fn worker_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(value) = std::env::var("MAPLABEL_WORKERS") {
        let n: usize = value
            .parse()
            .map_err(|_| CliError::Config(format!("MAPLABEL_WORKERS={value} is not a number")))?;
        builder = builder.num_threads(n.max(1));
    }
    builder
        .build()
        .map_err(|e| CliError::Pipeline(e.to_string()))
}

fn translate_scene(mut scene: Scene, offset: Vector3<f64>) -> Scene {
    use maplabel_core::primitives::Geometry;
    for lm in &mut scene.landmarks {
        lm.geometry = match lm.geometry {
            Geometry::Cylinder(mut c) => {
                c.base_point += offset;
                Geometry::Cylinder(c)
            }
            Geometry::Plane(mut p) => {
                p.center += offset;
                Geometry::Plane(p)
            }
            Geometry::ExtrudedPlane {
                mut plane,
                half_thickness,
            } => {
                plane.center += offset;
                Geometry::ExtrudedPlane {
                    plane,
                    half_thickness,
                }
            }
        };
    }
    for b in &mut scene.clutter {
        b.min += offset;
        b.max += offset;
    }
    let poses: Vec<_> = scene
        .trajectory
        .poses()
        .iter()
        .map(|p| {
            let mut p = *p;
            p.translation += offset;
            p
        })
        .collect();
    scene.trajectory = Trajectory::new(poses).expect("timestamps unchanged");
    scene
}

fn frame_times(spec: &SceneSpec) -> Vec<f64> {
    let period = 1.0 / BASE_HZ;
    let count = ((spec.ego_duration - period) * BASE_HZ).floor() as usize + 1;
    (0..count).map(|i| i as f64 * period).collect()
}

/// Simulates the train and eval sequences (geographically separated along
/// x) and writes the dataset tree plus manifest.
pub fn run_simulate(config: &PipelineConfig, out: &Path) -> Result<()> {
    let model = config.lidar.model()?;
    let noise = config.noise.noise_spec();
    let mut sequences = Vec::new();

    let region_len = config.scene.region[1] - config.scene.region[0];
    let plan = [
        ("train", config.seed, 0.0),
        (
            "eval",
            config.seed + 1,
            region_len + config.scene.split_separation,
        ),
    ];
    for (name, seed, x_offset) in plan {
        let spec = config.scene.scene_spec(seed);
        let scene = generate_scene(&spec).map_err(|e| CliError::Pipeline(e.to_string()))?;
        let scene = translate_scene(scene, Vector3::new(x_offset, 0.0, 0.0));
        let mut noise_rng = stream_rng(seed, POSE_NOISE_STREAM);
        let noisy_trajectory = perturb_trajectory(&scene.trajectory, &noise, &mut noise_rng);

        let seq_dir = out.join(name);
        for sub in ["scans", "detections", "truth/ids", "truth/labels"] {
            std::fs::create_dir_all(seq_dir.join(sub))?;
        }
        formats::write_trajectory(&seq_dir.join("trajectory.txt"), &noisy_trajectory)?;
        formats::write_truth_map(&seq_dir.join("truth/map.txt"), &scene.landmarks)?;

        let times = frame_times(&spec);
        times
            .par_iter()
            .enumerate()
            .try_for_each(|(frame, &t)| -> Result<()> {
                let mut rng = stream_rng(seed, 1 + frame as u64);
                let scan = simulate_lidar(&scene, t, 1.0 / BASE_HZ, &model, &noise, &mut rng);

                // Detections come from the true world; the stored camera
                // pose is what the (noisy) localization believes.
                let true_ego = scene.trajectory.interpolate(t).expect("within span");
                let true_camera = config.camera.camera_at(&true_ego);
                let mut detections =
                    simulate_camera(&scene, &true_camera, frame as u64, &noise, &mut rng);
                let believed_ego = noisy_trajectory.interpolate(t).expect("within span");
                let believed_camera = config.camera.camera_at(&believed_ego);
                for det in &mut detections {
                    det.camera = believed_camera;
                }

                formats::write_scan(&seq_dir.join("scans").join(frame_file(frame, "scn")), &scan.points)?;
                formats::write_truth_ids(
                    &seq_dir.join("truth/ids").join(frame_file(frame, "ids")),
                    &scan.truth_ids,
                )?;
                formats::write_label_image(
                    &seq_dir.join("truth/labels").join(frame_file(frame, "lbl")),
                    &scan.truth_image,
                )?;
                formats::write_detections(
                    &seq_dir.join("detections").join(frame_file(frame, "json")),
                    frame as u64,
                    &believed_camera,
                    &detections,
                )?;
                Ok(())
            })?;

        sequences.push(SequenceEntry {
            name: name.to_string(),
            frame_count: times.len(),
            base_hz: BASE_HZ,
            trajectory: format!("{name}/trajectory.txt"),
            scan_dir: format!("{name}/scans"),
            detection_dir: format!("{name}/detections"),
            truth_map: Some(format!("{name}/truth/map.txt")),
            truth_id_dir: Some(format!("{name}/truth/ids")),
            truth_label_dir: Some(format!("{name}/truth/labels")),
        });
    }

    let manifest = DatasetManifest {
        format_version: 1,
        sequences,
        split: SplitEntry {
            train: vec!["train".into()],
            eval: vec!["eval".into()],
            geographic_separation_m: config.scene.split_separation,
        },
    };
    manifest.save(out)?;
    Ok(())
}

/// Everything a per-frame stage needs about one sequence.
pub struct SequenceContext {
    pub root: PathBuf,
    pub entry: SequenceEntry,
    pub paths: SequencePaths,
    pub trajectory: Trajectory,
    pub frames: Vec<usize>,
    pub model: SphericalCameraModel,
}

impl SequenceContext {
    pub fn open(
        config: &PipelineConfig,
        dataset_root: &Path,
        sequence: Option<&str>,
    ) -> Result<Self> {
        let manifest = DatasetManifest::load(dataset_root)?;
        let name = match sequence {
            Some(n) => n.to_string(),
            None => manifest
                .split
                .eval
                .first()
                .cloned()
                .unwrap_or_else(|| manifest.sequences[0].name.clone()),
        };
        let entry = manifest.sequence(&name)?.clone();
        let paths = SequencePaths::new(dataset_root, &entry);
        let trajectory = formats::read_trajectory(&paths.trajectory)?;
        let frames =
            subsample_frame_indices(entry.frame_count, entry.base_hz, config.pipeline.frequency_hz);
        Ok(Self {
            root: dataset_root.to_path_buf(),
            entry,
            paths,
            trajectory,
            frames,
            model: config.lidar.model()?,
        })
    }

    pub fn frame_time(&self, frame: usize) -> f64 {
        frame as f64 / self.entry.base_hz
    }

    pub fn read_scan(&self, frame: usize) -> Result<Vec<TimedPoint>> {
        Ok(formats::read_scan(
            &self.paths.scan_dir.join(frame_file(frame, "scn")),
        )?)
    }

    pub fn read_detections(&self, frame: usize) -> Result<Vec<maplabel_core::mapping::Detection>> {
        let (_, dets) = formats::read_detections(
            &self.paths.detection_dir.join(frame_file(frame, "json")),
        )?;
        Ok(dets)
    }

    pub fn read_truth_ids(&self, frame: usize) -> Result<Vec<u32>> {
        let dir = self
            .paths
            .truth_id_dir
            .as_ref()
            .ok_or_else(|| CliError::Dataset("sequence has no truth sidecar".into()))?;
        Ok(formats::read_truth_ids(&dir.join(frame_file(frame, "ids")))?)
    }

    pub fn read_truth_map(&self) -> Result<Vec<Landmark>> {
        let path = self
            .paths
            .truth_map
            .as_ref()
            .ok_or_else(|| CliError::Dataset("sequence has no truth map".into()))?;
        Ok(formats::read_map(path)?
            .landmarks
            .into_iter()
            .map(|m| m.landmark)
            .collect())
    }

    /// The cloud a labeling stage works on: motion-compensated to the frame
    /// trigger when enabled, otherwise the raw positions interpreted in the
    /// reference frame.
    pub fn labeling_cloud(
        &self,
        frame: usize,
        points: &[TimedPoint],
        motion_compensation: bool,
    ) -> Result<Vec<TimedPoint>> {
        if !motion_compensation {
            return Ok(points.to_vec());
        }
        let reference = self.frame_time(frame);
        let compensated = motion_compensate(points, &self.trajectory, reference)
            .map_err(|e| CliError::Pipeline(e.to_string()))?;
        Ok(points
            .iter()
            .zip(compensated)
            .map(|(p, q)| TimedPoint::from_position(q, p.timestamp))
            .collect())
    }
}

/// Builds the parametric map from the sequence's detections and scans.
pub fn run_map(
    config: &PipelineConfig,
    dataset_root: &Path,
    sequence: Option<&str>,
    out_map: &Path,
) -> Result<MapSummary> {
    let ctx = SequenceContext::open(config, dataset_root, sequence)?;
    let frames: Vec<FrameObservations> = ctx
        .frames
        .par_iter()
        .map(|&frame| -> Result<FrameObservations> {
            let detections = ctx.read_detections(frame)?;
            let scan = ctx.read_scan(frame)?;
            let mut scan_map = Vec::with_capacity(scan.len());
            for p in &scan {
                let pose = ctx
                    .trajectory
                    .interpolate(p.timestamp)
                    .map_err(|e| CliError::Pipeline(e.to_string()))?;
                scan_map.push(pose.transform_point(&p.position));
            }
            Ok(FrameObservations {
                frame_id: frame as u64,
                detections,
                scan_map,
            })
        })
        .collect::<Result<_>>()?;

    let map = build_map(&frames, &config.solver.solver_config());
    if let Some(parent) = out_map.parent() {
        std::fs::create_dir_all(parent)?;
    }
    formats::write_map(out_map, &map)?;
    Ok(MapSummary {
        landmarks: map.landmarks.len(),
        rejected: map.rejected.len(),
        dropped_detections: map.dropped_detections.len(),
    })
}

pub struct MapSummary {
    pub landmarks: usize,
    pub rejected: usize,
    pub dropped_detections: usize,
}

fn expanded_landmarks(config: &PipelineConfig, landmarks: &[Landmark]) -> Result<Vec<Landmark>> {
    let policy = config.margins.policy();
    landmarks
        .iter()
        .map(|lm| {
            lm.expand_margin(&policy)
                .map_err(|e| CliError::Pipeline(e.to_string()))
        })
        .collect()
}

/// Renders per-frame label images from a map file. The 2D task labels use
/// the unexpanded geometry: the radius/box margins are a 3D-annotation
/// mechanism, while 2D uncertainty mitigation is the 1-pixel dilation.
pub fn run_render(
    config: &PipelineConfig,
    dataset_root: &Path,
    sequence: Option<&str>,
    map_path: &Path,
    out_dir: &Path,
    dump_ppm: bool,
) -> Result<()> {
    let ctx = SequenceContext::open(config, dataset_root, sequence)?;
    let landmarks: Vec<Landmark> = formats::read_map(map_path)?
        .landmarks
        .into_iter()
        .map(|m| m.landmark)
        .collect();
    let render_config = config.render_config();
    std::fs::create_dir_all(out_dir)?;
    ctx.frames.par_iter().try_for_each(|&frame| -> Result<()> {
        let ego = ctx
            .trajectory
            .interpolate(ctx.frame_time(frame))
            .map_err(|e| CliError::Pipeline(e.to_string()))?;
        let out = render_labels(&landmarks, &ego, &ctx.model, &render_config);
        formats::write_label_image(&out_dir.join(frame_file(frame, "lbl")), &out.image)?;
        if dump_ppm {
            crate::ppm::write_label_ppm(&out_dir.join(frame_file(frame, "ppm")), &out.image)?;
        }
        Ok(())
    })
}

/// Labels per-frame 3D point clouds by rendering the map and gating points
/// through per-landmark frusta.
pub fn run_label3d(
    config: &PipelineConfig,
    dataset_root: &Path,
    sequence: Option<&str>,
    map_path: &Path,
    out_dir: &Path,
) -> Result<()> {
    let ctx = SequenceContext::open(config, dataset_root, sequence)?;
    let landmarks: Vec<Landmark> = formats::read_map(map_path)?
        .landmarks
        .into_iter()
        .map(|m| m.landmark)
        .collect();
    let expanded = expanded_landmarks(config, &landmarks)?;
    let render_config = config.render_config();
    std::fs::create_dir_all(out_dir)?;
    ctx.frames.par_iter().try_for_each(|&frame| -> Result<()> {
        let scan = ctx.read_scan(frame)?;
        let cloud = ctx.labeling_cloud(frame, &scan, config.pipeline.motion_compensation)?;
        let ego = ctx
            .trajectory
            .interpolate(ctx.frame_time(frame))
            .map_err(|e| CliError::Pipeline(e.to_string()))?;
        let rendered = render_labels(&expanded, &ego, &ctx.model, &render_config);
        let frusta = build_frusta(
            &expanded,
            &rendered.image,
            &ego,
            config.pipeline.samples_per_arc,
        );
        let labeled = label_points(&cloud, &rendered.image, &ctx.model, &frusta);
        formats::write_labeled_cloud(&out_dir.join(frame_file(frame, "lpc")), &labeled)?;
        Ok(())
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineKind {
    ShapePreservingLift,
    DepthPreservingProjection,
}

/// Runs one single-shot baseline over the sequence, writing label images
/// and labeled clouds in the common formats.
pub fn run_baseline(
    config: &PipelineConfig,
    dataset_root: &Path,
    sequence: Option<&str>,
    kind: BaselineKind,
    out_dir: &Path,
) -> Result<()> {
    let ctx = SequenceContext::open(config, dataset_root, sequence)?;
    let fov = config.fov.policy();
    std::fs::create_dir_all(out_dir.join("labels"))?;
    std::fs::create_dir_all(out_dir.join("clouds"))?;
    ctx.frames.par_iter().try_for_each(|&frame| -> Result<()> {
        let scan = ctx.read_scan(frame)?;
        let cloud = ctx.labeling_cloud(frame, &scan, config.pipeline.motion_compensation)?;
        let detections = ctx.read_detections(frame)?;
        let lidar_pose = ctx
            .trajectory
            .interpolate(ctx.frame_time(frame))
            .map_err(|e| CliError::Pipeline(e.to_string()))?;
        let baseline_frame = BaselineFrame {
            detections: &detections,
            points: &cloud,
            lidar_pose: &lidar_pose,
            model: &ctx.model,
        };
        let (image, labeled) = match kind {
            BaselineKind::ShapePreservingLift => {
                let (image, labeled, _) = shape_preserving_lift(&baseline_frame, &fov);
                (image, labeled)
            }
            BaselineKind::DepthPreservingProjection => {
                depth_preserving_projection(&baseline_frame, &fov)
            }
        };
        formats::write_label_image(&out_dir.join("labels").join(frame_file(frame, "lbl")), &image)?;
        formats::write_labeled_cloud(
            &out_dir.join("clouds").join(frame_file(frame, "lpc")),
            &labeled,
        )?;
        Ok(())
    })
}

/// Writes truth reference labels (2D projections of the truth-labeled cloud
/// and 3D truth clouds) consistent with the configured cloud
/// interpretation. Object points whose landmark lies beyond the selection
/// range are marked ignore: the labeling methods are graded only on the
/// region they are asked to cover. Background is gradable at any range.
pub fn run_truth_reference(
    config: &PipelineConfig,
    dataset_root: &Path,
    sequence: Option<&str>,
    out_dir: &Path,
) -> Result<()> {
    let ctx = SequenceContext::open(config, dataset_root, sequence)?;
    let truth_landmarks = ctx.read_truth_map()?;
    let class_of: BTreeMap<u32, SemanticClass> = truth_landmarks
        .iter()
        .map(|lm| (lm.instance_id, lm.class))
        .collect();
    let anchor_of: BTreeMap<u32, Vector3<f64>> = truth_landmarks
        .iter()
        .map(|lm| (lm.instance_id, lm.anchor()))
        .collect();
    let tau = config.pipeline.range_threshold;
    std::fs::create_dir_all(out_dir.join("labels"))?;
    std::fs::create_dir_all(out_dir.join("clouds"))?;
    ctx.frames.par_iter().try_for_each(|&frame| -> Result<()> {
        let scan = ctx.read_scan(frame)?;
        let ids = ctx.read_truth_ids(frame)?;
        if ids.len() != scan.len() {
            return Err(CliError::Dataset(format!(
                "frame {frame}: {} truth ids for {} points",
                ids.len(),
                scan.len()
            )));
        }
        let ego = ctx
            .trajectory
            .interpolate(ctx.frame_time(frame))
            .map_err(|e| CliError::Pipeline(e.to_string()))?;
        let in_range = |id: u32| -> bool {
            id != 0
                && anchor_of
                    .get(&id)
                    .is_some_and(|a| (a - ego.translation).norm() < tau)
        };
        let cloud = ctx.labeling_cloud(frame, &scan, config.pipeline.motion_compensation)?;
        let positions: Vec<Vector3<f64>> = cloud.iter().map(|p| p.position).collect();
        let mut image = maplabel_core::synth::truth_label_image_from_points(
            &positions,
            &ids,
            &truth_landmarks,
            &ctx.model,
        );
        for idx in 0..image.pixel_count() {
            let id = image.instance[idx];
            if id != 0 && !in_range(id) {
                image.ignore[idx] = true;
                image.instance[idx] = 0;
                image.semantic[idx] = SemanticClass::Background;
            }
        }
        formats::write_label_image(&out_dir.join("labels").join(frame_file(frame, "lbl")), &image)?;
        let labeled = LabeledPointCloud {
            points: cloud
                .iter()
                .zip(&ids)
                .map(|(p, &id)| {
                    let out_of_range = id != 0 && !in_range(id);
                    LabeledPoint {
                        position: [
                            p.position.x as f32,
                            p.position.y as f32,
                            p.position.z as f32,
                        ],
                        range: p.range as f32,
                        timestamp: p.timestamp,
                        semantic: if out_of_range {
                            SemanticClass::Background
                        } else {
                            class_of.get(&id).copied().unwrap_or(SemanticClass::Background)
                        },
                        instance: if out_of_range { 0 } else { id },
                        ignore: out_of_range,
                    }
                })
                .collect(),
        };
        formats::write_labeled_cloud(
            &out_dir.join("clouds").join(frame_file(frame, "lpc")),
            &labeled,
        )?;
        Ok(())
    })
}

/// Merged 2D + 3D evaluation of two label sets.
#[derive(Debug, Clone, Default)]
pub struct EvalSummary {
    pub semantic_2d: ConfusionAccumulator,
    pub panoptic: PanopticAccumulator,
    pub semantic_3d: ConfusionAccumulator,
    pub frames_2d: usize,
    pub frames_3d: usize,
}

impl EvalSummary {
    pub fn merge(&mut self, other: &EvalSummary) {
        self.semantic_2d.merge(&other.semantic_2d);
        self.panoptic.merge(&other.panoptic);
        self.semantic_3d.merge(&other.semantic_3d);
        self.frames_2d += other.frames_2d;
        self.frames_3d += other.frames_3d;
    }
}

fn list_matching(dir: &Path, ext: &str) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    if !dir.exists() {
        return Ok(out);
    }
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        if path.extension().and_then(|e| e.to_str()) == Some(ext) {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

/// 2D semantic label quality by point pullback: every reference point
/// grades the prediction pixel it projects into. Pixels are otherwise only
/// gradable where returns exist, and this weighting follows the evidence.
fn eval_label_pullback(
    pred: &LabelImage,
    reference_cloud: &LabeledPointCloud,
    model: &SphericalCameraModel,
) -> Result<ConfusionAccumulator> {
    let mut pred_classes = Vec::with_capacity(reference_cloud.points.len());
    let mut ref_classes = Vec::with_capacity(reference_cloud.points.len());
    let mut ignore = Vec::with_capacity(reference_cloud.points.len());
    for p in &reference_cloud.points {
        let position = nalgebra::Vector3::new(
            p.position[0] as f64,
            p.position[1] as f64,
            p.position[2] as f64,
        );
        let (pred_class, pixel_ignore) = match model.project(&position) {
            Ok(Some(ip)) => {
                let (col, row) = (ip.u as usize, ip.v as usize);
                if col < pred.width && row < pred.height {
                    let idx = pred.idx(col, row);
                    (pred.semantic[idx], pred.ignore[idx])
                } else {
                    (SemanticClass::Background, true)
                }
            }
            _ => (SemanticClass::Background, true),
        };
        pred_classes.push(pred_class);
        ref_classes.push(p.semantic);
        ignore.push(p.ignore || pixel_ignore);
    }
    let mut acc = ConfusionAccumulator::default();
    acc.add(&pred_classes, &ref_classes, &ignore)
        .map_err(|e| CliError::Pipeline(e.to_string()))?;
    Ok(acc)
}

fn eval_panoptic_pair(pred: &LabelImage, reference: &LabelImage) -> Result<PanopticAccumulator> {
    if pred.pixel_count() != reference.pixel_count() {
        return Err(CliError::Pipeline(format!(
            "label image size mismatch: {} vs {}",
            pred.pixel_count(),
            reference.pixel_count()
        )));
    }
    let ignore: Vec<bool> = pred
        .ignore
        .iter()
        .zip(&reference.ignore)
        .map(|(a, b)| *a || *b)
        .collect();
    let pred_pan = derive_panoptic(pred);
    let ref_pan = derive_panoptic(reference);
    panoptic_quality(&pred_pan, &ref_pan, &ignore).map_err(|e| CliError::Pipeline(e.to_string()))
}

fn eval_cloud_pair(pred: &LabeledPointCloud, reference: &LabeledPointCloud) -> Result<EvalSummary> {
    if pred.points.len() != reference.points.len() {
        return Err(CliError::Pipeline(format!(
            "point count mismatch: {} vs {}",
            pred.points.len(),
            reference.points.len()
        )));
    }
    let ignore: Vec<bool> = pred
        .points
        .iter()
        .zip(&reference.points)
        .map(|(a, b)| a.ignore || b.ignore)
        .collect();
    let pred_classes: Vec<SemanticClass> = pred.points.iter().map(|p| p.semantic).collect();
    let ref_classes: Vec<SemanticClass> = reference.points.iter().map(|p| p.semantic).collect();
    let mut summary = EvalSummary::default();
    summary.semantic_3d = miou_3d(&pred_classes, &ref_classes, &ignore)
        .map_err(|e| CliError::Pipeline(e.to_string()))?;
    summary.frames_3d = 1;
    Ok(summary)
}

/// Compares two label sets: any `.lbl` files with matching names under
/// `<dir>` or `<dir>/labels`, and `.lpc` files likewise. When the reference
/// provides clouds, 2D semantic quality is scored by point pullback against
/// them; panoptic quality is scored image against image.
pub fn run_eval(
    pred_dir: &Path,
    ref_dir: &Path,
    model: &SphericalCameraModel,
) -> Result<EvalSummary> {
    let sub = |root: &Path, sub: &str, ext: &str| -> Result<Vec<PathBuf>> {
        let nested = root.join(sub);
        let from_nested = list_matching(&nested, ext)?;
        if from_nested.is_empty() {
            list_matching(root, ext)
        } else {
            Ok(from_nested)
        }
    };
    let pred_labels = sub(pred_dir, "labels", "lbl")?;
    let pred_clouds = sub(pred_dir, "clouds", "lpc")?;

    let pair_for = |pred_path: &Path, kind: &str| -> Option<PathBuf> {
        let name = pred_path.file_name().unwrap();
        let stem = Path::new(name).file_stem().unwrap().to_os_string();
        let ext = Path::new(name).extension().unwrap().to_str().unwrap();
        let mut with_ext = stem.clone();
        with_ext.push(format!(".{ext}"));
        [ref_dir.join(kind).join(&with_ext), ref_dir.join(&with_ext)]
            .into_iter()
            .find(|c| c.exists())
    };

    let mut summary = EvalSummary::default();
    let label_results: Vec<EvalSummary> = pred_labels
        .par_iter()
        .map(|p| -> Result<EvalSummary> {
            let mut one = EvalSummary::default();
            let pred = formats::read_label_image(p)?;
            let ref_lbl = pair_for(p, "labels").ok_or_else(|| {
                CliError::Pipeline(format!("no reference label image for {}", p.display()))
            })?;
            let reference = formats::read_label_image(&ref_lbl)?;
            one.panoptic = eval_panoptic_pair(&pred, &reference)?;
            // Pullback against the reference cloud of the same frame when
            // available, else pixel-wise against the reference image.
            let ref_cloud_path = p
                .file_stem()
                .map(|s| format!("{}.lpc", s.to_string_lossy()))
                .map(|n| {
                    [ref_dir.join("clouds").join(&n), ref_dir.join(&n)]
                        .into_iter()
                        .find(|c| c.exists())
                })
                .unwrap_or(None);
            match ref_cloud_path {
                Some(cloud_path) => {
                    let reference_cloud = formats::read_labeled_cloud(&cloud_path)?;
                    one.semantic_2d = eval_label_pullback(&pred, &reference_cloud, model)?;
                }
                None => {
                    let ignore: Vec<bool> = pred
                        .ignore
                        .iter()
                        .zip(&reference.ignore)
                        .map(|(a, b)| *a || *b)
                        .collect();
                    one.semantic_2d
                        .add(&pred.semantic, &reference.semantic, &ignore)
                        .map_err(|e| CliError::Pipeline(e.to_string()))?;
                }
            }
            one.frames_2d = 1;
            Ok(one)
        })
        .collect::<Result<_>>()?;
    for r in &label_results {
        summary.merge(r);
    }
    let cloud_results: Vec<EvalSummary> = pred_clouds
        .par_iter()
        .map(|p| -> Result<EvalSummary> {
            let ref_cloud = pair_for(p, "clouds").ok_or_else(|| {
                CliError::Pipeline(format!("no reference cloud for {}", p.display()))
            })?;
            let reference = formats::read_labeled_cloud(&ref_cloud)?;
            let pred = formats::read_labeled_cloud(p)?;
            eval_cloud_pair(&pred, &reference)
        })
        .collect::<Result<_>>()?;
    for r in &cloud_results {
        summary.merge(r);
    }
    if summary.frames_2d == 0 && summary.frames_3d == 0 {
        return Err(CliError::Pipeline(format!(
            "nothing to evaluate under {}",
            pred_dir.display()
        )));
    }
    Ok(summary)
}
