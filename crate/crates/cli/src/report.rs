//! The experiment grid and its report emission: a plain-text table plus a
//! machine-readable key-value file, with the labeling methods compared
//! against the truth sidecar under motion compensation, element range and
//! sampling frequency sweeps.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use maplabel_core::primitives::SemanticClass;

use crate::config::PipelineConfig;
use crate::error::Result;
use crate::pipeline::{
    run_baseline, run_label3d, run_map, run_render, run_truth_reference, BaselineKind, EvalSummary,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    LiftBaseline,
    ProjectionBaseline,
    MapPipeline,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::LiftBaseline => "b1",
            Method::ProjectionBaseline => "b2",
            Method::MapPipeline => "map",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentRow {
    pub name: String,
    pub method: Method,
    pub motion_compensation: bool,
    pub range_threshold: f64,
    pub frequency_hz: f64,
    pub summary: EvalSummary,
}

fn fmt_opt(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{:6.3}", x),
        None => "     -".to_string(),
    }
}

pub fn metrics_kv(prefix: &str, summary: &EvalSummary) -> String {
    let mut out = String::new();
    let sem = &summary.semantic_2d;
    let classes = [
        ("IoU_Po", SemanticClass::Pole),
        ("IoU_TL", SemanticClass::TrafficLight),
        ("IoU_TS", SemanticClass::TrafficSign),
    ];
    for (key, class) in classes {
        let _ = writeln!(
            out,
            "{prefix}.2d.{key}={}",
            sem.iou(class).map_or("nan".into(), |v| v.to_string())
        );
    }
    let _ = writeln!(
        out,
        "{prefix}.2d.mIoU={}",
        sem.miou().map_or("nan".into(), |v| v.to_string())
    );
    for (key, value) in [
        ("SQ_th", summary.panoptic.sq_things()),
        ("RQ_th", summary.panoptic.rq_things()),
        ("PQ_th", summary.panoptic.pq_things()),
    ] {
        let _ = writeln!(
            out,
            "{prefix}.2d.{key}={}",
            value.map_or("nan".into(), |v| v.to_string())
        );
    }
    for (key, class) in classes {
        let _ = writeln!(
            out,
            "{prefix}.3d.{key}={}",
            summary
                .semantic_3d
                .iou(class)
                .map_or("nan".into(), |v| v.to_string())
        );
    }
    let _ = writeln!(
        out,
        "{prefix}.3d.mIoU={}",
        summary
            .semantic_3d
            .miou()
            .map_or("nan".into(), |v| v.to_string())
    );
    out
}

pub fn format_table(rows: &[ExperimentRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<26} {:>3} {:>5} {:>4}  {:>6} {:>6} {:>6} {:>6}  {:>6} {:>6} {:>6}  {:>6} {:>6} {:>6} {:>6}",
        "experiment", "mc", "tau", "hz",
        "IoU_Po", "IoU_TL", "IoU_TS", "mIoU",
        "SQ_th", "RQ_th", "PQ_th",
        "3dPo", "3dTL", "3dTS", "3dmIoU"
    );
    for row in rows {
        let s = &row.summary;
        let _ = writeln!(
            out,
            "{:<26} {:>3} {:>5.0} {:>4}  {} {} {} {}  {} {} {}  {} {} {} {}",
            row.name,
            if row.motion_compensation { "on" } else { "off" },
            row.range_threshold,
            row.frequency_hz,
            fmt_opt(s.semantic_2d.iou(SemanticClass::Pole)),
            fmt_opt(s.semantic_2d.iou(SemanticClass::TrafficLight)),
            fmt_opt(s.semantic_2d.iou(SemanticClass::TrafficSign)),
            fmt_opt(s.semantic_2d.miou()),
            fmt_opt(s.panoptic.sq_things()),
            fmt_opt(s.panoptic.rq_things()),
            fmt_opt(s.panoptic.pq_things()),
            fmt_opt(s.semantic_3d.iou(SemanticClass::Pole)),
            fmt_opt(s.semantic_3d.iou(SemanticClass::TrafficLight)),
            fmt_opt(s.semantic_3d.iou(SemanticClass::TrafficSign)),
            fmt_opt(s.semantic_3d.miou()),
        );
    }
    out
}

/// Runs one labeling experiment end-to-end against the truth sidecar and
/// returns its metrics. Intermediate artifacts land under `work_dir`.
pub fn run_experiment(
    base_config: &PipelineConfig,
    dataset_root: &Path,
    work_dir: &Path,
    method: Method,
    motion_compensation: bool,
    range_threshold: f64,
    frequency_hz: f64,
    map_cache: &mut BTreeMap<String, PathBuf>,
) -> Result<ExperimentRow> {
    let mut config = base_config.clone();
    config.pipeline.motion_compensation = motion_compensation;
    config.pipeline.range_threshold = range_threshold;
    config.pipeline.frequency_hz = frequency_hz;

    let name = format!(
        "{}_mc{}_tau{:.0}_hz{}",
        method.label(),
        if motion_compensation { "on" } else { "off" },
        range_threshold,
        frequency_hz
    );
    let exp_dir = work_dir.join(&name);
    std::fs::create_dir_all(&exp_dir)?;

    // Truth reference depends on the cloud interpretation and frame set.
    let ref_key = format!("ref_mc{}_hz{}", motion_compensation, frequency_hz);
    let ref_dir = work_dir.join(&ref_key);
    if !ref_dir.exists() {
        run_truth_reference(&config, dataset_root, None, &ref_dir)?;
    }

    match method {
        Method::MapPipeline => {
            // The map depends only on the frame set, not on tau or motion
            // compensation of the labeling step.
            let map_key = format!("map_hz{frequency_hz}");
            let map_path = match map_cache.get(&map_key) {
                Some(p) => p.clone(),
                None => {
                    let p = work_dir.join(format!("{map_key}.txt"));
                    run_map(&config, dataset_root, None, &p)?;
                    map_cache.insert(map_key, p.clone());
                    p
                }
            };
            run_render(
                &config,
                dataset_root,
                None,
                &map_path,
                &exp_dir.join("labels"),
                false,
            )?;
            run_label3d(
                &config,
                dataset_root,
                None,
                &map_path,
                &exp_dir.join("clouds"),
            )?;
        }
        Method::LiftBaseline => {
            run_baseline(
                &config,
                dataset_root,
                None,
                BaselineKind::ShapePreservingLift,
                &exp_dir,
            )?;
        }
        Method::ProjectionBaseline => {
            run_baseline(
                &config,
                dataset_root,
                None,
                BaselineKind::DepthPreservingProjection,
                &exp_dir,
            )?;
        }
    }

    let summary = crate::pipeline::run_eval(&exp_dir, &ref_dir, &config.lidar.model()?)?;
    Ok(ExperimentRow {
        name,
        method,
        motion_compensation,
        range_threshold,
        frequency_hz,
        summary,
    })
}

/// The full grid: methods x motion compensation at the default range and
/// rate, the element-range sweep, and the sampling-frequency sweep.
pub fn run_report(config: &PipelineConfig, dataset_root: &Path, out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;
    let mut map_cache = BTreeMap::new();
    let mut rows = Vec::new();

    let tau = config.pipeline.range_threshold;
    let hz = config.pipeline.frequency_hz;
    for method in [
        Method::LiftBaseline,
        Method::ProjectionBaseline,
        Method::MapPipeline,
    ] {
        for mc in [false, true] {
            rows.push(run_experiment(
                config,
                dataset_root,
                out_dir,
                method,
                mc,
                tau,
                hz,
                &mut map_cache,
            )?);
        }
    }
    for range in [30.0, 50.0, 70.0] {
        for mc in [false, true] {
            if range == tau {
                continue; // already covered by the method block
            }
            rows.push(run_experiment(
                config,
                dataset_root,
                out_dir,
                Method::MapPipeline,
                mc,
                range,
                hz,
                &mut map_cache,
            )?);
        }
    }
    for freq in [0.5, 2.0, 10.0] {
        if freq == hz {
            continue;
        }
        rows.push(run_experiment(
            config,
            dataset_root,
            out_dir,
            Method::MapPipeline,
            true,
            tau,
            freq,
            &mut map_cache,
        )?);
    }

    let table = format_table(&rows);
    std::fs::write(out_dir.join("report.txt"), &table)?;
    let mut kv = String::new();
    for row in &rows {
        kv.push_str(&metrics_kv(&row.name, &row.summary));
    }
    std::fs::write(out_dir.join("report.kv"), kv)?;
    println!("{table}");
    Ok(())
}
