//! Dataset layout on disk and the manifest that indexes it.
//!
//! ```text
//! dataset/
//!   manifest.json
//!   <sequence>/
//!     trajectory.txt            pipeline poses (noisy under pose noise)
//!     scans/frame_NNNNNN.scn
//!     detections/frame_NNNNNN.json
//!     truth/map.txt             ground-truth landmarks
//!     truth/ids/frame_NNNNNN.ids
//!     truth/labels/frame_NNNNNN.lbl   as-scanned truth label images
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SequenceEntry {
    pub name: String,
    pub frame_count: usize,
    /// Base recording rate of the stored frames, Hz.
    pub base_hz: f64,
    pub trajectory: String,
    pub scan_dir: String,
    pub detection_dir: String,
    pub truth_map: Option<String>,
    pub truth_id_dir: Option<String>,
    pub truth_label_dir: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplitEntry {
    pub train: Vec<String>,
    pub eval: Vec<String>,
    /// Minimum geographic distance between train and eval regions, meters.
    pub geographic_separation_m: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub format_version: u32,
    pub sequences: Vec<SequenceEntry>,
    pub split: SplitEntry,
}

impl DatasetManifest {
    pub fn save(&self, root: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self).expect("serializable");
        std::fs::write(root.join("manifest.json"), json)?;
        Ok(())
    }

    /// Loads and validates: referenced files must exist, the split must be
    /// disjoint and reference known sequences.
    pub fn load(root: &Path) -> Result<Self> {
        let path = root.join("manifest.json");
        let text = std::fs::read_to_string(&path)
            .map_err(|e| CliError::Dataset(format!("{}: {e}", path.display())))?;
        let manifest: DatasetManifest = serde_json::from_str(&text)
            .map_err(|e| CliError::Dataset(format!("{}: {e}", path.display())))?;
        manifest.validate(root)?;
        Ok(manifest)
    }

    pub fn validate(&self, root: &Path) -> Result<()> {
        let names: Vec<&str> = self.sequences.iter().map(|s| s.name.as_str()).collect();
        for split_name in self.split.train.iter().chain(&self.split.eval) {
            if !names.contains(&split_name.as_str()) {
                return Err(CliError::Dataset(format!(
                    "split references unknown sequence {split_name}"
                )));
            }
        }
        for t in &self.split.train {
            if self.split.eval.contains(t) {
                return Err(CliError::Dataset(format!(
                    "sequence {t} appears in both train and eval splits"
                )));
            }
        }
        for seq in &self.sequences {
            let must_exist = [Some(&seq.trajectory), seq.truth_map.as_ref()];
            for rel in must_exist.into_iter().flatten() {
                let p = root.join(rel);
                if !p.exists() {
                    return Err(CliError::Dataset(format!("missing file {}", p.display())));
                }
            }
            for rel in [Some(&seq.scan_dir), Some(&seq.detection_dir)]
                .into_iter()
                .flatten()
            {
                let p = root.join(rel);
                if !p.is_dir() {
                    return Err(CliError::Dataset(format!(
                        "missing directory {}",
                        p.display()
                    )));
                }
            }
            // Every frame file referenced by the count must parse later;
            // existence is checked here.
            for frame in 0..seq.frame_count {
                let scan = root.join(&seq.scan_dir).join(frame_file(frame, "scn"));
                if !scan.exists() {
                    return Err(CliError::Dataset(format!("missing {}", scan.display())));
                }
            }
        }
        Ok(())
    }

    pub fn sequence(&self, name: &str) -> Result<&SequenceEntry> {
        self.sequences
            .iter()
            .find(|s| s.name == name)
            .ok_or_else(|| CliError::Dataset(format!("unknown sequence {name}")))
    }
}

pub fn frame_file(index: usize, ext: &str) -> String {
    format!("frame_{index:06}.{ext}")
}

/// Absolute paths of one sequence's parts.
pub struct SequencePaths {
    pub trajectory: PathBuf,
    pub scan_dir: PathBuf,
    pub detection_dir: PathBuf,
    pub truth_map: Option<PathBuf>,
    pub truth_id_dir: Option<PathBuf>,
    pub truth_label_dir: Option<PathBuf>,
}

impl SequencePaths {
    pub fn new(root: &Path, seq: &SequenceEntry) -> Self {
        Self {
            trajectory: root.join(&seq.trajectory),
            scan_dir: root.join(&seq.scan_dir),
            detection_dir: root.join(&seq.detection_dir),
            truth_map: seq.truth_map.as_ref().map(|p| root.join(p)),
            truth_id_dir: seq.truth_id_dir.as_ref().map(|p| root.join(p)),
            truth_label_dir: seq.truth_label_dir.as_ref().map(|p| root.join(p)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_overlap_is_rejected() {
        let manifest = DatasetManifest {
            format_version: 1,
            sequences: vec![],
            split: SplitEntry {
                train: vec!["a".into()],
                eval: vec!["a".into()],
                geographic_separation_m: 100.0,
            },
        };
        // Unknown sequence is caught first; give it a sequence list.
        let manifest = DatasetManifest {
            sequences: vec![SequenceEntry {
                name: "a".into(),
                frame_count: 0,
                base_hz: 10.0,
                trajectory: "a/trajectory.txt".into(),
                scan_dir: "a/scans".into(),
                detection_dir: "a/detections".into(),
                truth_map: None,
                truth_id_dir: None,
                truth_label_dir: None,
            }],
            ..manifest
        };
        let dir = tempfile::tempdir().unwrap();
        std::fs::create_dir_all(dir.path().join("a/scans")).unwrap();
        std::fs::create_dir_all(dir.path().join("a/detections")).unwrap();
        std::fs::write(dir.path().join("a/trajectory.txt"), "#\n0 0 0 0 1 0 0 0\n").unwrap();
        let err = manifest.validate(dir.path()).unwrap_err();
        assert!(err.to_string().contains("both train and eval"));
    }
}
