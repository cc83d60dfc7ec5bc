//! On-disk dataset format ("EEGB v1") and synthetic recordings.
//!
//! A session lives in its own directory `<dataset>/<subject>/<session>/` and
//! holds three files:
//!
//! - `manifest.json`: UTF-8 JSON, see [`Manifest`]
//! - `data.bin`: little-endian `f32`, trial-major `[trial][channel][sample]`
//! - `labels.bin`: little-endian `i32`, one per trial
//!
//! The binary files carry no header and no padding.

mod synth;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Component, Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use synth::{synth_dataset, SynthConfig};

pub const FORMAT_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";

/// Free-form per-trial annotations, e.g. `distracted = yes` for synthetic data.
pub type TrialFlags = BTreeMap<String, String>;

/// Flag key carrying the synthetic ground truth.
pub const DISTRACTED_FLAG: &str = "distracted";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub dataset_id: String,
    pub subject_id: String,
    pub session_id: String,
    pub fs_hz: f64,
    pub n_trials: usize,
    pub n_channels: usize,
    pub n_samples: usize,
    pub channel_names: Vec<String>,
    pub label_names: Vec<String>,
    pub data_file: String,
    pub labels_file: String,
    /// Exporter-specific metadata (epoching, provenance). Not interpreted.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metadata: BTreeMap<String, serde_json::Value>,
}

impl Manifest {
    /// Manifest with the default file names and no metadata.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        dataset_id: impl Into<String>,
        subject_id: impl Into<String>,
        session_id: impl Into<String>,
        fs_hz: f64,
        n_trials: usize,
        n_samples: usize,
        channel_names: Vec<String>,
        label_names: Vec<String>,
    ) -> Self {
        Manifest {
            format_version: FORMAT_VERSION,
            dataset_id: dataset_id.into(),
            subject_id: subject_id.into(),
            session_id: session_id.into(),
            fs_hz,
            n_trials,
            n_channels: channel_names.len(),
            n_samples,
            channel_names,
            label_names,
            data_file: "data.bin".into(),
            labels_file: "labels.bin".into(),
            metadata: BTreeMap::new(),
        }
    }

    pub fn n_classes(&self) -> usize {
        self.label_names.len()
    }

    fn check(&self) -> std::result::Result<(), String> {
        if self.format_version != FORMAT_VERSION {
            return Err(format!("unsupported format_version {}", self.format_version));
        }
        if self.n_trials == 0 || self.n_channels == 0 || self.n_samples == 0 {
            return Err("n_trials, n_channels and n_samples must be >= 1".into());
        }
        if !(self.fs_hz.is_finite() && self.fs_hz > 0.0) {
            return Err(format!("fs_hz must be positive, got {}", self.fs_hz));
        }
        if self.channel_names.len() != self.n_channels {
            return Err(format!(
                "{} channel names for {} channels",
                self.channel_names.len(),
                self.n_channels
            ));
        }
        if self.label_names.is_empty() {
            return Err("label_names is empty".into());
        }
        for file in [&self.data_file, &self.labels_file] {
            let p = Path::new(file);
            let plain = p
                .components()
                .all(|c| matches!(c, Component::Normal(_)));
            if file.is_empty() || !plain {
                return Err(format!("data paths must be plain relative paths, got {file:?}"));
            }
        }
        Ok(())
    }

    fn data_bytes(&self) -> u64 {
        (self.n_trials * self.n_channels * self.n_samples) as u64 * 4
    }

    fn labels_bytes(&self) -> u64 {
        self.n_trials as u64 * 4
    }
}

/// Manifest as stored on disk: the manifest fields plus optional trial flags.
#[derive(Serialize, Deserialize)]
struct ManifestFile {
    #[serde(flatten)]
    manifest: Manifest,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    epoch_flags: Option<Vec<TrialFlags>>,
}

/// Continuous multichannel EEG of one subject and session, cut into trials.
#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    pub manifest: Manifest,
    /// `[trial][channel][sample]`, trial-major.
    pub data: Vec<f32>,
    pub labels: Vec<i32>,
    pub epoch_flags: Option<Vec<TrialFlags>>,
}

impl Recording {
    pub fn n_trials(&self) -> usize {
        self.manifest.n_trials
    }

    pub fn n_channels(&self) -> usize {
        self.manifest.n_channels
    }

    pub fn n_samples(&self) -> usize {
        self.manifest.n_samples
    }

    pub fn fs_hz(&self) -> f64 {
        self.manifest.fs_hz
    }

    /// All channels of one trial, `[channel][sample]`.
    pub fn trial(&self, trial: usize) -> &[f32] {
        let len = self.n_channels() * self.n_samples();
        &self.data[trial * len..(trial + 1) * len]
    }

    pub fn channel(&self, trial: usize, channel: usize) -> &[f32] {
        let ns = self.n_samples();
        let start = (trial * self.n_channels() + channel) * ns;
        &self.data[start..start + ns]
    }

    pub fn channel_mut(&mut self, trial: usize, channel: usize) -> &mut [f32] {
        let ns = self.n_samples();
        let start = (trial * self.n_channels() + channel) * ns;
        &mut self.data[start..start + ns]
    }

    /// Ground-truth distraction flag of a trial, if the recording carries one.
    pub fn is_distracted(&self, trial: usize) -> Option<bool> {
        self.epoch_flags
            .as_ref()
            .and_then(|f| f.get(trial))
            .and_then(|f| f.get(DISTRACTED_FLAG))
            .map(|v| v == "yes")
    }

    /// Checks every invariant of the format.
    pub fn validate(&self) -> Result<()> {
        self.manifest.check().map_err(Error::InvalidRecording)?;
        let m = &self.manifest;
        let expected = m.n_trials * m.n_channels * m.n_samples;
        if self.data.len() != expected {
            return Err(Error::InvalidRecording(format!(
                "tensor holds {} values, manifest implies {expected}",
                self.data.len()
            )));
        }
        if self.labels.len() != m.n_trials {
            return Err(Error::InvalidRecording(format!(
                "{} labels for {} trials",
                self.labels.len(),
                m.n_trials
            )));
        }
        check_labels(&self.labels, m.n_classes())?;
        if let Some(i) = self.data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidRecording(format!("non-finite sample at flat index {i}")));
        }
        if let Some(flags) = &self.epoch_flags {
            if flags.len() != m.n_trials {
                return Err(Error::InvalidRecording(format!(
                    "{} flag entries for {} trials",
                    flags.len(),
                    m.n_trials
                )));
            }
        }
        Ok(())
    }
}

fn check_labels(labels: &[i32], n_classes: usize) -> Result<()> {
    for (trial, &label) in labels.iter().enumerate() {
        if label < 0 || label as usize >= n_classes {
            return Err(Error::LabelRange {
                trial,
                label,
                n_classes,
            });
        }
    }
    Ok(())
}

/// `<root>/<dataset>/<subject>/<session>`
pub fn session_dir(root: &Path, dataset: &str, subject: &str, session: &str) -> PathBuf {
    root.join(dataset).join(subject).join(session)
}

pub fn write_recording(rec: &Recording, dir: &Path) -> Result<()> {
    rec.validate()?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let mut data = Vec::with_capacity(rec.data.len() * 4);
    for v in &rec.data {
        data.extend_from_slice(&v.to_le_bytes());
    }
    let data_path = dir.join(&rec.manifest.data_file);
    fs::write(&data_path, data).map_err(|e| Error::io(&data_path, e))?;

    let mut labels = Vec::with_capacity(rec.labels.len() * 4);
    for v in &rec.labels {
        labels.extend_from_slice(&v.to_le_bytes());
    }
    let labels_path = dir.join(&rec.manifest.labels_file);
    fs::write(&labels_path, labels).map_err(|e| Error::io(&labels_path, e))?;

    let file = ManifestFile {
        manifest: rec.manifest.clone(),
        epoch_flags: rec.epoch_flags.clone(),
    };
    let manifest_path = dir.join(MANIFEST_FILE);
    let mut text = serde_json::to_string_pretty(&file).map_err(|e| Error::json(&manifest_path, e))?;
    text.push('\n');
    fs::write(&manifest_path, text).map_err(|e| Error::io(&manifest_path, e))
}

pub fn read_recording(dir: &Path) -> Result<Recording> {
    let manifest_path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    let file: ManifestFile = serde_json::from_str(&text).map_err(|e| Error::Manifest {
        path: manifest_path.clone(),
        reason: e.to_string(),
    })?;
    let manifest = file.manifest;
    manifest.check().map_err(|reason| Error::Manifest {
        path: manifest_path.clone(),
        reason,
    })?;

    let data_path = dir.join(&manifest.data_file);
    let raw = read_sized(&data_path, manifest.data_bytes())?;
    let data = raw
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .collect();

    let labels_path = dir.join(&manifest.labels_file);
    let raw = read_sized(&labels_path, manifest.labels_bytes())?;
    let labels: Vec<i32> = raw
        .chunks_exact(4)
        .map(|b| i32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .collect();
    check_labels(&labels, manifest.n_classes())?;

    let rec = Recording {
        manifest,
        data,
        labels,
        epoch_flags: file.epoch_flags,
    };
    rec.validate()?;
    Ok(rec)
}

fn read_sized(path: &Path, expected: u64) -> Result<Vec<u8>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() as u64 != expected {
        return Err(Error::SizeMismatch {
            file: path.to_path_buf(),
            expected,
            found: bytes.len() as u64,
        });
    }
    Ok(bytes)
}

/// Sorted names of the immediate subdirectories of `dir`.
pub fn list_subdirs(dir: &Path) -> Result<Vec<String>> {
    let mut names = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        if entry.path().is_dir() {
            names.push(entry.file_name().to_string_lossy().into_owned());
        }
    }
    names.sort();
    Ok(names)
}
