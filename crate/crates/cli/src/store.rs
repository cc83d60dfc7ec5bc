//! Epoch sets stored as EEGB directories: one "trial" per epoch, with the
//! originating trial and the stage recorded so the loader can skip
//! preprocessing.

use std::path::Path;

use statefilter::eeg_io::{read_recording, write_recording, Manifest, Recording, TrialFlags};
use statefilter::signal::{preprocess, EpochSet, Partition, PreprocessConfig};
use statefilter::{Error, Result};

const STAGE_KEY: &str = "stage";
const STAGE_EPOCHS: &str = "epochs";
const SOURCE_TRIAL_KEY: &str = "source_trial";

pub fn write_epochs(epochs: &EpochSet, label_names: &[String], dataset_id: &str, dir: &Path) -> Result<()> {
    let mut manifest = Manifest::new(
        dataset_id,
        epochs.subject_id.clone(),
        epochs.session_id.clone(),
        epochs.fs_hz,
        epochs.len(),
        epochs.n_samples,
        epochs.channel_names.clone(),
        label_names.to_vec(),
    );
    manifest.metadata.insert(STAGE_KEY.into(), STAGE_EPOCHS.into());
    manifest.metadata.insert("window_sec".into(), epochs.window_sec.into());
    let flags = (0..epochs.len())
        .map(|i| {
            let mut f = epochs
                .epoch_flags
                .as_ref()
                .map(|all| all[i].clone())
                .unwrap_or_default();
            f.insert(SOURCE_TRIAL_KEY.into(), epochs.source_trial[i].to_string());
            f
        })
        .collect();
    let rec = Recording {
        manifest,
        data: epochs.data.iter().map(|&v| v as f32).collect(),
        labels: epochs.labels.iter().map(|&y| y as i32).collect(),
        epoch_flags: Some(flags),
    };
    write_recording(&rec, dir)
}

fn from_epoch_recording(rec: Recording) -> Result<EpochSet> {
    let m = &rec.manifest;
    let flags = rec.epoch_flags.clone().unwrap_or_default();
    let mut source_trial = Vec::with_capacity(m.n_trials);
    let mut rest: Vec<TrialFlags> = Vec::with_capacity(m.n_trials);
    for i in 0..m.n_trials {
        let mut f = flags.get(i).cloned().unwrap_or_default();
        let trial = f
            .remove(SOURCE_TRIAL_KEY)
            .and_then(|t| t.parse().ok())
            .unwrap_or(i);
        source_trial.push(trial);
        rest.push(f);
    }
    let window_sec = m
        .metadata
        .get("window_sec")
        .and_then(|w| w.as_f64())
        .unwrap_or(m.n_samples as f64 / m.fs_hz);
    Ok(EpochSet {
        data: rec.data.iter().map(|&v| v as f64).collect(),
        n_channels: m.n_channels,
        n_samples: m.n_samples,
        labels: rec.labels.iter().map(|&y| y as usize).collect(),
        n_classes: m.n_classes(),
        subject_id: m.subject_id.clone(),
        session_id: m.session_id.clone(),
        channel_names: m.channel_names.clone(),
        fs_hz: m.fs_hz,
        window_sec,
        source_trial,
        epoch_flags: rest.iter().any(|f| !f.is_empty()).then_some(rest),
        partition: Partition::Unassigned,
    })
}

/// Reads a session and returns its epochs: preprocessed directories load
/// as-is, raw ones go through `cfg`.
pub fn load_epochs(dir: &Path, cfg: &PreprocessConfig) -> Result<(EpochSet, Manifest)> {
    if !dir.join(statefilter::eeg_io::MANIFEST_FILE).is_file() {
        return Err(Error::MissingData(format!("{} is not an EEGB session directory", dir.display())));
    }
    let rec = read_recording(dir)?;
    let manifest = rec.manifest.clone();
    let epochs = if manifest.metadata.get(STAGE_KEY).and_then(|v| v.as_str()) == Some(STAGE_EPOCHS) {
        from_epoch_recording(rec)?
    } else {
        preprocess(&rec, cfg)?
    };
    Ok((epochs, manifest))
}
