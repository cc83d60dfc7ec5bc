use serde::{Deserialize, Serialize};

use super::butterworth::{design_butterworth, FilterSpec, Sos};
use super::spectrum::{BandPower, BandTable};
use crate::eeg_io::{Recording, TrialFlags, DISTRACTED_FLAG};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Which side of the cross-session protocol an epoch set belongs to.
///
/// Masking and threshold search refuse to touch [`Partition::Evaluation`]
/// data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Partition {
    #[default]
    Unassigned,
    Training,
    Evaluation,
}

/// Fixed-length epochs cut from the trials of one session.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochSet {
    /// `[epoch][channel][sample]`
    pub data: Vec<f64>,
    pub n_channels: usize,
    pub n_samples: usize,
    pub labels: Vec<usize>,
    pub n_classes: usize,
    pub subject_id: String,
    pub session_id: String,
    pub channel_names: Vec<String>,
    pub fs_hz: f64,
    pub window_sec: f64,
    pub source_trial: Vec<usize>,
    pub epoch_flags: Option<Vec<TrialFlags>>,
    pub partition: Partition,
}

impl EpochSet {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn epoch(&self, i: usize) -> &[f64] {
        let len = self.n_channels * self.n_samples;
        &self.data[i * len..(i + 1) * len]
    }

    pub fn channel(&self, epoch: usize, channel: usize) -> &[f64] {
        let start = (epoch * self.n_channels + channel) * self.n_samples;
        &self.data[start..start + self.n_samples]
    }

    fn channel_mut(&mut self, epoch: usize, channel: usize) -> &mut [f64] {
        let start = (epoch * self.n_channels + channel) * self.n_samples;
        &mut self.data[start..start + self.n_samples]
    }

    pub fn is_distracted(&self, epoch: usize) -> Option<bool> {
        self.epoch_flags
            .as_ref()
            .and_then(|f| f[epoch].get(DISTRACTED_FLAG))
            .map(|v| v == "yes")
    }

    /// Epochs at `idx`, in the given order.
    pub fn subset(&self, idx: &[usize]) -> EpochSet {
        let len = self.n_channels * self.n_samples;
        let mut data = Vec::with_capacity(idx.len() * len);
        for &i in idx {
            data.extend_from_slice(self.epoch(i));
        }
        EpochSet {
            data,
            n_channels: self.n_channels,
            n_samples: self.n_samples,
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            n_classes: self.n_classes,
            subject_id: self.subject_id.clone(),
            session_id: self.session_id.clone(),
            channel_names: self.channel_names.clone(),
            fs_hz: self.fs_hz,
            window_sec: self.window_sec,
            source_trial: idx.iter().map(|&i| self.source_trial[i]).collect(),
            epoch_flags: self
                .epoch_flags
                .as_ref()
                .map(|f| idx.iter().map(|&i| f[i].clone()).collect()),
            partition: self.partition,
        }
    }

    pub fn with_partition(mut self, partition: Partition) -> Self {
        self.partition = partition;
        self
    }

    /// Distinct source trials in order of first appearance, with their labels.
    pub fn trials(&self) -> Vec<(usize, usize)> {
        let mut seen = std::collections::BTreeSet::new();
        let mut out = Vec::new();
        for (i, &t) in self.source_trial.iter().enumerate() {
            if seen.insert(t) {
                out.push((t, self.labels[i]));
            }
        }
        out
    }
}

/// Filters every channel of every trial independently, from zero state.
pub fn filter_recording(rec: &Recording, sos: &Sos) -> Result<Recording> {
    let mut out = rec.clone();
    let mut buf = vec![0.0f64; rec.n_samples()];
    for trial in 0..rec.n_trials() {
        for ch in 0..rec.n_channels() {
            for (b, &v) in buf.iter_mut().zip(rec.channel(trial, ch)) {
                *b = v as f64;
            }
            if let Some(i) = buf.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFiniteInput(i));
            }
            sos.apply_in_place(&mut buf);
            for (o, &v) in out.channel_mut(trial, ch).iter_mut().zip(&buf) {
                *o = v as f32;
            }
        }
    }
    Ok(out)
}

/// Integer-factor downsampling behind an order-4 Butterworth low-pass at
/// `0.4 * fs_target`. A factor of 1 returns the input unchanged.
pub fn decimate(rec: &Recording, fs_target: f64) -> Result<Recording> {
    let fs = rec.fs_hz();
    let ratio = fs / fs_target;
    let factor = ratio.round();
    if !(fs_target > 0.0 && factor >= 1.0 && (ratio - factor).abs() < 1e-9) {
        return Err(Error::NonIntegerFactor {
            from_hz: fs,
            to_hz: fs_target,
        });
    }
    let factor = factor as usize;
    if factor == 1 {
        return Ok(rec.clone());
    }
    let sos = design_butterworth(&FilterSpec::lowpass(4, 0.4 * fs_target, fs))?;
    let filtered = filter_recording(rec, &sos)?;

    let ns_out = rec.n_samples().div_ceil(factor);
    let mut data = Vec::with_capacity(rec.n_trials() * rec.n_channels() * ns_out);
    for trial in 0..rec.n_trials() {
        for ch in 0..rec.n_channels() {
            data.extend(filtered.channel(trial, ch).iter().step_by(factor));
        }
    }
    let mut manifest = rec.manifest.clone();
    manifest.fs_hz = fs_target;
    manifest.n_samples = ns_out;
    Ok(Recording {
        manifest,
        data,
        labels: rec.labels.clone(),
        epoch_flags: rec.epoch_flags.clone(),
    })
}

/// Splits each trial into `floor(n_samples / W)` non-overlapping windows of
/// `W = round(window_sec * fs)` samples. Trials shorter than `W` contribute
/// nothing.
pub fn segment_epochs(rec: &Recording, window_sec: f64) -> Result<EpochSet> {
    if !(window_sec > 0.0 && window_sec.is_finite()) {
        return Err(Error::InvalidArgument(format!("window_sec {window_sec} must be positive")));
    }
    let w = (window_sec * rec.fs_hz()).round() as usize;
    let per_trial = if w == 0 { 0 } else { rec.n_samples() / w };
    if per_trial == 0 {
        return Err(Error::EmptyResult { window_samples: w });
    }
    let nch = rec.n_channels();
    let n_epochs = rec.n_trials() * per_trial;
    let mut data = Vec::with_capacity(n_epochs * nch * w);
    let mut labels = Vec::with_capacity(n_epochs);
    let mut source_trial = Vec::with_capacity(n_epochs);
    let mut flags = rec.epoch_flags.as_ref().map(|_| Vec::with_capacity(n_epochs));
    for trial in 0..rec.n_trials() {
        for k in 0..per_trial {
            for ch in 0..nch {
                let seg = &rec.channel(trial, ch)[k * w..(k + 1) * w];
                data.extend(seg.iter().map(|&v| v as f64));
            }
            labels.push(rec.labels[trial] as usize);
            source_trial.push(trial);
            if let (Some(out), Some(src)) = (flags.as_mut(), rec.epoch_flags.as_ref()) {
                out.push(src[trial].clone());
            }
        }
    }
    Ok(EpochSet {
        data,
        n_channels: nch,
        n_samples: w,
        labels,
        n_classes: rec.manifest.n_classes(),
        subject_id: rec.manifest.subject_id.clone(),
        session_id: rec.manifest.session_id.clone(),
        channel_names: rec.manifest.channel_names.clone(),
        fs_hz: rec.fs_hz(),
        window_sec,
        source_trial,
        epoch_flags: flags,
        partition: Partition::Unassigned,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StandardizeScope {
    /// Statistics per epoch and channel.
    #[default]
    Epoch,
    /// Statistics per channel over all epochs of the set.
    Session,
}

const STD_FLOOR: f64 = 1e-12;

fn mean_std(xs: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = xs.clone().count() as f64;
    let mean = xs.clone().sum::<f64>() / n;
    let var = xs.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn rescale(xs: &mut [f64], mean: f64, std: f64) {
    for v in xs {
        *v -= mean;
        if std >= STD_FLOOR {
            *v /= std;
        }
    }
}

/// Per-epoch, per-channel z-scoring with the population standard deviation.
/// Channels with std below 1e-12 are only mean-centred.
pub fn standardize(epochs: &EpochSet) -> EpochSet {
    standardize_scoped(epochs, StandardizeScope::Epoch)
}

pub fn standardize_scoped(epochs: &EpochSet, scope: StandardizeScope) -> EpochSet {
    let mut out = epochs.clone();
    match scope {
        StandardizeScope::Epoch => {
            for e in 0..out.len() {
                for c in 0..out.n_channels {
                    let (m, s) = mean_std(epochs.channel(e, c).iter().copied());
                    rescale(out.channel_mut(e, c), m, s);
                }
            }
        }
        StandardizeScope::Session => {
            for c in 0..out.n_channels {
                let all = (0..epochs.len()).flat_map(|e| epochs.channel(e, c).iter().copied());
                let (m, s) = mean_std(all);
                for e in 0..out.len() {
                    rescale(out.channel_mut(e, c), m, s);
                }
            }
        }
    }
    out
}

/// Natural log of Hann-periodogram band power, `ln(1e-12 + P_band)`.
/// Columns are channel-major: `channel * n_bands + band`.
pub fn psd_features(epochs: &EpochSet, bands: &BandTable) -> Result<Matrix> {
    const LOG_EPS: f64 = 1e-12;
    let cols = epochs.n_channels * bands.len();
    if epochs.is_empty() {
        return Ok(Matrix::zeros(0, cols));
    }
    let mut bp = BandPower::new(epochs.n_samples, epochs.fs_hz, bands.bands())?;
    let mut data = Vec::with_capacity(epochs.len() * cols);
    let mut powers = Vec::with_capacity(bands.len());
    for e in 0..epochs.len() {
        for c in 0..epochs.n_channels {
            powers.clear();
            bp.powers(epochs.channel(e, c), &mut powers);
            data.extend(powers.iter().map(|p| (LOG_EPS + p).ln()));
        }
    }
    Matrix::from_vec(epochs.len(), cols, data)
}

/// Per-epoch, per-channel periodogram power in a single band (no log).
pub fn band_power_per_channel(epochs: &EpochSet, band: &super::spectrum::Band) -> Result<Vec<f64>> {
    if epochs.is_empty() {
        return Ok(Vec::new());
    }
    let mut bp = BandPower::new(epochs.n_samples, epochs.fs_hz, std::slice::from_ref(band))?;
    let mut out = Vec::with_capacity(epochs.len() * epochs.n_channels);
    for e in 0..epochs.len() {
        for c in 0..epochs.n_channels {
            bp.powers(epochs.channel(e, c), &mut out);
        }
    }
    Ok(out)
}
