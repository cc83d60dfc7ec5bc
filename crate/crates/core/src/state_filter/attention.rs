use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{alpha_band, band_energy, theta_band, EpochSet, Partition, Spectrum, Window};

const THETA_FLOOR: f64 = 1e-12;

/// Alpha/theta energy ratio per epoch.
///
/// Band energies come from the rectangular-window `|X_k|^2` of each channel
/// and are summed across channels before taking the ratio.
pub fn attention_index(epochs: &EpochSet) -> Result<Vec<f64>> {
    if epochs.is_empty() {
        return Ok(Vec::new());
    }
    let alpha = alpha_band();
    let theta = theta_band();
    let mut plan = Spectrum::new(epochs.n_samples, Window::Rectangular);
    let mut out = Vec::with_capacity(epochs.len());
    for e in 0..epochs.len() {
        let (mut ea, mut et) = (0.0, 0.0);
        for c in 0..epochs.n_channels {
            let ps = plan.mag_sq(epochs.channel(e, c));
            ea += band_energy(&ps, epochs.fs_hz, &alpha)?;
            et += band_energy(&ps, epochs.fs_hz, &theta)?;
        }
        if et < THETA_FLOOR {
            return Err(Error::DegenerateSpectrum { epoch: e });
        }
        out.push(ea / et);
    }
    Ok(out)
}

/// Linear-interpolation quantile at position `h = (n - 1) * p` of the sorted
/// values.
pub fn quantile(xs: &[f64], p: f64) -> Result<f64> {
    if xs.is_empty() {
        return Err(Error::EmptyInput);
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!("quantile level {p} outside [0, 1]")));
    }
    if xs.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("quantile input"));
    }
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(quantile_sorted(&sorted, p))
}

pub(crate) fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    match sorted.get(lo + 1) {
        Some(&next) if frac > 0.0 => sorted[lo] + frac * (next - sorted[lo]),
        _ => sorted[lo],
    }
}

/// Granularity at which epochs are scored and masked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterUnit {
    /// Every window is scored and masked on its own.
    #[default]
    Window,
    /// Window scores are averaged per source trial; whole trials are masked.
    Trial,
}

/// Attention scores with the upper Tukey fence and the resulting keep-mask.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttentionProfile {
    pub atr: Vec<f64>,
    pub q1: f64,
    pub q3: f64,
    pub k: f64,
    pub fence_upper: f64,
    #[serde(with = "bits")]
    pub mask: Vec<bool>,
    pub n_kept: usize,
    pub n_total: usize,
    #[serde(default)]
    pub unit: FilterUnit,
}

impl AttentionProfile {
    pub fn kept_indices(&self) -> Vec<usize> {
        (0..self.mask.len()).filter(|&i| self.mask[i]).collect()
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        write_json(self, path)
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::json(path, e))
    }
}

pub(crate) fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::json(path, e))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

mod bits {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(mask: &[bool], s: S) -> Result<S::Ok, S::Error> {
        mask.iter().map(|&b| b as u8).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<bool>, D::Error> {
        let raw = Vec::<u8>::deserialize(d)?;
        raw.into_iter()
            .map(|b| match b {
                0 => Ok(false),
                1 => Ok(true),
                other => Err(serde::de::Error::custom(format!("mask value {other} is not 0/1"))),
            })
            .collect()
    }
}

/// Upper Tukey fence `q3 + k (q3 - q1)`; keeps `atr[i] <= fence`.
pub fn tukey_mask(atr: &[f64], k: f64) -> Result<AttentionProfile> {
    if !(k >= 0.0 && k.is_finite()) {
        return Err(Error::InvalidArgument(format!("k = {k} must be finite and >= 0")));
    }
    let q1 = quantile(atr, 0.25)?;
    let q3 = quantile(atr, 0.75)?;
    let fence_upper = q3 + k * (q3 - q1);
    let mask: Vec<bool> = atr.iter().map(|&s| s <= fence_upper).collect();
    Ok(AttentionProfile {
        n_kept: mask.iter().filter(|&&m| m).count(),
        n_total: atr.len(),
        atr: atr.to_vec(),
        q1,
        q3,
        k,
        fence_upper,
        mask,
        unit: FilterUnit::Window,
    })
}

/// Fence from precomputed window scores at the requested unit.
pub fn profile_from_scores(
    atr: &[f64],
    source_trial: &[usize],
    k: f64,
    unit: FilterUnit,
) -> Result<AttentionProfile> {
    if atr.len() != source_trial.len() {
        return Err(Error::LengthMismatch {
            expected: source_trial.len(),
            got: atr.len(),
        });
    }
    match unit {
        FilterUnit::Window => tukey_mask(atr, k),
        FilterUnit::Trial => {
            let mut sums: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
            for (&s, &t) in atr.iter().zip(source_trial) {
                let e = sums.entry(t).or_insert((0.0, 0));
                e.0 += s;
                e.1 += 1;
            }
            let means: BTreeMap<usize, f64> = sums.into_iter().map(|(t, (s, n))| (t, s / n as f64)).collect();
            let trial_scores: Vec<f64> = means.values().copied().collect();
            let fenced = tukey_mask(&trial_scores, k)?;
            let per_window: Vec<f64> = source_trial.iter().map(|t| means[t]).collect();
            let mask: Vec<bool> = per_window.iter().map(|&s| s <= fenced.fence_upper).collect();
            Ok(AttentionProfile {
                n_kept: mask.iter().filter(|&&m| m).count(),
                n_total: mask.len(),
                atr: per_window,
                mask,
                unit: FilterUnit::Trial,
                ..fenced
            })
        }
    }
}

/// Attention scores and fence for an epoch set.
pub fn attention_profile(epochs: &EpochSet, k: f64, unit: FilterUnit) -> Result<AttentionProfile> {
    let atr = attention_index(epochs)?;
    if atr.is_empty() {
        return Err(Error::EmptyInput);
    }
    profile_from_scores(&atr, &epochs.source_trial, k, unit)
}

/// Keeps the epochs whose mask bit is set, preserving order.
pub fn apply_mask(epochs: &EpochSet, profile: &AttentionProfile) -> Result<EpochSet> {
    if epochs.partition == Partition::Evaluation {
        return Err(Error::Protocol(format!(
            "refusing to mask evaluation session {} of {}",
            epochs.session_id, epochs.subject_id
        )));
    }
    if profile.mask.len() != epochs.len() {
        return Err(Error::LengthMismatch {
            expected: epochs.len(),
            got: profile.mask.len(),
        });
    }
    Ok(epochs.subset(&profile.kept_indices()))
}
