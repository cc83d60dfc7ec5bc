//! Glue between epochs, band features and the curriculum decoder.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::curriculum::{train, CurriculumSchedule, DecoderParams, TrainTrace};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::signal::{psd_features, BandTable, EpochSet, PreprocessConfig};
use crate::state_filter::write_json;

pub const LOG_EPS: f64 = 1e-12;

/// Per-column z-scoring fitted on training features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScaler {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl FeatureScaler {
    pub fn fit(x: &Matrix) -> Self {
        let n = x.rows().max(1) as f64;
        let mut mean = vec![0.0; x.cols()];
        for row in x.iter_rows() {
            mean.iter_mut().zip(row).for_each(|(m, v)| *m += v);
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; x.cols()];
        for row in x.iter_rows() {
            for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let std = var
            .into_iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd < 1e-12 { 1.0 } else { sd }
            })
            .collect();
        FeatureScaler { mean, std }
    }

    pub fn transform(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.mean.len() {
            return Err(Error::DimMismatch {
                expected: self.mean.len(),
                got: x.cols(),
            });
        }
        let mut out = x.clone();
        for i in 0..out.rows() {
            for ((v, m), s) in out.row_mut(i).iter_mut().zip(&self.mean).zip(&self.std) {
                *v = (*v - m) / s;
            }
        }
        Ok(out)
    }
}

/// Describes how feature columns map to channels and bands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureLayout {
    /// Always `"channel-major"`: column = channel * n_bands + band.
    pub order: String,
    pub channel_names: Vec<String>,
    pub bands: BandTable,
    pub log_eps: f64,
}

/// Scoring granularity for test accuracy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreUnit {
    #[default]
    Window,
    /// Majority vote over the windows of each trial; ties go to the lowest class.
    Trial,
}

/// A trained decoder as stored in `model.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decoder {
    #[serde(flatten)]
    pub params: DecoderParams,
    pub schedule: CurriculumSchedule,
    pub feature_layout: FeatureLayout,
    pub scaler: FeatureScaler,
    pub preprocess: PreprocessConfig,
}

impl Decoder {
    pub fn features(&self, epochs: &EpochSet) -> Result<Matrix> {
        if epochs.n_channels != self.feature_layout.channel_names.len() {
            return Err(Error::DimMismatch {
                expected: self.feature_layout.channel_names.len(),
                got: epochs.n_channels,
            });
        }
        let raw = psd_features(epochs, &self.feature_layout.bands)?;
        self.scaler.transform(&raw)
    }

    pub fn predict(&self, epochs: &EpochSet) -> Result<Vec<usize>> {
        self.params.predict(&self.features(epochs)?)
    }

    /// Fraction of correctly classified windows (or trials).
    pub fn score(&self, epochs: &EpochSet, unit: ScoreUnit) -> Result<f64> {
        if epochs.is_empty() {
            return Err(Error::EmptyInput);
        }
        let pred = self.predict(epochs)?;
        Ok(score_predictions(&pred, epochs, self.params.n_classes, unit))
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        write_json(self, path)
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::json(path, e))
    }
}

pub fn score_predictions(pred: &[usize], epochs: &EpochSet, n_classes: usize, unit: ScoreUnit) -> f64 {
    match unit {
        ScoreUnit::Window => {
            let hits = pred.iter().zip(&epochs.labels).filter(|(p, y)| p == y).count();
            hits as f64 / pred.len() as f64
        }
        ScoreUnit::Trial => {
            let mut votes: BTreeMap<usize, (usize, Vec<usize>)> = BTreeMap::new();
            for ((&p, &y), &t) in pred.iter().zip(&epochs.labels).zip(&epochs.source_trial) {
                let e = votes.entry(t).or_insert_with(|| (y, vec![0; n_classes]));
                e.1[p] += 1;
            }
            let hits = votes
                .values()
                .filter(|(y, counts)| {
                    let mut best = 0;
                    for (c, &n) in counts.iter().enumerate() {
                        if n > counts[best] {
                            best = c;
                        }
                    }
                    best == *y
                })
                .count();
            hits as f64 / votes.len() as f64
        }
    }
}

/// Band features, z-scoring and curriculum training on one epoch set.
pub fn fit_decoder(
    epochs: &EpochSet,
    bands: &BandTable,
    preprocess: &PreprocessConfig,
    schedule: &CurriculumSchedule,
    l2: f64,
) -> Result<(Decoder, TrainTrace)> {
    if epochs.is_empty() {
        return Err(Error::EmptyInput);
    }
    let raw = psd_features(epochs, bands)?;
    let scaler = FeatureScaler::fit(&raw);
    let x = scaler.transform(&raw)?;
    let (params, trace) = train(&x, &epochs.labels, epochs.n_classes, schedule, l2)?;
    let decoder = Decoder {
        params,
        schedule: schedule.clone(),
        feature_layout: FeatureLayout {
            order: "channel-major".into(),
            channel_names: epochs.channel_names.clone(),
            bands: bands.clone(),
            log_eps: LOG_EPS,
        },
        scaler,
        preprocess: preprocess.clone(),
    };
    Ok((decoder, trace))
}
