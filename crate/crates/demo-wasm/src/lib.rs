//! Browser demo of the filtering pipeline. Each export takes plain numbers
//! and returns a JSON string for the page to draw.

use serde::Serialize;
use statefilter::curriculum::{train, CurriculumSchedule};
use statefilter::eeg_io::{synth_dataset, SynthConfig};
use statefilter::pipeline::FeatureScaler;
use statefilter::signal::{design_butterworth, preprocess, psd_features, BandTable, FilterSpec, PreprocessConfig};
use statefilter::state_filter::{attention_profile, FilterUnit};
use wasm_bindgen::prelude::*;

#[derive(Debug, Serialize)]
pub struct Response {
    pub freqs: Vec<f64>,
    pub db: Vec<f64>,
}

/// Magnitude response of a band-pass design on a log-spaced grid from
/// 0.1 Hz to just below Nyquist.
pub fn response_curve(order: usize, low_hz: f64, high_hz: f64, fs_hz: f64, points: usize) -> statefilter::Result<Response> {
    let sos = design_butterworth(&FilterSpec::bandpass(order, low_hz, high_hz, fs_hz))?;
    let (lo, hi) = (0.1f64.ln(), (0.499 * fs_hz).ln());
    let n = points.max(2);
    let freqs: Vec<f64> = (0..n).map(|i| (lo + (hi - lo) * i as f64 / (n - 1) as f64).exp()).collect();
    let db = freqs.iter().map(|&f| sos.magnitude_db(f, fs_hz).max(-200.0)).collect();
    Ok(Response { freqs, db })
}

#[derive(Debug, Serialize)]
pub struct AttentionDemo {
    pub atr: Vec<f64>,
    pub q1: f64,
    pub q3: f64,
    pub fence_upper: f64,
    pub mask: Vec<bool>,
    pub distracted: Vec<bool>,
    /// Share of distracted epochs the fence removes.
    pub recall: f64,
    /// Share of removed epochs that are distracted.
    pub precision: f64,
}

/// One synthetic session, scored and fenced at `k`.
pub fn attention_session(k: f64, distract_frac: f64, seed: u64) -> statefilter::Result<AttentionDemo> {
    let rec = synth_dataset(&SynthConfig {
        n_subjects: 1,
        n_sessions: 1,
        n_trials: 40,
        distract_frac,
        seed,
        ..SynthConfig::default()
    })?
    .remove(0);
    let epochs = preprocess(&rec, &PreprocessConfig::default())?;
    let profile = attention_profile(&epochs, k, FilterUnit::Window)?;
    let distracted: Vec<bool> = (0..epochs.len()).map(|i| epochs.is_distracted(i).unwrap_or(false)).collect();
    let removed = |want: bool| {
        profile
            .mask
            .iter()
            .zip(&distracted)
            .filter(|(m, d)| !**m && **d == want)
            .count() as f64
    };
    let (hit, miss) = (removed(true), removed(false));
    let n_distracted = distracted.iter().filter(|&&d| d).count() as f64;
    Ok(AttentionDemo {
        recall: if n_distracted > 0.0 { hit / n_distracted } else { 0.0 },
        precision: if hit + miss > 0.0 { hit / (hit + miss) } else { 0.0 },
        atr: profile.atr,
        q1: profile.q1,
        q3: profile.q3,
        fence_upper: profile.fence_upper,
        mask: profile.mask,
        distracted,
    })
}

#[derive(Debug, Serialize)]
pub struct CurriculumDemo {
    pub inclusion: Vec<f64>,
    pub kept: Vec<usize>,
    pub loss: Vec<f64>,
    pub accuracy: Vec<f64>,
    pub n: usize,
}

/// Decoder training on one synthetic session under the given schedule.
pub fn curriculum_run(q0: f64, ramp_frac: f64, epochs: usize, seed: u64) -> statefilter::Result<CurriculumDemo> {
    let rec = synth_dataset(&SynthConfig {
        n_subjects: 1,
        n_sessions: 1,
        n_trials: 40,
        seed,
        ..SynthConfig::default()
    })?
    .remove(0);
    let set = preprocess(&rec, &PreprocessConfig::default())?;
    let raw = psd_features(&set, &BandTable::default())?;
    let x = FeatureScaler::fit(&raw).transform(&raw)?;
    let sched = CurriculumSchedule {
        q0,
        ramp_frac,
        epochs,
        ..CurriculumSchedule::default()
    };
    let (_, trace) = train(&x, &set.labels, set.n_classes, &sched, 1e-4)?;
    Ok(CurriculumDemo {
        inclusion: trace.epochs.iter().map(|r| r.inclusion).collect(),
        kept: trace.epochs.iter().map(|r| r.kept).collect(),
        loss: trace.epochs.iter().map(|r| r.mean_active_loss).collect(),
        accuracy: trace.epochs.iter().map(|r| r.accuracy).collect(),
        n: set.len(),
    })
}

fn to_js<T: Serialize>(r: statefilter::Result<T>) -> Result<String, JsError> {
    let v = r.map_err(|e| JsError::new(&e.to_string()))?;
    serde_json::to_string(&v).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
pub fn filter_response(order: usize, low_hz: f64, high_hz: f64, fs_hz: f64, points: usize) -> Result<String, JsError> {
    to_js(response_curve(order, low_hz, high_hz, fs_hz, points))
}

#[wasm_bindgen]
pub fn attention_demo(k: f64, distract_frac: f64, seed: u32) -> Result<String, JsError> {
    to_js(attention_session(k, distract_frac, seed.into()))
}

#[wasm_bindgen]
pub fn curriculum_trace(q0: f64, ramp_frac: f64, epochs: usize, seed: u32) -> Result<String, JsError> {
    to_js(curriculum_run(q0, ramp_frac, epochs, seed.into()))
}
