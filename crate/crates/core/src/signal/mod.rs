//! DSP kernels: Butterworth filtering, decimation, epoching, standardization
//! and FFT band features.

mod butterworth;
mod epochs;
mod spectrum;

use serde::{Deserialize, Serialize};

pub use butterworth::{apply_filter, design_butterworth, Biquad, FilterKind, FilterSpec, Sos};
pub use epochs::{
    band_power_per_channel, decimate, filter_recording, psd_features, segment_epochs, standardize,
    standardize_scoped, EpochSet, Partition, StandardizeScope,
};
pub use spectrum::{
    alpha_band, band_energy, fft_mag_sq, theta_band, Band, BandTable, PowerSpectrum, Spectrum, Window,
};

use crate::eeg_io::Recording;
use crate::error::Result;

/// Preprocessing chain applied to a raw session before anything else.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PreprocessConfig {
    pub band_low_hz: f64,
    pub band_high_hz: f64,
    pub prototype_order: usize,
    /// Dataset-specific low-pass applied after the band-pass, if any.
    pub extra_lowpass_hz: Option<f64>,
    pub fs_out_hz: f64,
    pub window_sec: f64,
    pub standardize_scope: StandardizeScope,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            band_low_hz: 1.0,
            band_high_hz: 40.0,
            prototype_order: 4,
            extra_lowpass_hz: None,
            fs_out_hz: 250.0,
            window_sec: 2.0,
            standardize_scope: StandardizeScope::Epoch,
        }
    }
}

/// Band-pass, optional low-pass, decimation, segmentation, standardization.
pub fn preprocess(rec: &Recording, cfg: &PreprocessConfig) -> Result<EpochSet> {
    rec.validate()?;
    let bp = design_butterworth(&FilterSpec::bandpass(
        cfg.prototype_order,
        cfg.band_low_hz,
        cfg.band_high_hz,
        rec.fs_hz(),
    ))?;
    let mut filtered = filter_recording(rec, &bp)?;
    if let Some(cut) = cfg.extra_lowpass_hz {
        let lp = design_butterworth(&FilterSpec::lowpass(cfg.prototype_order, cut, rec.fs_hz()))?;
        filtered = filter_recording(&filtered, &lp)?;
    }
    let decimated = decimate(&filtered, cfg.fs_out_hz)?;
    let epochs = segment_epochs(&decimated, cfg.window_sec)?;
    Ok(standardize_scoped(&epochs, cfg.standardize_scope))
}
