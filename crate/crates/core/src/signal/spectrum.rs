use std::f64::consts::TAU;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Window {
    Rectangular,
    Hann,
}

impl Window {
    /// Periodic window coefficients of length `n`.
    pub fn coefficients(self, n: usize) -> Vec<f64> {
        match self {
            Window::Rectangular => vec![1.0; n],
            Window::Hann => (0..n)
                .map(|i| 0.5 - 0.5 * (TAU * i as f64 / n as f64).cos())
                .collect(),
        }
    }
}

/// Half-open frequency interval `[lo, hi)` in Hz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
}

impl Band {
    pub fn new(name: &str, lo: f64, hi: f64) -> Self {
        Band {
            name: name.into(),
            lo,
            hi,
        }
    }

    pub fn contains(&self, hz: f64) -> bool {
        self.lo <= hz && hz < self.hi
    }
}

pub const THETA: (f64, f64) = (4.0, 8.0);
pub const ALPHA: (f64, f64) = (8.0, 13.0);

pub fn theta_band() -> Band {
    Band::new("theta", THETA.0, THETA.1)
}

pub fn alpha_band() -> Band {
    Band::new("alpha", ALPHA.0, ALPHA.1)
}

/// Ordered, disjoint bands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandTable {
    bands: Vec<Band>,
}

impl Default for BandTable {
    fn default() -> Self {
        BandTable {
            bands: vec![
                Band::new("delta", 1.0, 4.0),
                Band::new("theta", THETA.0, THETA.1),
                Band::new("alpha", ALPHA.0, ALPHA.1),
                Band::new("beta", 13.0, 30.0),
                Band::new("gamma", 30.0, 40.0),
            ],
        }
    }
}

impl BandTable {
    pub fn new(bands: Vec<Band>) -> Result<Self> {
        if bands.is_empty() {
            return Err(Error::InvalidArgument("band table is empty".into()));
        }
        for b in &bands {
            if !(b.lo >= 0.0 && b.lo < b.hi) {
                return Err(Error::InvalidArgument(format!("band {} has lo >= hi", b.name)));
            }
        }
        if bands.windows(2).any(|w| w[0].hi > w[1].lo) {
            return Err(Error::InvalidArgument("bands must be ordered and disjoint".into()));
        }
        Ok(BandTable { bands })
    }

    pub fn bands(&self) -> &[Band] {
        &self.bands
    }

    pub fn len(&self) -> usize {
        self.bands.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bands.is_empty()
    }
}

/// One-sided `|X_k|^2` for `k = 0..=N/2` of an `N`-point DFT.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSpectrum {
    pub n_fft: usize,
    pub mag_sq: Vec<f64>,
}

impl PowerSpectrum {
    pub fn bin_hz(&self, k: usize, fs_hz: f64) -> f64 {
        k as f64 * fs_hz / self.n_fft as f64
    }

    /// Bin range falling inside `[lo, hi)`.
    fn band_bins(&self, fs_hz: f64, lo: f64, hi: f64) -> Result<std::ops::Range<usize>> {
        let nyquist = fs_hz / 2.0;
        if !(lo >= 0.0 && lo < hi && hi <= nyquist + 1e-9) {
            return Err(Error::InvalidBand { lo, hi, nyquist });
        }
        let bins = 0..self.mag_sq.len();
        let start = bins.clone().find(|&k| self.bin_hz(k, fs_hz) >= lo);
        let range = match start {
            Some(s) => {
                let end = (s..self.mag_sq.len())
                    .find(|&k| self.bin_hz(k, fs_hz) >= hi)
                    .unwrap_or(self.mag_sq.len());
                s..end
            }
            None => 0..0,
        };
        if range.is_empty() {
            return Err(Error::EmptyBand {
                lo,
                hi,
                n_fft: self.n_fft,
                fs_hz,
            });
        }
        Ok(range)
    }
}

/// Reusable FFT plan for a fixed length.
pub struct Spectrum {
    n: usize,
    fft: Arc<dyn Fft<f64>>,
    window: Vec<f64>,
    scratch: Vec<Complex64>,
    buf: Vec<Complex64>,
}

impl Spectrum {
    pub fn new(n: usize, window: Window) -> Self {
        let fft = FftPlanner::new().plan_fft_forward(n);
        let scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
        Spectrum {
            n,
            fft,
            window: window.coefficients(n),
            scratch,
            buf: vec![Complex64::default(); n],
        }
    }

    pub fn window(&self) -> &[f64] {
        &self.window
    }

    pub fn mag_sq(&mut self, x: &[f64]) -> PowerSpectrum {
        assert_eq!(x.len(), self.n, "plan length mismatch");
        for ((b, &v), &w) in self.buf.iter_mut().zip(x).zip(&self.window) {
            *b = Complex64::new(v * w, 0.0);
        }
        self.fft.process_with_scratch(&mut self.buf, &mut self.scratch);
        PowerSpectrum {
            n_fft: self.n,
            mag_sq: self.buf[..=self.n / 2].iter().map(|c| c.norm_sqr()).collect(),
        }
    }
}

/// One-sided squared DFT magnitudes of `window * x`; no scaling, no doubling.
pub fn fft_mag_sq(x: &[f64], window: Window) -> Result<PowerSpectrum> {
    if x.len() < 2 {
        return Err(Error::InvalidArgument(format!("need N >= 2 samples, got {}", x.len())));
    }
    Ok(Spectrum::new(x.len(), window).mag_sq(x))
}

/// Sum of `|X_k|^2` over bins whose frequency lies in `[lo, hi)`.
pub fn band_energy(spectrum: &PowerSpectrum, fs_hz: f64, band: &Band) -> Result<f64> {
    let bins = spectrum.band_bins(fs_hz, band.lo, band.hi)?;
    Ok(spectrum.mag_sq[bins].iter().sum())
}

/// Periodogram band power: Hann density `|X_k|^2 / (fs * sum w^2)`, interior
/// bins doubled, integrated over the band with `df = fs / N`.
pub(crate) struct BandPower {
    spectrum: Spectrum,
    bins: Vec<std::ops::Range<usize>>,
    scale: f64,
}

impl BandPower {
    pub(crate) fn new(n: usize, fs_hz: f64, bands: &[Band]) -> Result<Self> {
        let spectrum = Spectrum::new(n, Window::Hann);
        let probe = PowerSpectrum {
            n_fft: n,
            mag_sq: vec![0.0; n / 2 + 1],
        };
        let bins = bands
            .iter()
            .map(|b| probe.band_bins(fs_hz, b.lo, b.hi))
            .collect::<Result<Vec<_>>>()?;
        let w_sq: f64 = spectrum.window().iter().map(|w| w * w).sum();
        let df = fs_hz / n as f64;
        Ok(BandPower {
            spectrum,
            bins,
            scale: df / (fs_hz * w_sq),
        })
    }

    pub(crate) fn powers(&mut self, x: &[f64], out: &mut Vec<f64>) {
        let ps = self.spectrum.mag_sq(x);
        let n = ps.n_fft;
        // bins 0 and (for even N) N/2 have no mirror image
        let last_single = if n % 2 == 0 { Some(n / 2) } else { None };
        for range in &self.bins {
            let total: f64 = range
                .clone()
                .map(|k| {
                    let doubled = k != 0 && Some(k) != last_single;
                    ps.mag_sq[k] * if doubled { 2.0 } else { 1.0 }
                })
                .sum();
            out.push(total * self.scale);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zeros_and_constants() {
        let s = fft_mag_sq(&[0.0; 16], Window::Rectangular).unwrap();
        assert!(s.mag_sq.iter().all(|&v| v == 0.0));
        let c = 1.75;
        let s = fft_mag_sq(&[c; 8], Window::Rectangular).unwrap();
        assert_eq!(s.mag_sq.len(), 5);
        assert!((s.mag_sq[0] - (8.0 * c) * (8.0 * c)).abs() < 1e-9);
        assert!(s.mag_sq[1..].iter().all(|&v| v < 1e-20));
    }

    #[test]
    fn too_short_input() {
        assert!(fft_mag_sq(&[1.0], Window::Hann).is_err());
    }

    #[test]
    fn band_energy_of_empty_band() {
        let s = fft_mag_sq(&[1.0, 2.0, 3.0, 4.0], Window::Rectangular).unwrap();
        assert!(matches!(
            band_energy(&s, 250.0, &theta_band()),
            Err(Error::EmptyBand { n_fft: 4, .. })
        ));
        assert!(matches!(
            band_energy(&s, 250.0, &Band::new("x", 100.0, 200.0)),
            Err(Error::InvalidBand { .. })
        ));
    }

    #[test]
    fn zero_spectrum_has_zero_energy() {
        let s = fft_mag_sq(&[0.0; 500], Window::Rectangular).unwrap();
        assert_eq!(band_energy(&s, 250.0, &alpha_band()).unwrap(), 0.0);
    }

    #[test]
    fn half_open_band_edges() {
        // N = 250 at 250 Hz: 1 Hz bins, so bin 8 belongs to alpha only
        let s = PowerSpectrum {
            n_fft: 250,
            mag_sq: (0..=125).map(|k| if k == 8 { 1.0 } else { 0.0 }).collect(),
        };
        assert_eq!(band_energy(&s, 250.0, &theta_band()).unwrap(), 0.0);
        assert_eq!(band_energy(&s, 250.0, &alpha_band()).unwrap(), 1.0);
    }

    #[test]
    fn default_table_is_valid() {
        let t = BandTable::default();
        BandTable::new(t.bands().to_vec()).unwrap();
        assert!(BandTable::new(vec![Band::new("a", 4.0, 9.0), Band::new("b", 8.0, 13.0)]).is_err());
    }
}
