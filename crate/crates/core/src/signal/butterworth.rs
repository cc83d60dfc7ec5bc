//! Butterworth IIR design in cascaded second-order sections.
//!
//! The analog prototype of order N has poles on the unit circle at
//! `exp(j*pi*(2k + N + 1) / (2N))`. Band edges are prewarped, the prototype is
//! transformed to the requested low-pass or band-pass shape in the s-plane,
//! and the bilinear transform maps the poles into the z-plane. A band-pass of
//! prototype order N has 2N poles, stored as N sections.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterKind {
    Bandpass,
    Lowpass,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec {
    pub kind: FilterKind,
    pub prototype_order: usize,
    /// Ignored for low-pass filters.
    pub low_hz: f64,
    pub high_hz: f64,
    pub fs_hz: f64,
}

impl FilterSpec {
    pub fn bandpass(prototype_order: usize, low_hz: f64, high_hz: f64, fs_hz: f64) -> Self {
        FilterSpec {
            kind: FilterKind::Bandpass,
            prototype_order,
            low_hz,
            high_hz,
            fs_hz,
        }
    }

    pub fn lowpass(prototype_order: usize, cutoff_hz: f64, fs_hz: f64) -> Self {
        FilterSpec {
            kind: FilterKind::Lowpass,
            prototype_order,
            low_hz: 0.0,
            high_hz: cutoff_hz,
            fs_hz,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let nyq = self.fs_hz / 2.0;
        if !(self.fs_hz.is_finite() && self.fs_hz > 0.0) {
            return Err(Error::InvalidSpec(format!("fs_hz {} must be positive", self.fs_hz)));
        }
        if self.prototype_order == 0 {
            return Err(Error::InvalidSpec("prototype_order must be >= 1".into()));
        }
        let ok = match self.kind {
            FilterKind::Bandpass => 0.0 < self.low_hz && self.low_hz < self.high_hz && self.high_hz < nyq,
            FilterKind::Lowpass => 0.0 < self.high_hz && self.high_hz < nyq,
        };
        if !ok {
            return Err(Error::InvalidSpec(format!(
                "edges [{}, {}] Hz invalid for {:?} at fs {} Hz",
                self.low_hz, self.high_hz, self.kind, self.fs_hz
            )));
        }
        Ok(())
    }
}

/// Transposed direct-form II biquad, `a0` normalized to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Biquad {
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub a1: f64,
    pub a2: f64,
}

impl Biquad {
    fn response(&self, z_inv: Complex64) -> Complex64 {
        let z2 = z_inv * z_inv;
        (self.b0 + self.b1 * z_inv + self.b2 * z2) / (1.0 + self.a1 * z_inv + self.a2 * z2)
    }
}

/// A cascade of second-order sections.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sos {
    pub sections: Vec<Biquad>,
}

impl Sos {
    /// Complex response at `freq_hz`.
    pub fn response(&self, freq_hz: f64, fs_hz: f64) -> Complex64 {
        let z_inv = Complex64::from_polar(1.0, -2.0 * PI * freq_hz / fs_hz);
        self.sections
            .iter()
            .fold(Complex64::new(1.0, 0.0), |acc, s| acc * s.response(z_inv))
    }

    pub fn magnitude_db(&self, freq_hz: f64, fs_hz: f64) -> f64 {
        20.0 * self.response(freq_hz, fs_hz).norm().log10()
    }

    /// Causal filtering from zero initial state.
    pub fn apply(&self, signal: &[f64]) -> Result<Vec<f64>> {
        if let Some(i) = signal.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput(i));
        }
        let mut out = signal.to_vec();
        self.apply_in_place(&mut out);
        Ok(out)
    }

    /// Same as [`Sos::apply`] without the finiteness check.
    pub fn apply_in_place(&self, buf: &mut [f64]) {
        for s in &self.sections {
            let (mut z1, mut z2) = (0.0, 0.0);
            for x in buf.iter_mut() {
                let y = s.b0 * *x + z1;
                z1 = s.b1 * *x - s.a1 * y + z2;
                z2 = s.b2 * *x - s.a2 * y;
                *x = y;
            }
        }
    }
}

/// Free-function form of [`Sos::apply`].
pub fn apply_filter(sos: &Sos, signal: &[f64]) -> Result<Vec<f64>> {
    sos.apply(signal)
}

pub fn design_butterworth(spec: &FilterSpec) -> Result<Sos> {
    spec.validate()?;
    let n = spec.prototype_order;
    let fs2 = 2.0 * spec.fs_hz;
    let warp = |f: f64| fs2 * (PI * f / spec.fs_hz).tan();

    let proto: Vec<Complex64> = (0..n)
        .map(|k| Complex64::from_polar(1.0, PI * (2 * k + n + 1) as f64 / (2 * n) as f64))
        .collect();

    let bilinear = |s: Complex64| (fs2 + s) / (fs2 - s);

    let (poles, numerators, ref_freq): (Vec<Complex64>, _, f64) = match spec.kind {
        FilterKind::Lowpass => {
            let wc = warp(spec.high_hz);
            let poles = proto.iter().map(|&p| bilinear(p * wc)).collect();
            // every zero sits at z = -1
            (poles, Numerator::Lowpass, 0.0)
        }
        FilterKind::Bandpass => {
            let w1 = warp(spec.low_hz);
            let w2 = warp(spec.high_hz);
            let bw = w2 - w1;
            let w0_sq = w1 * w2;
            let mut poles = Vec::with_capacity(2 * n);
            for &p in &proto {
                let a = p * (bw / 2.0);
                let d = (a * a - w0_sq).sqrt();
                poles.push(bilinear(a + d));
                poles.push(bilinear(a - d));
            }
            // unity gain at the digital image of the analog centre frequency
            let f0 = spec.fs_hz / PI * (w0_sq.sqrt() / fs2).atan();
            (poles, Numerator::Bandpass, f0)
        }
    };

    let mut sections: Vec<Biquad> = pair_poles(&poles)
        .into_iter()
        .map(|pair| {
            let (a1, a2, first_order) = match pair {
                PolePair::Complex(p) => (-2.0 * p.re, p.norm_sqr(), false),
                PolePair::Real(p, q) => (-(p + q), p * q, false),
                PolePair::Single(p) => (-p, 0.0, true),
            };
            let (b0, b1, b2) = match (numerators, first_order) {
                (Numerator::Lowpass, false) => (1.0, 2.0, 1.0),
                (Numerator::Lowpass, true) => (1.0, 1.0, 0.0),
                (Numerator::Bandpass, _) => (1.0, 0.0, -1.0),
            };
            Biquad { b0, b1, b2, a1, a2 }
        })
        .collect();

    let sos = Sos { sections: sections.clone() };
    let gain = sos.response(ref_freq, spec.fs_hz).norm();
    let per_section = gain.powf(-1.0 / sections.len() as f64);
    for s in &mut sections {
        s.b0 *= per_section;
        s.b1 *= per_section;
        s.b2 *= per_section;
    }
    Ok(Sos { sections })
}

#[derive(Clone, Copy)]
enum Numerator {
    Lowpass,
    Bandpass,
}

enum PolePair {
    Complex(Complex64),
    Real(f64, f64),
    Single(f64),
}

fn pair_poles(poles: &[Complex64]) -> Vec<PolePair> {
    const IMAG_EPS: f64 = 1e-12;
    let mut complex: Vec<Complex64> = poles.iter().copied().filter(|p| p.im > IMAG_EPS).collect();
    let mut real: Vec<f64> = poles
        .iter()
        .filter(|p| p.im.abs() <= IMAG_EPS)
        .map(|p| p.re)
        .collect();
    complex.sort_by(|a, b| a.norm().total_cmp(&b.norm()));
    real.sort_by(|a, b| a.total_cmp(b));

    let mut out: Vec<PolePair> = complex.into_iter().map(PolePair::Complex).collect();
    let mut it = real.chunks(2);
    for chunk in &mut it {
        out.push(match *chunk {
            [p, q] => PolePair::Real(p, q),
            [p] => PolePair::Single(p),
            _ => unreachable!(),
        });
    }
    out
}
