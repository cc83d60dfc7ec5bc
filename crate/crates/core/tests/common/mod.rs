//! Independent reference implementations shared by the integration tests.
//! Nothing here calls into the library's numerics.

#![allow(dead_code)]

use std::f64::consts::PI;

use statefilter::signal::{EpochSet, Partition, Sos};

/// `|X_k|^2` for `k = 0..=N/2`, by the O(N^2) definition.
pub fn dft_mag_sq(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..=n / 2)
        .map(|k| {
            let (mut re, mut im) = (0.0, 0.0);
            for (t, &v) in x.iter().enumerate() {
                // reduce the phase index first so large k*t stays exact
                let ang = -2.0 * PI * ((k * t) % n) as f64 / n as f64;
                re += v * ang.cos();
                im += v * ang.sin();
            }
            re * re + im * im
        })
        .collect()
}

/// Sum of `|X_k|^2` over all N bins recovered from the one-sided half.
pub fn two_sided_energy(one_sided: &[f64], n: usize) -> f64 {
    let mut total = one_sided[0];
    for (k, &p) in one_sided.iter().enumerate().skip(1) {
        let mirrored = !(n % 2 == 0 && k == n / 2);
        total += if mirrored { 2.0 * p } else { p };
    }
    total
}

/// Energy of bins whose centre frequency falls in `[lo, hi)`.
pub fn band_energy_oracle(x: &[f64], fs: f64, lo: f64, hi: f64) -> f64 {
    let n = x.len() as f64;
    dft_mag_sq(x)
        .iter()
        .enumerate()
        .filter(|(k, _)| {
            let f = *k as f64 * fs / n;
            f >= lo && f < hi
        })
        .map(|(_, p)| p)
        .sum()
}

/// `|H(e^{jw})|` of a cascade, evaluated directly from the coefficients with
/// real arithmetic on the unit circle.
pub fn sos_magnitude(sos: &Sos, f: f64, fs: f64) -> f64 {
    let w = 2.0 * PI * f / fs;
    let (c1, s1, c2, s2) = (w.cos(), w.sin(), (2.0 * w).cos(), (2.0 * w).sin());
    sos.sections
        .iter()
        .map(|s| {
            // B(z) = b0 + b1 z^-1 + b2 z^-2 at z = e^{jw}
            let (nr, ni) = (s.b0 + s.b1 * c1 + s.b2 * c2, -(s.b1 * s1 + s.b2 * s2));
            let (dr, di) = (1.0 + s.a1 * c1 + s.a2 * c2, -(s.a1 * s1 + s.a2 * s2));
            ((nr * nr + ni * ni) / (dr * dr + di * di)).sqrt()
        })
        .product()
}

/// Largest pole radius of `1 + a1 z^-1 + a2 z^-2` via the quadratic formula.
pub fn max_pole_radius(a1: f64, a2: f64) -> f64 {
    let disc = a1 * a1 - 4.0 * a2;
    if disc < 0.0 {
        a2.abs().sqrt()
    } else {
        let r = disc.sqrt();
        ((-a1 + r) / 2.0).abs().max(((-a1 - r) / 2.0).abs())
    }
}

/// Textbook quartile at `h = (n-1)p` over a fresh sorted copy.
pub fn quartile_oracle(xs: &[f64], p: f64) -> f64 {
    let mut s = xs.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let h = (s.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    s[lo] + (h - lo as f64) * (s[hi] - s[lo])
}

/// Keep-mask of the upper Tukey fence, from scratch.
pub fn tukey_oracle(xs: &[f64], k: f64) -> (f64, Vec<bool>) {
    let q1 = quartile_oracle(xs, 0.25);
    let q3 = quartile_oracle(xs, 0.75);
    let fence = q3 + k * (q3 - q1);
    (fence, xs.iter().map(|&x| x <= fence).collect())
}

/// Plain softmax cross-entropy objective, written out without log-sum-exp
/// tricks (test inputs are small). `w` is row-major `[feature][class]`.
pub fn objective_oracle(
    w: &[f64],
    b: &[f64],
    l2: f64,
    x: &[Vec<f64>],
    y: &[usize],
    sample_w: &[f64],
) -> f64 {
    let c = b.len();
    let mut num = 0.0;
    let mut den = 0.0;
    for ((row, &yi), &wi) in x.iter().zip(y).zip(sample_w) {
        let z: Vec<f64> = (0..c)
            .map(|j| b[j] + row.iter().enumerate().map(|(f, v)| v * w[f * c + j]).sum::<f64>())
            .collect();
        let denom: f64 = z.iter().map(|v| v.exp()).sum();
        num += wi * -(z[yi].exp() / denom).ln();
        den += wi;
    }
    num / den + l2 * w.iter().map(|v| v * v).sum::<f64>()
}

/// Builds an epoch set directly from per-epoch channel data.
pub fn epoch_set(epochs: Vec<Vec<Vec<f64>>>, labels: Vec<usize>, fs: f64) -> EpochSet {
    let n_channels = epochs[0].len();
    let n_samples = epochs[0][0].len();
    let n = epochs.len();
    EpochSet {
        data: epochs.into_iter().flatten().flatten().collect(),
        n_channels,
        n_samples,
        n_classes: labels.iter().max().map_or(1, |m| m + 1).max(2),
        labels,
        subject_id: "S01".into(),
        session_id: "ses-01".into(),
        channel_names: (0..n_channels).map(|c| format!("ch{c}")).collect(),
        fs_hz: fs,
        window_sec: n_samples as f64 / fs,
        source_trial: (0..n).collect(),
        epoch_flags: None,
        partition: Partition::Unassigned,
    }
}

pub fn sine(freq: f64, amp: f64, fs: f64, n: usize) -> Vec<f64> {
    (0..n).map(|t| amp * (2.0 * PI * freq * t as f64 / fs).sin()).collect()
}

/// One-sided Mann-Whitney U p-value for `a` stochastically larger than `b`
/// (normal approximation with tie correction).
pub fn mann_whitney_greater(a: &[f64], b: &[f64]) -> f64 {
    use statrs::distribution::{ContinuousCDF, Normal};
    let mut all: Vec<(f64, bool)> = a.iter().map(|&v| (v, true)).chain(b.iter().map(|&v| (v, false))).collect();
    all.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    let n = all.len();
    let mut ranks = vec![0.0; n];
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && all[j + 1].0 == all[i].0 {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        ranks[i..=j].iter_mut().for_each(|x| *x = r);
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }
    let (n1, n2) = (a.len() as f64, b.len() as f64);
    let r1: f64 = all.iter().zip(&ranks).filter(|(p, _)| p.1).map(|(_, r)| r).sum();
    let u = r1 - n1 * (n1 + 1.0) / 2.0;
    let mu = n1 * n2 / 2.0;
    let nn = n1 + n2;
    let sigma = (n1 * n2 / 12.0 * ((nn + 1.0) - tie_term / (nn * (nn - 1.0)))).sqrt();
    1.0 - Normal::new(0.0, 1.0).unwrap().cdf((u - mu) / sigma)
}
