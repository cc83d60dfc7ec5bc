use std::f64::consts::TAU;

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{Manifest, Recording, TrialFlags, DISTRACTED_FLAG};
use crate::error::{Error, Result};

/// Parameters of the synthetic two-class dataset.
///
/// Attentive trials carry a class-specific alpha sinusoid on channel 0 or 1
/// on top of alpha/theta background activity. Distracted trials lose the
/// class component and show elevated alpha with depressed theta on every
/// channel, so their alpha/theta ratio is far above that of attentive trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub dataset_id: String,
    pub n_subjects: usize,
    pub n_sessions: usize,
    pub n_trials: usize,
    pub n_channels: usize,
    pub fs_hz: f64,
    pub trial_sec: f64,
    pub distract_frac: f64,
    pub alpha_hz: f64,
    pub theta_hz: f64,
    pub attentive_alpha_amp: f64,
    pub attentive_theta_amp: f64,
    pub distracted_alpha_amp: f64,
    pub distracted_theta_amp: f64,
    pub class_signal_amp: f64,
    pub noise_std: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            dataset_id: "synth".into(),
            n_subjects: 4,
            n_sessions: 2,
            n_trials: 80,
            n_channels: 4,
            fs_hz: 250.0,
            trial_sec: 4.0,
            distract_frac: 0.3,
            alpha_hz: 10.0,
            theta_hz: 6.0,
            attentive_alpha_amp: 1.0,
            attentive_theta_amp: 1.0,
            distracted_alpha_amp: 3.0,
            distracted_theta_amp: 0.5,
            class_signal_amp: 1.5,
            noise_std: 0.5,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn n_samples(&self) -> usize {
        (self.trial_sec * self.fs_hz).round() as usize
    }

    pub fn subject_id(i: usize) -> String {
        format!("S{:02}", i + 1)
    }

    pub fn session_id(i: usize) -> String {
        format!("ses-{:02}", i + 1)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::InvalidConfig(m));
        if self.n_subjects == 0 || self.n_sessions == 0 || self.n_trials == 0 {
            return fail("n_subjects, n_sessions and n_trials must be >= 1".into());
        }
        if self.n_channels < 2 {
            return fail(format!("need at least 2 channels, got {}", self.n_channels));
        }
        if !(0.0..=1.0).contains(&self.distract_frac) {
            return fail(format!("distract_frac {} outside [0, 1]", self.distract_frac));
        }
        let amps = [
            self.attentive_alpha_amp,
            self.attentive_theta_amp,
            self.distracted_alpha_amp,
            self.distracted_theta_amp,
            self.class_signal_amp,
            self.noise_std,
        ];
        if amps.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
            return fail("amplitudes and noise_std must be finite and >= 0".into());
        }
        if !(self.alpha_hz > 0.0 && self.theta_hz > 0.0) {
            return fail("band frequencies must be positive".into());
        }
        if !(self.fs_hz.is_finite() && self.fs_hz > 2.0 * self.alpha_hz.max(self.theta_hz)) {
            return fail(format!("fs_hz {} violates the Nyquist bound", self.fs_hz));
        }
        if !(self.trial_sec > 0.0) || self.n_samples() == 0 {
            return fail("trial_sec yields no samples".into());
        }
        Ok(())
    }
}

/// One recording per subject x session, subject-major.
pub fn synth_dataset(cfg: &SynthConfig) -> Result<Vec<Recording>> {
    cfg.validate()?;
    let mut out = Vec::with_capacity(cfg.n_subjects * cfg.n_sessions);
    for subject in 0..cfg.n_subjects {
        for session in 0..cfg.n_sessions {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream((subject * cfg.n_sessions + session) as u64);
            out.push(synth_session(cfg, subject, session, &mut rng));
        }
    }
    Ok(out)
}

fn synth_session(cfg: &SynthConfig, subject: usize, session: usize, rng: &mut ChaCha8Rng) -> Recording {
    let n = cfg.n_trials;
    let ns = cfg.n_samples();
    let nch = cfg.n_channels;

    let mut labels: Vec<i32> = (0..n).map(|i| (i >= n.div_ceil(2)) as i32).collect();
    labels.shuffle(rng);

    let n_distracted = ((cfg.distract_frac * n as f64).round() as usize).min(n);
    let mut distracted = vec![false; n];
    for i in index::sample(rng, n, n_distracted) {
        distracted[i] = true;
    }

    let noise = Normal::new(0.0, cfg.noise_std).expect("noise_std validated");
    let w_alpha = TAU * cfg.alpha_hz / cfg.fs_hz;
    let w_theta = TAU * cfg.theta_hz / cfg.fs_hz;

    let mut data = Vec::with_capacity(n * nch * ns);
    let mut flags = Vec::with_capacity(n);
    let mut buf = vec![0.0f64; ns];
    for trial in 0..n {
        let (alpha_amp, theta_amp) = if distracted[trial] {
            (cfg.distracted_alpha_amp, cfg.distracted_theta_amp)
        } else {
            (cfg.attentive_alpha_amp, cfg.attentive_theta_amp)
        };
        let class_phase: f64 = rng.random_range(0.0..TAU);
        for ch in 0..nch {
            let pa: f64 = rng.random_range(0.0..TAU);
            let pt: f64 = rng.random_range(0.0..TAU);
            for (i, v) in buf.iter_mut().enumerate() {
                let t = i as f64;
                *v = alpha_amp * (w_alpha * t + pa).sin() + theta_amp * (w_theta * t + pt).sin();
            }
            if !distracted[trial] && ch == labels[trial] as usize {
                for (i, v) in buf.iter_mut().enumerate() {
                    *v += cfg.class_signal_amp * (w_alpha * i as f64 + class_phase).sin();
                }
            }
            data.extend(buf.iter().map(|v| (v + noise.sample(rng)) as f32));
        }
        let mut f = TrialFlags::new();
        f.insert(
            DISTRACTED_FLAG.into(),
            if distracted[trial] { "yes" } else { "no" }.into(),
        );
        flags.push(f);
    }

    let mut manifest = Manifest::new(
        cfg.dataset_id.clone(),
        SynthConfig::subject_id(subject),
        SynthConfig::session_id(session),
        cfg.fs_hz,
        n,
        ns,
        (0..nch).map(|c| format!("ch{c}")).collect(),
        vec!["left_hand".into(), "right_hand".into()],
    );
    manifest
        .metadata
        .insert("generator".into(), serde_json::json!("synthetic"));
    manifest
        .metadata
        .insert("seed".into(), serde_json::json!(cfg.seed));

    Recording {
        manifest,
        data,
        labels,
        epoch_flags: Some(flags),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SynthConfig {
        SynthConfig {
            n_subjects: 2,
            n_sessions: 2,
            n_trials: 21,
            trial_sec: 2.0,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn no_distraction_means_all_attentive() {
        let cfg = SynthConfig {
            distract_frac: 0.0,
            ..small()
        };
        for rec in synth_dataset(&cfg).unwrap() {
            assert!((0..rec.n_trials()).all(|t| rec.is_distracted(t) == Some(false)));
        }
    }

    #[test]
    fn labels_balanced_and_distraction_count_exact() {
        for rec in synth_dataset(&small()).unwrap() {
            rec.validate().unwrap();
            let ones = rec.labels.iter().filter(|&&l| l == 1).count() as i64;
            let zeros = rec.labels.len() as i64 - ones;
            assert!((ones - zeros).abs() <= 1);
            let d = (0..rec.n_trials())
                .filter(|&t| rec.is_distracted(t) == Some(true))
                .count();
            assert_eq!(d, (0.3f64 * 21.0).round() as usize);
        }
    }

    #[test]
    fn seed_determines_output() {
        let a = synth_dataset(&small()).unwrap();
        let b = synth_dataset(&small()).unwrap();
        assert_eq!(a, b);
        let c = synth_dataset(&SynthConfig { seed: 1, ..small() }).unwrap();
        assert_ne!(a[0].data, c[0].data);
        // sessions differ from each other
        assert_ne!(a[0].data, a[1].data);
    }

    #[test]
    fn invalid_configs() {
        let bad = [
            SynthConfig { distract_frac: 1.5, ..small() },
            SynthConfig { n_channels: 1, ..small() },
            SynthConfig { fs_hz: 15.0, ..small() },
            SynthConfig { noise_std: -1.0, ..small() },
        ];
        for cfg in bad {
            assert!(matches!(synth_dataset(&cfg), Err(Error::InvalidConfig(_))), "{cfg:?}");
        }
    }
}
