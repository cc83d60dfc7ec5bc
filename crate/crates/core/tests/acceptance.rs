//! Acceptance criteria, one PASS/FAIL line each. Runs as a plain binary so
//! the verdicts are always printed; exits non-zero if any criterion fails.

mod common;

use std::path::Path;
use std::time::{Duration, Instant};

use common::{dft_mag_sq, epoch_set, objective_oracle, sine, sos_magnitude, tukey_oracle, two_sided_energy};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use statefilter::curriculum::{gradient, objective, train, CurriculumSchedule, DecoderParams};
use statefilter::eeg_io::{synth_dataset, write_recording, SynthConfig};
use statefilter::eval::{
    emit_report, paired_sign_flip_test, run_protocol, significance_stars, ExperimentConfig, REPORT_JSON,
};
use statefilter::signal::{design_butterworth, fft_mag_sq, FilterSpec, Window};
use statefilter::state_filter::{attention_index, tukey_mask};
use statefilter::Matrix;

/// Outcome of one criterion: a verdict plus the measured numbers.
struct Verdict {
    pass: bool,
    detail: String,
}

fn check(cond: bool, fails: &mut Vec<String>, what: impl Into<String>) {
    if !cond {
        fails.push(what.into());
    }
}

fn verdict(fails: Vec<String>, measured: String) -> Verdict {
    Verdict {
        pass: fails.is_empty(),
        detail: if fails.is_empty() { measured } else { format!("{measured}; failed: {}", fails.join(", ")) },
    }
}

fn dsp_suite() -> Verdict {
    let mut fails = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    let mut worst_parseval = 0.0f64;
    for _ in 0..100 {
        let n = rng.random_range(8..=512);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let time: f64 = x.iter().map(|v| v * v).sum();
        let freq = two_sided_energy(&fft_mag_sq(&x, Window::Rectangular).unwrap().mag_sq, n) / n as f64;
        worst_parseval = worst_parseval.max(((freq - time) / time).abs());
    }
    check(worst_parseval <= 1e-9, &mut fails, "Parseval");

    let mut worst_dft = 0.0f64;
    for n in 2..=64 {
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let fast = fft_mag_sq(&x, Window::Rectangular).unwrap().mag_sq;
        let slow = dft_mag_sq(&x);
        let scale = slow.iter().copied().fold(0.0, f64::max);
        for (f, s) in fast.iter().zip(&slow) {
            worst_dft = worst_dft.max((f - s).abs() / scale);
        }
    }
    check(worst_dft <= 1e-6, &mut fails, "FFT vs DFT");

    let sos = design_butterworth(&FilterSpec::bandpass(4, 1.0, 40.0, 250.0)).unwrap();
    let db = |f: f64| 20.0 * sos_magnitude(&sos, f, 250.0).log10();
    let (d10, d01, d100) = (db(10.0), db(0.1), db(100.0));
    check(d10.abs() <= 1.0, &mut fails, "10 Hz passband");
    check(d01 <= -40.0, &mut fails, "0.1 Hz stopband");
    check(d100 <= -40.0, &mut fails, "100 Hz stopband");
    verdict(
        fails,
        format!(
            "parseval {worst_parseval:.1e}, dft {worst_dft:.1e}, |H| {d10:.3}/{d01:.1}/{d100:.1} dB at 10/0.1/100 Hz"
        ),
    )
}

fn attention_suite() -> Verdict {
    let mut fails = Vec::new();
    let mix = |a10: f64, a6: f64| -> Vec<f64> {
        sine(10.0, a10, 250.0, 500).iter().zip(sine(6.0, a6, 250.0, 500)).map(|(p, q)| p + q).collect()
    };
    let atr = attention_index(&epoch_set(vec![vec![mix(1.0, 1.0)], vec![mix(2.0, 1.0)]], vec![0, 1], 250.0)).unwrap();
    check((atr[0] - 1.0).abs() <= 1e-6, &mut fails, "ATr 1.0");
    check((atr[1] - 4.0).abs() <= 1e-6, &mut fails, "ATr 4.0");

    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut mismatches = 0;
    for _ in 0..1000 {
        let n = rng.random_range(1..=12);
        let xs: Vec<f64> = (0..n).map(|_| rng.random_range(0..40) as f64 / 4.0).collect();
        let k = [0.0, 0.5, 1.0, 1.5, 2.0, 3.0][rng.random_range(0..6)];
        if tukey_mask(&xs, k).unwrap().mask != tukey_oracle(&xs, k).1 {
            mismatches += 1;
        }
    }
    check(mismatches == 0, &mut fails, "Tukey oracle");

    let mut violations = 0;
    for _ in 0..100 {
        let n = rng.random_range(1..=40);
        let xs: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..10.0f64).powi(2)).collect();
        let k1 = rng.random_range(0.0..3.0);
        let k2 = k1 + rng.random_range(0.0..3.0);
        let (m1, m2) = (tukey_mask(&xs, k1).unwrap().mask, tukey_mask(&xs, k2).unwrap().mask);
        if m1.iter().zip(&m2).any(|(a, b)| *a && !b) {
            violations += 1;
        }
    }
    check(violations == 0, &mut fails, "monotone in k");
    verdict(
        fails,
        format!(
            "ATr {:.9}/{:.9}, oracle mismatches {mismatches}/1000, monotonicity violations {violations}/100",
            atr[0], atr[1]
        ),
    )
}

fn curriculum_suite() -> Verdict {
    let mut fails = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let mut worst_grad = 0.0f64;
    for case in 0..50 {
        let (n, f, c) = (rng.random_range(2..=20), rng.random_range(1..=6), rng.random_range(2..=4));
        let rows: Vec<Vec<f64>> =
            (0..n).map(|_| (0..f).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()).collect();
        let y: Vec<usize> = (0..n).map(|_| rng.random_range(0..c)).collect();
        let mut p = DecoderParams::zeros(f, c, 0.01);
        p.weights.iter_mut().for_each(|w| *w = rng.sample::<f64, _>(StandardNormal) * 0.5);
        let sw: Vec<f64> = (0..n).map(|i| if case % 2 == 0 || i == 0 { 1.0 } else { rng.random_range(0..2) as f64 }).collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let (gw, _) = gradient(&p, &x, &y, &sw).unwrap();
        for i in 0..p.weights.len() {
            let (mut up, mut dn) = (p.weights.clone(), p.weights.clone());
            up[i] += 1e-5;
            dn[i] -= 1e-5;
            let fd = (objective_oracle(&up, &p.bias, p.l2, &rows, &y, &sw)
                - objective_oracle(&dn, &p.bias, p.l2, &rows, &y, &sw))
                / 2e-5;
            worst_grad = worst_grad.max((gw[i] - fd).abs() / gw[i].abs().max(fd.abs()).max(1e-6));
        }
    }
    check(worst_grad <= 1e-5, &mut fails, "gradient");

    let rows: Vec<Vec<f64>> = (0..97)
        .map(|i| (0..3).map(|_| if i % 2 == 0 { -0.7 } else { 0.7 } + rng.sample::<f64, _>(StandardNormal)).collect())
        .collect();
    let y: Vec<usize> = (0..97).map(|i| i % 2).collect();
    let x = Matrix::from_rows(&rows).unwrap();
    let full = CurriculumSchedule { q0: 1.0, ..CurriculumSchedule::default() };
    let (pa, _) = train(&x, &y, 2, &CurriculumSchedule::disabled(), 1e-4).unwrap();
    let (pb, _) = train(&x, &y, 2, &full, 1e-4).unwrap();
    let bits = |p: &DecoderParams| p.weights.iter().chain(&p.bias).map(|v| v.to_bits()).collect::<Vec<_>>();
    check(bits(&pa) == bits(&pb), &mut fails, "off == q0=1");

    let sched = CurriculumSchedule::default();
    let (_, trace) = train(&x, &y, 2, &sched, 1e-4).unwrap();
    let floor_ok = trace
        .epochs
        .iter()
        .enumerate()
        .all(|(t, r)| r.kept >= (sched.inclusion(t) * 97.0).ceil() as usize);
    check(trace.epochs.len() == 300 && floor_ok, &mut fails, "active floor");

    let mut p = DecoderParams::zeros(3, 2, 1e-4);
    let w = vec![1.0; 97];
    let mut prev = objective(&p, &x, &y, &w).unwrap();
    let mut rises = 0;
    for _ in 0..300 {
        let (gw, gb) = gradient(&p, &x, &y, &w).unwrap();
        p.weights.iter_mut().zip(&gw).for_each(|(v, g)| *v -= 0.01 * g);
        p.bias.iter_mut().zip(&gb).for_each(|(v, g)| *v -= 0.01 * g);
        let cur = objective(&p, &x, &y, &w).unwrap();
        if cur > prev + 1e-12 {
            rises += 1;
        }
        prev = cur;
    }
    check(rises == 0, &mut fails, "convex descent");
    verdict(fails, format!("worst gradient rel err {worst_grad:.1e}, objective rises {rises}/300"))
}

fn write_dataset(root: &Path, cfg: &SynthConfig) {
    for rec in synth_dataset(cfg).unwrap() {
        let m = &rec.manifest;
        write_recording(&rec, &root.join(&m.subject_id).join(&m.session_id)).unwrap();
    }
}

fn end_to_end() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    write_dataset(dir.path(), &SynthConfig::default());
    let cfg = ExperimentConfig {
        dataset_root: dir.path().to_path_buf(),
        train_session: "ses-01".into(),
        test_sessions: vec!["ses-02".into()],
        seeds: (0..20).collect(),
        ..ExperimentConfig::default()
    };
    let start = Instant::now();
    let report = match run_protocol(&cfg, 1) {
        Ok(r) => r,
        Err(e) => return Verdict { pass: false, detail: format!("protocol error: {e}") },
    };
    let elapsed = start.elapsed();
    let removed: Vec<f64> = report.filtering.iter().filter_map(|f| f.outcome.distracted_removed_fit).collect();
    let removal = removed.iter().sum::<f64>() / removed.len().max(1) as f64;

    let mut fails = Vec::new();
    check(report.mean_diff >= 0.05, &mut fails, "gain >= +5 pp");
    check(report.p_value < 0.05, &mut fails, "p < 0.05");
    check(removal >= 0.8, &mut fails, "removal >= 80%");
    check(elapsed < Duration::from_secs(120), &mut fails, "runtime < 2 min");
    verdict(
        fails,
        format!(
            "baseline {:.4}, proposed {:.4}, gain {:+.4}, p {:.4}, distracted removed {:.3}, {:.1}s",
            report.baseline.mean,
            report.proposed.mean,
            report.mean_diff,
            report.p_value,
            removal,
            elapsed.as_secs_f64()
        ),
    )
}

fn report_conventions() -> Verdict {
    let mut fails = Vec::new();
    let stars = [(0.0009, "***"), (0.001, "**"), (0.004, "**"), (0.01, "*"), (0.049, "*"), (0.05, ""), (0.5, "")];
    check(stars.iter().all(|(p, s)| significance_stars(*p) == *s), &mut fails, "stars");
    let p = paired_sign_flip_test(&[1.0, 1.0, 1.0, 1.0]).unwrap();
    check(p == 0.125, &mut fails, "p([1,1,1,1])");

    let dir = tempfile::tempdir().unwrap();
    write_dataset(dir.path(), &SynthConfig { n_subjects: 2, n_trials: 20, ..SynthConfig::default() });
    let cfg = ExperimentConfig {
        dataset_root: dir.path().to_path_buf(),
        train_session: "ses-01".into(),
        test_sessions: vec!["ses-02".into()],
        seeds: vec![0, 1],
        ..ExperimentConfig::default()
    };
    let out_dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for (i, jobs) in [1, 4].into_iter().enumerate() {
        let out = out_dir.path().join(format!("run{i}"));
        emit_report(&run_protocol(&cfg, jobs).unwrap(), &out).unwrap();
        outputs.push(std::fs::read(out.join(REPORT_JSON)).unwrap());
    }
    check(outputs[0] == outputs[1], &mut fails, "byte-identical report.json");
    verdict(fails, format!("p([1,1,1,1]) = {p}, report.json {} bytes", outputs[0].len()))
}

fn main() {
    let criteria: [(&str, Duration, fn() -> Verdict); 5] = [
        ("DSP oracle suite", Duration::from_secs(10), dsp_suite),
        ("attention index and Tukey fence oracle suite", Duration::from_secs(10), attention_suite),
        ("decoder gradient and curriculum suite", Duration::from_secs(30), curriculum_suite),
        ("end-to-end synthetic recovery", Duration::from_secs(120), end_to_end),
        ("report conventions", Duration::MAX, report_conventions),
    ];
    let mut failed = 0;
    for (name, budget, run) in criteria {
        let start = Instant::now();
        let mut v = run();
        let took = start.elapsed();
        if took >= budget {
            v.pass = false;
            v.detail.push_str(&format!("; over time budget {budget:?}"));
        }
        failed += usize::from(!v.pass);
        println!("{} {name} ({:.2}s): {}", if v.pass { "PASS" } else { "FAIL" }, took.as_secs_f64(), v.detail);
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
