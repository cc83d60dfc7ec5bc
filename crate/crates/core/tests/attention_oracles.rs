mod common;

use common::{band_energy_oracle, epoch_set, sine, tukey_oracle};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statefilter::signal::EpochSet;
use statefilter::state_filter::{
    apply_mask, attention_index, profile_from_scores, quantile, select_k, tukey_mask, FilterUnit,
    KSearchConfig,
};
use statefilter::Error;

fn mix(a10: f64, a6: f64) -> Vec<f64> {
    sine(10.0, a10, 250.0, 500)
        .iter()
        .zip(sine(6.0, a6, 250.0, 500))
        .map(|(p, q)| p + q)
        .collect()
}

#[test]
fn exact_bin_ratios() {
    let e = epoch_set(vec![vec![mix(1.0, 1.0)], vec![mix(2.0, 1.0)]], vec![0, 1], 250.0);
    let atr = attention_index(&e).unwrap();
    assert!((atr[0] - 1.0).abs() < 1e-6, "{}", atr[0]);
    assert!((atr[1] - 4.0).abs() < 1e-6, "{}", atr[1]);

    // against the DFT oracle, summed over channels
    let x = mix(1.3, 0.7);
    let y = mix(0.2, 2.1);
    let e = epoch_set(vec![vec![x.clone(), y.clone()]], vec![0], 250.0);
    let expected = (band_energy_oracle(&x, 250.0, 8.0, 13.0) + band_energy_oracle(&y, 250.0, 8.0, 13.0))
        / (band_energy_oracle(&x, 250.0, 4.0, 8.0) + band_energy_oracle(&y, 250.0, 4.0, 8.0));
    let got = attention_index(&e).unwrap()[0];
    assert!((got - expected).abs() < 1e-9 * expected);
}

#[test]
fn theta_free_epoch_is_degenerate() {
    let e = epoch_set(vec![vec![mix(1.0, 1.0)], vec![sine(10.0, 1.0, 250.0, 500)]], vec![0, 1], 250.0);
    assert!(matches!(attention_index(&e), Err(Error::DegenerateSpectrum { epoch: 1 })));
}

#[test]
fn quantile_and_fence_examples() {
    assert_eq!(quantile(&[1.0, 2.0, 3.0, 4.0, 100.0], 0.25).unwrap(), 2.0);
    assert_eq!(quantile(&[1.0, 2.0, 3.0, 4.0, 100.0], 0.75).unwrap(), 4.0);
    assert_eq!(quantile(&[0.0, 1.0, 2.0, 3.0], 0.75).unwrap(), 2.25);
    assert_eq!(quantile(&[7.0], 0.3).unwrap(), 7.0);
    let p = tukey_mask(&[1.0, 2.0, 3.0, 4.0, 100.0], 1.5).unwrap();
    assert_eq!(p.fence_upper, 7.0);
    assert_eq!(p.mask, vec![true, true, true, true, false]);
    let p = tukey_mask(&[0.0, 1.0, 2.0, 3.0], 1.0).unwrap();
    assert_eq!(p.fence_upper, 3.75);
    assert!(p.mask.iter().all(|&m| m));
}

#[test]
fn tukey_matches_brute_force_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..1000 {
        let n = rng.random_range(1..=12);
        // coarse values so ties and exact-fence hits actually occur
        let xs: Vec<f64> = (0..n).map(|_| rng.random_range(0..40) as f64 / 4.0).collect();
        let k = [0.0, 0.5, 1.0, 1.5, 2.0, 3.0][rng.random_range(0..6)];
        let (fence, mask) = tukey_oracle(&xs, k);
        let p = tukey_mask(&xs, k).unwrap();
        assert!((p.fence_upper - fence).abs() <= 1e-12 * fence.abs().max(1.0), "{xs:?} k={k}");
        assert_eq!(p.mask, mask, "{xs:?} k={k}");
        assert_eq!(p.n_kept, mask.iter().filter(|&&m| m).count());
        assert_eq!(p.n_total, n);
    }
}

#[test]
fn mask_is_monotone_in_k() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..100 {
        let n = rng.random_range(1..=40);
        let xs: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..10.0f64).powi(2)).collect();
        let k1 = rng.random_range(0.0..3.0);
        let k2 = k1 + rng.random_range(0.0..3.0);
        let m1 = tukey_mask(&xs, k1).unwrap().mask;
        let m2 = tukey_mask(&xs, k2).unwrap().mask;
        assert!(m1.iter().zip(&m2).all(|(a, b)| !a || *b));
    }
}

/// Removing the largest score shifts Q3 down by interpolation, so the keep
/// rate of the remainder can fall.
#[test]
fn dropping_the_max_can_lower_keep_rate() {
    let all = tukey_mask(&[0.0, 0.0, 0.0, 10.0, 10.0], 0.0).unwrap();
    assert_eq!((all.n_kept, all.n_total), (5, 5));
    let rest = tukey_mask(&[0.0, 0.0, 0.0, 10.0], 0.0).unwrap();
    assert_eq!(rest.fence_upper, 2.5);
    assert_eq!((rest.n_kept, rest.n_total), (3, 4));
}

#[test]
fn trial_unit_masks_whole_trials() {
    let atr = [1.0, 1.2, 1.1, 0.9, 9.0, 11.0, 1.0, 1.05];
    let trials = [0, 0, 1, 1, 2, 2, 3, 3];
    let p = profile_from_scores(&atr, &trials, 0.5, FilterUnit::Trial).unwrap();
    assert_eq!(p.mask, vec![true, true, true, true, false, false, true, true]);
    assert_eq!(p.atr[4], 10.0);
}

#[test]
fn apply_mask_keeps_order_and_provenance() {
    let e = epoch_set(
        vec![vec![mix(1.0, 1.0)], vec![mix(2.0, 1.0)], vec![mix(3.0, 1.0)]],
        vec![0, 1, 0],
        250.0,
    );
    let mut p = tukey_mask(&[1.0, 2.0, 3.0], 10.0).unwrap();
    assert_eq!(apply_mask(&e, &p).unwrap(), e);
    p.mask = vec![true, false, true];
    let kept = apply_mask(&e, &p).unwrap();
    assert_eq!(kept.source_trial, vec![0, 2]);
    assert_eq!(kept.epoch(1), e.epoch(2));
    let long = tukey_mask(&[1.0; 5], 1.0).unwrap();
    assert!(matches!(apply_mask(&e, &long), Err(Error::LengthMismatch { .. })));
}

fn toy_search_set() -> EpochSet {
    let epochs = (0..20).map(|i| vec![mix(1.0 + i as f64 * 0.1, 1.0)]).collect();
    let labels = (0..20).map(|i| i % 2).collect();
    epoch_set(epochs, labels, 250.0)
}

#[test]
fn singleton_grid_and_ties() {
    let e = toy_search_set();
    let cfg = KSearchConfig {
        grid: vec![1.5],
        ..KSearchConfig::default()
    };
    let r = select_k(&e, &cfg, |_| Ok(()), |_, _| Ok(0.3)).unwrap();
    assert_eq!(r.k_selected, 1.5);
    let r = select_k(&e, &KSearchConfig::default(), |_| Ok(()), |_, _| Ok(0.5)).unwrap();
    assert_eq!(r.k_selected, 3.0);
    let empty = KSearchConfig {
        grid: vec![],
        ..KSearchConfig::default()
    };
    assert!(matches!(select_k(&e, &empty, |_| Ok(()), |_, _| Ok(0.5)), Err(Error::GridEmpty)));
}

#[test]
fn search_is_deterministic_and_leak_free() {
    let e = toy_search_set();
    let cfg = KSearchConfig::default();
    let a = select_k(&e, &cfg, |fit| Ok(fit.len()), |n, _| Ok(*n as f64)).unwrap();
    let b = select_k(&e, &cfg, |fit| Ok(fit.len()), |n, _| Ok(*n as f64)).unwrap();
    assert_eq!(a, b);
    let fit: std::collections::BTreeSet<_> = a.fit_epochs.iter().map(|&i| e.source_trial[i]).collect();
    assert!(a.val_epochs.iter().all(|&i| !fit.contains(&e.source_trial[i])));
}

proptest! {
    #[test]
    fn ratio_is_scale_invariant(a10 in 0.0f64..3.0, a6 in 0.1f64..3.0, c in 1e-3f64..1e3) {
        let x = mix(a10, a6);
        let scaled: Vec<f64> = x.iter().map(|v| v * c).collect();
        let base = attention_index(&epoch_set(vec![vec![x]], vec![0], 250.0)).unwrap()[0];
        let s = attention_index(&epoch_set(vec![vec![scaled]], vec![0], 250.0)).unwrap()[0];
        prop_assert!((base - s).abs() <= 1e-9 * base.max(1.0));
    }

    #[test]
    fn values_up_to_q3_always_survive(xs in prop::collection::vec(0.0f64..100.0, 1..30), k in 0.0f64..5.0) {
        let p = tukey_mask(&xs, k).unwrap();
        for (x, m) in xs.iter().zip(&p.mask) {
            if *x <= p.q3 {
                prop_assert!(*m);
            }
        }
        prop_assert!(p.q1 <= p.q3);
        prop_assert!(p.n_kept >= 1);
    }
}
