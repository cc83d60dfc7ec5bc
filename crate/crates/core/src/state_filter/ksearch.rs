use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::attention::{attention_index, profile_from_scores, FilterUnit};
use crate::error::{Error, Result};
use crate::signal::{EpochSet, Partition};

pub const DEFAULT_K_GRID: [f64; 6] = [0.5, 1.0, 1.5, 2.0, 2.5, 3.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KSearchConfig {
    pub grid: Vec<f64>,
    pub val_fraction: f64,
    pub seed: u64,
    pub unit: FilterUnit,
}

impl Default for KSearchConfig {
    fn default() -> Self {
        KSearchConfig {
            grid: DEFAULT_K_GRID.to_vec(),
            val_fraction: 0.2,
            seed: 0,
            unit: FilterUnit::Window,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KSearchResult {
    pub grid: Vec<f64>,
    pub val_accuracy: Vec<f64>,
    pub k_selected: f64,
    pub val_fraction: f64,
    pub seed: u64,
    /// Epoch indices (into the searched set) used for fitting.
    pub fit_epochs: Vec<usize>,
    pub val_epochs: Vec<usize>,
    /// Mask over `fit_epochs` at `k_selected`.
    pub fit_mask: Vec<bool>,
}

/// Stratified trial-level split into (fit, validation) epoch indices.
pub fn split_trials(epochs: &EpochSet, val_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (trial, label) in epochs.trials() {
        by_class.entry(label).or_default().push(trial);
    }
    if by_class.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "{} class(es) in training data",
            by_class.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut val_trials = std::collections::BTreeSet::new();
    for (label, trials) in &mut by_class {
        trials.sort_unstable();
        trials.shuffle(&mut rng);
        let n_val = (val_fraction * trials.len() as f64).round() as usize;
        if n_val == 0 || n_val == trials.len() {
            return Err(Error::InsufficientData(format!(
                "class {label} has {} trial(s); cannot place it on both sides of the split",
                trials.len()
            )));
        }
        val_trials.extend(trials[..n_val].iter().copied());
    }
    let (val, fit): (Vec<usize>, Vec<usize>) =
        (0..epochs.len()).partition(|&i| val_trials.contains(&epochs.source_trial[i]));
    Ok((fit, val))
}

/// Picks the subject-specific fence multiplier `k` by validation accuracy.
///
/// For every candidate the fence is computed on the fit subset only, the fit
/// subset is masked and handed to `train_fn`, and the resulting model is
/// scored by `eval_fn` on the unmasked validation subset. Ties go to the
/// largest `k`.
pub fn select_k<M, T, E>(
    train: &EpochSet,
    cfg: &KSearchConfig,
    mut train_fn: T,
    mut eval_fn: E,
) -> Result<KSearchResult>
where
    T: FnMut(&EpochSet) -> Result<M>,
    E: FnMut(&M, &EpochSet) -> Result<f64>,
{
    if train.partition == Partition::Evaluation {
        return Err(Error::Protocol("k search invoked on evaluation data".into()));
    }
    if cfg.grid.is_empty() {
        return Err(Error::GridEmpty);
    }
    if cfg.grid.iter().any(|k| !(k.is_finite() && *k >= 0.0)) || cfg.grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(
            "k grid must be finite, non-negative and strictly ascending".into(),
        ));
    }
    if !(cfg.val_fraction > 0.0 && cfg.val_fraction < 0.5) {
        return Err(Error::InvalidArgument(format!(
            "val_fraction {} outside (0, 0.5)",
            cfg.val_fraction
        )));
    }

    let (fit_idx, val_idx) = split_trials(train, cfg.val_fraction, cfg.seed)?;
    let fit = train.subset(&fit_idx);
    let val = train.subset(&val_idx);
    let fit_atr = attention_index(&fit)?;

    let mut val_accuracy = Vec::with_capacity(cfg.grid.len());
    let mut best: Option<(usize, f64, Vec<bool>)> = None;
    for (i, &k) in cfg.grid.iter().enumerate() {
        let profile = profile_from_scores(&fit_atr, &fit.source_trial, k, cfg.unit)?;
        let model = train_fn(&fit.subset(&profile.kept_indices()))?;
        let acc = eval_fn(&model, &val)?;
        val_accuracy.push(acc);
        if best.as_ref().is_none_or(|(_, b, _)| acc >= *b) {
            best = Some((i, acc, profile.mask));
        }
    }
    let (best_i, _, fit_mask) = best.expect("grid is nonempty");
    Ok(KSearchResult {
        grid: cfg.grid.clone(),
        val_accuracy,
        k_selected: cfg.grid[best_i],
        val_fraction: cfg.val_fraction,
        seed: cfg.seed,
        fit_epochs: fit_idx,
        val_epochs: val_idx,
        fit_mask,
    })
}
