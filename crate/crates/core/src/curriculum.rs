//! Multinomial logistic decoder trained under a loss-thresholded curriculum.
//!
//! Each training epoch computes the per-sample cross-entropy `L_i` with the
//! current parameters, keeps the samples with `L_i <= lambda_t`, and takes one
//! full-batch gradient step on the kept samples. `lambda_t` is the `q(t)`
//! quantile of the current losses, where `q(t)` ramps linearly from `q0` to 1.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::state_filter::quantile_sorted;

/// Softmax decoder parameters. `weights` is row-major `[feature][class]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecoderParams {
    pub n_features: usize,
    pub n_classes: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub l2: f64,
}

impl DecoderParams {
    pub fn zeros(n_features: usize, n_classes: usize, l2: f64) -> Self {
        DecoderParams {
            n_features,
            n_classes,
            weights: vec![0.0; n_features * n_classes],
            bias: vec![0.0; n_classes],
            l2,
        }
    }

    fn check(&self, features: &Matrix) -> Result<()> {
        if features.cols() != self.n_features {
            return Err(Error::DimMismatch {
                expected: self.n_features,
                got: features.cols(),
            });
        }
        if self.weights.len() != self.n_features * self.n_classes || self.bias.len() != self.n_classes {
            return Err(Error::DimMismatch {
                expected: self.n_features * self.n_classes,
                got: self.weights.len(),
            });
        }
        Ok(())
    }

    fn logits_into(&self, x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.bias);
        for (f, &xf) in x.iter().enumerate() {
            let row = &self.weights[f * self.n_classes..(f + 1) * self.n_classes];
            for (o, &w) in out.iter_mut().zip(row) {
                *o += xf * w;
            }
        }
    }

    /// Row-wise log-softmax of the affine map.
    fn log_proba(&self, features: &Matrix) -> Result<Matrix> {
        self.check(features)?;
        let c = self.n_classes;
        let mut out = Matrix::zeros(features.rows(), c);
        for i in 0..features.rows() {
            let row = out.row_mut(i);
            self.logits_into(features.row(i), row);
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let log_sum = row.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
            row.iter_mut().for_each(|z| *z = (*z - max) - log_sum);
        }
        Ok(out)
    }

    /// Index of the largest logit per row; ties go to the lowest class.
    pub fn predict(&self, features: &Matrix) -> Result<Vec<usize>> {
        self.check(features)?;
        let mut z = vec![0.0; self.n_classes];
        Ok(features
            .iter_rows()
            .map(|x| {
                self.logits_into(x, &mut z);
                argmax(&z)
            })
            .collect())
    }
}

pub(crate) fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in xs.iter().enumerate().skip(1) {
        if v > xs[best] {
            best = i;
        }
    }
    best
}

/// Softmax class probabilities, computed with max-subtraction.
pub fn predict_proba(params: &DecoderParams, features: &Matrix) -> Result<Matrix> {
    let mut p = params.log_proba(features)?;
    p.as_mut_slice().iter_mut().for_each(|v| *v = v.exp());
    Ok(p)
}

fn check_labels(labels: &[usize], rows: usize, n_classes: usize) -> Result<()> {
    if labels.len() != rows {
        return Err(Error::DimMismatch {
            expected: rows,
            got: labels.len(),
        });
    }
    if let Some(&bad) = labels.iter().find(|&&y| y >= n_classes) {
        return Err(Error::InvalidArgument(format!("label {bad} >= n_classes {n_classes}")));
    }
    Ok(())
}

/// Cross-entropy `-ln p_i[y_i]` per sample, without the L2 penalty.
pub fn per_sample_loss(params: &DecoderParams, features: &Matrix, labels: &[usize]) -> Result<Vec<f64>> {
    check_labels(labels, features.rows(), params.n_classes)?;
    let lp = params.log_proba(features)?;
    Ok(labels.iter().enumerate().map(|(i, &y)| -lp.row(i)[y]).collect())
}

/// Weighted objective `sum(w L) / sum(w) + l2 * ||W||_F^2`.
pub fn objective(params: &DecoderParams, features: &Matrix, labels: &[usize], weights: &[f64]) -> Result<f64> {
    let losses = per_sample_loss(params, features, labels)?;
    let (num, den) = weighted_sums(&losses, weights)?;
    let reg: f64 = params.weights.iter().map(|w| w * w).sum();
    Ok(num / den + params.l2 * reg)
}

fn weighted_sums(losses: &[f64], weights: &[f64]) -> Result<(f64, f64)> {
    if weights.len() != losses.len() {
        return Err(Error::DimMismatch {
            expected: losses.len(),
            got: weights.len(),
        });
    }
    let den: f64 = weights.iter().sum();
    if den <= 0.0 {
        return Err(Error::InvalidArgument("sample weights sum to zero".into()));
    }
    let num = losses.iter().zip(weights).map(|(l, w)| l * w).sum();
    Ok((num, den))
}

/// Analytic gradient of [`objective`]: `(dJ/dW row-major, dJ/db)`.
pub fn gradient(
    params: &DecoderParams,
    features: &Matrix,
    labels: &[usize],
    weights: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    check_labels(labels, features.rows(), params.n_classes)?;
    let lp = params.log_proba(features)?;
    gradient_from_log_proba(params, features, labels, weights, &lp)
}

fn gradient_from_log_proba(
    params: &DecoderParams,
    features: &Matrix,
    labels: &[usize],
    weights: &[f64],
    log_proba: &Matrix,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if weights.len() != labels.len() {
        return Err(Error::DimMismatch {
            expected: labels.len(),
            got: weights.len(),
        });
    }
    let c = params.n_classes;
    let den: f64 = weights.iter().sum();
    if den <= 0.0 {
        return Err(Error::InvalidArgument("sample weights sum to zero".into()));
    }
    let mut gw = vec![0.0; params.weights.len()];
    let mut gb = vec![0.0; c];
    let mut resid = vec![0.0; c];
    for (i, (&y, &w)) in labels.iter().zip(weights).enumerate() {
        if w == 0.0 {
            continue;
        }
        for (k, r) in resid.iter_mut().enumerate() {
            *r = w * (log_proba.row(i)[k].exp() - if k == y { 1.0 } else { 0.0 });
        }
        for (f, &xf) in features.row(i).iter().enumerate() {
            let g = &mut gw[f * c..(f + 1) * c];
            for (gk, &rk) in g.iter_mut().zip(&resid) {
                *gk += xf * rk;
            }
        }
        for (gk, &rk) in gb.iter_mut().zip(&resid) {
            *gk += rk;
        }
    }
    for (g, &w) in gw.iter_mut().zip(&params.weights) {
        *g = *g / den + 2.0 * params.l2 * w;
    }
    gb.iter_mut().for_each(|g| *g /= den);
    Ok((gw, gb))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CurriculumSchedule {
    pub enabled: bool,
    /// Fraction of samples active at the first epoch.
    pub q0: f64,
    /// Fraction of the run after which every sample is active.
    pub ramp_frac: f64,
    pub epochs: usize,
    pub lr: f64,
    /// Recorded for provenance; training is deterministic without it.
    pub seed: u64,
}

impl Default for CurriculumSchedule {
    fn default() -> Self {
        CurriculumSchedule {
            enabled: true,
            q0: 0.5,
            ramp_frac: 0.5,
            epochs: 300,
            lr: 0.1,
            seed: 0,
        }
    }
}

impl CurriculumSchedule {
    pub fn disabled() -> Self {
        CurriculumSchedule {
            enabled: false,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.q0 > 0.0 && self.q0 <= 1.0) {
            return Err(Error::InvalidArgument(format!("q0 {} outside (0, 1]", self.q0)));
        }
        if !(self.ramp_frac > 0.0 && self.ramp_frac <= 1.0) {
            return Err(Error::InvalidArgument(format!("ramp_frac {} outside (0, 1]", self.ramp_frac)));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::InvalidArgument(format!("lr {} must be positive", self.lr)));
        }
        Ok(())
    }

    /// Active fraction `q(t) = min(1, q0 + (1 - q0) t / (ramp_frac * epochs))`.
    pub fn inclusion(&self, t: usize) -> f64 {
        let ramp = self.ramp_frac * self.epochs as f64;
        if ramp <= 0.0 {
            return 1.0;
        }
        (self.q0 + (1.0 - self.q0) * t as f64 / ramp).min(1.0)
    }
}

/// Loss threshold and sample weights for epoch `t`.
///
/// `lambda_t` is the linear-interpolation `q(t)` quantile of the losses,
/// raised to the `ceil(q(t) n)`-th smallest loss when interpolation falls
/// below it, so at least `ceil(q(t) n)` samples stay active. Samples with
/// `L_i <= lambda_t` are kept. A disabled schedule keeps everything and
/// reports `lambda_t = +inf`.
pub fn lambda_threshold(losses: &[f64], t: usize, sched: &CurriculumSchedule) -> Result<(f64, Vec<bool>)> {
    if losses.is_empty() {
        return Err(Error::EmptyInput);
    }
    if losses.iter().any(|l| !l.is_finite()) {
        return Err(Error::NonFinite("per-sample losses"));
    }
    if !sched.enabled {
        return Ok((f64::INFINITY, vec![true; losses.len()]));
    }
    let q = sched.inclusion(t);
    let mut sorted = losses.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let min_kept = ((q * n as f64).ceil() as usize).clamp(1, n);
    let lambda = quantile_sorted(&sorted, q).max(sorted[min_kept - 1]);
    Ok((lambda, losses.iter().map(|&l| l <= lambda).collect()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub mean_active_loss: f64,
    pub kept: usize,
    pub inclusion: f64,
    pub lambda: f64,
    pub accuracy: f64,
}

/// Per-epoch history of a training run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainTrace {
    pub epochs: Vec<EpochRecord>,
}

/// Full-batch gradient descent from all-zero parameters on the curriculum
/// objective. Bitwise deterministic.
pub fn train(
    features: &Matrix,
    labels: &[usize],
    n_classes: usize,
    sched: &CurriculumSchedule,
    l2: f64,
) -> Result<(DecoderParams, TrainTrace)> {
    sched.validate()?;
    if !(l2 >= 0.0 && l2.is_finite()) {
        return Err(Error::InvalidArgument(format!("l2 {l2} must be >= 0")));
    }
    check_labels(labels, features.rows(), n_classes)?;
    let mut present = vec![false; n_classes];
    labels.iter().for_each(|&y| present[y] = true);
    if present.iter().filter(|&&p| p).count() < 2 {
        return Err(Error::DegenerateLabels);
    }
    if features.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("features"));
    }

    let mut params = DecoderParams::zeros(features.cols(), n_classes, l2);
    let mut trace = TrainTrace::default();
    let n = labels.len() as f64;
    for t in 0..sched.epochs {
        let lp = params.log_proba(features)?;
        let losses: Vec<f64> = labels.iter().enumerate().map(|(i, &y)| -lp.row(i)[y]).collect();
        if losses.iter().any(|l| !l.is_finite()) {
            return Err(Error::NonFiniteLoss { epoch: t });
        }
        let (lambda, keep) = lambda_threshold(&losses, t, sched)?;
        let weights: Vec<f64> = keep.iter().map(|&k| if k { 1.0 } else { 0.0 }).collect();
        let correct = labels
            .iter()
            .enumerate()
            .filter(|&(i, &y)| argmax(lp.row(i)) == y)
            .count();
        let kept = keep.iter().filter(|&&k| k).count();
        let active_loss: f64 = losses.iter().zip(&keep).filter(|(_, &k)| k).map(|(l, _)| l).sum();
        trace.epochs.push(EpochRecord {
            mean_active_loss: active_loss / kept as f64,
            kept,
            inclusion: if sched.enabled { sched.inclusion(t) } else { 1.0 },
            lambda,
            accuracy: correct as f64 / n,
        });

        let (gw, gb) = gradient_from_log_proba(&params, features, labels, &weights, &lp)?;
        for (w, g) in params.weights.iter_mut().zip(&gw) {
            *w -= sched.lr * g;
        }
        for (b, g) in params.bias.iter_mut().zip(&gb) {
            *b -= sched.lr * g;
        }
        if params.weights.iter().chain(&params.bias).any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteLoss { epoch: t });
        }
    }
    Ok((params, trace))
}

pub fn accuracy(params: &DecoderParams, features: &Matrix, labels: &[usize]) -> Result<f64> {
    check_labels(labels, features.rows(), params.n_classes)?;
    if labels.is_empty() {
        return Err(Error::EmptyInput);
    }
    let pred = params.predict(features)?;
    let hits = pred.iter().zip(labels).filter(|(p, y)| p == y).count();
    Ok(hits as f64 / labels.len() as f64)
}
