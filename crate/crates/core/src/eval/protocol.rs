use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::stats::{mean, paired_sign_flip_test, population_std, significance_stars};
use crate::curriculum::CurriculumSchedule;
use crate::eeg_io::{list_subdirs, read_recording};
use crate::error::{Error, Result};
use crate::pipeline::{fit_decoder, score_predictions, Decoder, ScoreUnit};
use crate::signal::{preprocess, BandTable, EpochSet, Partition, PreprocessConfig};
use crate::state_filter::{
    apply_mask, attention_profile, select_k, FilterUnit, KSearchConfig, DEFAULT_K_GRID,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Directory holding `<subject>/<session>/` EEGB sessions.
    pub dataset_root: PathBuf,
    /// Empty means every subject directory under `dataset_root`.
    pub subjects: Vec<String>,
    pub train_session: String,
    pub test_sessions: Vec<String>,
    pub preprocess: PreprocessConfig,
    pub k_grid: Vec<f64>,
    pub val_fraction: f64,
    pub curriculum: CurriculumSchedule,
    pub l2: f64,
    pub unit: FilterUnit,
    pub score_unit: ScoreUnit,
    pub seeds: Vec<u64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            dataset_root: PathBuf::new(),
            subjects: Vec::new(),
            train_session: String::new(),
            test_sessions: Vec::new(),
            preprocess: PreprocessConfig::default(),
            k_grid: DEFAULT_K_GRID.to_vec(),
            val_fraction: 0.2,
            curriculum: CurriculumSchedule::default(),
            l2: 1e-4,
            unit: FilterUnit::Window,
            score_unit: ScoreUnit::Window,
            seeds: vec![0],
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.train_session.is_empty() {
            return Err(Error::Protocol("train_session is not set".into()));
        }
        if self.test_sessions.is_empty() {
            return Err(Error::Protocol("no test sessions".into()));
        }
        if self.test_sessions.contains(&self.train_session) {
            return Err(Error::Protocol(format!(
                "session {} is used for both training and testing",
                self.train_session
            )));
        }
        if let Some(s) = self.test_sessions.iter().find(|s| **s <= self.train_session) {
            return Err(Error::Protocol(format!(
                "test session {s} does not follow training session {}",
                self.train_session
            )));
        }
        if self.seeds.is_empty() {
            return Err(Error::Protocol("no seeds".into()));
        }
        self.curriculum.validate()
    }

    /// Reads a JSON config; a relative `dataset_root` is resolved against the
    /// config file's directory.
    pub fn read_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: ExperimentConfig = serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
        if cfg.dataset_root.is_relative() {
            if let Some(dir) = path.parent() {
                cfg.dataset_root = dir.join(&cfg.dataset_root);
            }
        }
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodKind {
    Baseline,
    Proposed,
}

/// Anything that turns epochs into class predictions.
pub trait Predictor: Send + Sync {
    fn predict(&self, epochs: &EpochSet) -> Result<Vec<usize>>;
}

impl Predictor for Decoder {
    fn predict(&self, epochs: &EpochSet) -> Result<Vec<usize>> {
        Decoder::predict(self, epochs)
    }
}

/// What the attention filter did during a proposed-method fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterOutcome {
    pub k_selected: f64,
    pub val_accuracy: Vec<f64>,
    pub n_kept: usize,
    pub n_total: usize,
    /// Share of ground-truth distracted fit epochs removed at `k_selected`,
    /// when the data carries ground truth.
    pub distracted_removed_fit: Option<f64>,
}

/// A training recipe evaluated by the protocol.
pub trait Method: Sync {
    fn fit(&self, train: &EpochSet, seed: u64) -> Result<(Box<dyn Predictor>, Option<FilterOutcome>)>;
}

/// Decoder trained on every training epoch, curriculum off.
pub struct Baseline<'a> {
    pub cfg: &'a ExperimentConfig,
    pub bands: BandTable,
}

impl Method for Baseline<'_> {
    fn fit(&self, train: &EpochSet, _seed: u64) -> Result<(Box<dyn Predictor>, Option<FilterOutcome>)> {
        let sched = CurriculumSchedule {
            enabled: false,
            ..self.cfg.curriculum.clone()
        };
        let (decoder, _) = fit_decoder(train, &self.bands, &self.cfg.preprocess, &sched, self.cfg.l2)?;
        Ok((Box::new(decoder), None))
    }
}

/// Per-subject fence search, attention mask, then curriculum training.
pub struct Proposed<'a> {
    pub cfg: &'a ExperimentConfig,
    pub bands: BandTable,
}

impl Method for Proposed<'_> {
    fn fit(&self, train: &EpochSet, seed: u64) -> Result<(Box<dyn Predictor>, Option<FilterOutcome>)> {
        let cfg = self.cfg;
        let sched = CurriculumSchedule {
            enabled: true,
            seed,
            ..cfg.curriculum.clone()
        };
        let search = KSearchConfig {
            grid: cfg.k_grid.clone(),
            val_fraction: cfg.val_fraction,
            seed,
            unit: cfg.unit,
        };
        let result = select_k(
            train,
            &search,
            |fit| fit_decoder(fit, &self.bands, &cfg.preprocess, &sched, cfg.l2).map(|(d, _)| d),
            |model, val| model.score(val, ScoreUnit::Window),
        )?;

        let distracted_removed_fit = {
            let flags: Option<Vec<bool>> = result
                .fit_epochs
                .iter()
                .map(|&i| train.is_distracted(i))
                .collect();
            flags.and_then(|d| {
                let total = d.iter().filter(|&&x| x).count();
                let removed = d
                    .iter()
                    .zip(&result.fit_mask)
                    .filter(|(&dis, &keep)| dis && !keep)
                    .count();
                (total > 0).then(|| removed as f64 / total as f64)
            })
        };

        let profile = attention_profile(train, result.k_selected, cfg.unit)?;
        let kept = apply_mask(train, &profile)?;
        let (decoder, _) = fit_decoder(&kept, &self.bands, &cfg.preprocess, &sched, cfg.l2)?;
        let outcome = FilterOutcome {
            k_selected: result.k_selected,
            val_accuracy: result.val_accuracy,
            n_kept: profile.n_kept,
            n_total: profile.n_total,
            distracted_removed_fit,
        };
        Ok((Box::new(decoder), Some(outcome)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyRecord {
    pub subject: String,
    pub seed: u64,
    pub test_session: String,
    pub method: MethodKind,
    pub accuracy: f64,
    pub n_test_epochs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterRecord {
    pub subject: String,
    pub seed: u64,
    #[serde(flatten)]
    pub outcome: FilterOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: MethodKind,
    /// Per subject, averaged over seeds and test sessions; same order as
    /// [`EvalReport::subjects`].
    pub per_subject: Vec<f64>,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSummary {
    pub test_session: String,
    pub baseline_mean: f64,
    pub proposed_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub config: ExperimentConfig,
    pub subjects: Vec<String>,
    pub records: Vec<AccuracyRecord>,
    pub filtering: Vec<FilterRecord>,
    pub baseline: MethodSummary,
    pub proposed: MethodSummary,
    pub per_session: Vec<SessionSummary>,
    /// Proposed minus baseline per subject.
    pub diffs: Vec<f64>,
    pub mean_diff: f64,
    pub p_value: f64,
    pub stars: String,
}

struct SubjectData {
    subject: String,
    train: EpochSet,
    tests: Vec<EpochSet>,
}

fn load_subject(cfg: &ExperimentConfig, subject: &str) -> Result<SubjectData> {
    let dir = cfg.dataset_root.join(subject);
    let load = |session: &str, partition: Partition| -> Result<EpochSet> {
        let path = dir.join(session);
        if !path.is_dir() {
            return Err(Error::MissingData(format!("{} does not exist", path.display())));
        }
        let rec = read_recording(&path)?;
        Ok(preprocess(&rec, &cfg.preprocess)?.with_partition(partition))
    };
    let train = load(&cfg.train_session, Partition::Training)?;
    let tests = cfg
        .test_sessions
        .iter()
        .map(|s| load(s, Partition::Evaluation))
        .collect::<Result<Vec<_>>>()?;
    Ok(SubjectData {
        subject: subject.to_string(),
        train,
        tests,
    })
}

fn par_map<T: Sync, R: Send>(items: &[T], jobs: usize, f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    #[cfg(feature = "parallel")]
    if jobs > 1 {
        use rayon::prelude::*;
        if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
            return pool.install(|| items.par_iter().map(&f).collect());
        }
    }
    let _ = jobs;
    items.iter().map(f).collect()
}

/// Cross-session baseline-vs-proposed comparison with the built-in methods.
pub fn run_protocol(cfg: &ExperimentConfig, jobs: usize) -> Result<EvalReport> {
    let bands = BandTable::default();
    let baseline = Baseline {
        cfg,
        bands: bands.clone(),
    };
    let proposed = Proposed { cfg, bands };
    run_protocol_with(cfg, &baseline, &proposed, jobs)
}

/// Same protocol with caller-supplied methods.
pub fn run_protocol_with(
    cfg: &ExperimentConfig,
    baseline: &dyn Method,
    proposed: &dyn Method,
    jobs: usize,
) -> Result<EvalReport> {
    cfg.validate()?;
    let subjects = if cfg.subjects.is_empty() {
        if !cfg.dataset_root.is_dir() {
            return Err(Error::MissingData(format!(
                "dataset root {} does not exist",
                cfg.dataset_root.display()
            )));
        }
        list_subdirs(&cfg.dataset_root)?
    } else {
        cfg.subjects.clone()
    };
    if subjects.is_empty() {
        return Err(Error::MissingData("no subjects found".into()));
    }

    let data = par_map(&subjects, jobs, |s| load_subject(cfg, s))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

    let units: Vec<(usize, u64)> = (0..data.len())
        .flat_map(|s| cfg.seeds.iter().map(move |&seed| (s, seed)))
        .collect();
    type UnitOut = (Vec<AccuracyRecord>, Option<FilterRecord>);
    let outputs = par_map(&units, jobs, |&(s, seed)| -> Result<UnitOut> {
        let subj = &data[s];
        let mut records = Vec::new();
        let mut filter = None;
        for (kind, method) in [(MethodKind::Baseline, baseline), (MethodKind::Proposed, proposed)] {
            let (model, outcome) = method.fit(&subj.train, seed)?;
            if let Some(o) = outcome {
                filter = Some(FilterRecord {
                    subject: subj.subject.clone(),
                    seed,
                    outcome: o,
                });
            }
            for (test, name) in subj.tests.iter().zip(&cfg.test_sessions) {
                let pred = model.predict(test)?;
                if pred.len() != test.len() {
                    return Err(Error::Protocol(format!(
                        "{kind:?} returned {} predictions for {} test epochs",
                        pred.len(),
                        test.len()
                    )));
                }
                records.push(AccuracyRecord {
                    subject: subj.subject.clone(),
                    seed,
                    test_session: name.clone(),
                    method: kind,
                    accuracy: score_predictions(&pred, test, test.n_classes, cfg.score_unit),
                    n_test_epochs: test.len(),
                });
            }
        }
        Ok((records, filter))
    });

    let mut records = Vec::new();
    let mut filtering = Vec::new();
    for out in outputs {
        let (r, f) = out?;
        records.extend(r);
        filtering.extend(f);
    }
    assemble(cfg.clone(), subjects, records, filtering)
}

fn assemble(
    config: ExperimentConfig,
    subjects: Vec<String>,
    records: Vec<AccuracyRecord>,
    filtering: Vec<FilterRecord>,
) -> Result<EvalReport> {
    // baseline and proposed must be scored on the same test epochs
    for b in records.iter().filter(|r| r.method == MethodKind::Baseline) {
        let twin = records.iter().find(|p| {
            p.method == MethodKind::Proposed
                && p.subject == b.subject
                && p.seed == b.seed
                && p.test_session == b.test_session
        });
        if twin.map(|p| p.n_test_epochs) != Some(b.n_test_epochs) {
            return Err(Error::Protocol(format!(
                "test epochs differ between methods for {} / {}",
                b.subject, b.test_session
            )));
        }
    }

    let subject_mean = |method: MethodKind, subject: &str| {
        let accs: Vec<f64> = records
            .iter()
            .filter(|r| r.method == method && r.subject == subject)
            .map(|r| r.accuracy)
            .collect();
        mean(&accs)
    };
    let summary = |method: MethodKind| {
        let per_subject: Vec<f64> = subjects.iter().map(|s| subject_mean(method, s)).collect();
        MethodSummary {
            method,
            mean: mean(&per_subject),
            std: population_std(&per_subject),
            per_subject,
        }
    };
    let baseline = summary(MethodKind::Baseline);
    let proposed = summary(MethodKind::Proposed);

    let per_session = config
        .test_sessions
        .iter()
        .map(|session| {
            let m = |method| {
                let accs: Vec<f64> = records
                    .iter()
                    .filter(|r| r.method == method && &r.test_session == session)
                    .map(|r| r.accuracy)
                    .collect();
                mean(&accs)
            };
            SessionSummary {
                test_session: session.clone(),
                baseline_mean: m(MethodKind::Baseline),
                proposed_mean: m(MethodKind::Proposed),
            }
        })
        .collect();

    let diffs: Vec<f64> = proposed
        .per_subject
        .iter()
        .zip(&baseline.per_subject)
        .map(|(p, b)| p - b)
        .collect();
    let p_value = paired_sign_flip_test(&diffs)?;
    Ok(EvalReport {
        config,
        subjects,
        records,
        filtering,
        mean_diff: mean(&diffs),
        diffs,
        baseline,
        proposed,
        per_session,
        p_value,
        stars: significance_stars(p_value).to_string(),
    })
}
