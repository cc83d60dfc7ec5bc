use std::path::Path;

use serde::Serialize;
use statefilter::eeg_io::{synth_dataset, write_recording, SynthConfig};
use statefilter::eval::{alpha_map_export, emit_report, run_protocol, ExperimentConfig};
use statefilter::pipeline::{fit_decoder, Decoder, ScoreUnit};
use statefilter::signal::{BandTable, EpochSet, Partition};
use statefilter::state_filter::{
    apply_mask, attention_profile, select_k, AttentionProfile, FilterUnit, KSearchConfig,
};

use crate::args::{
    AlphamapArgs, AttentionArgs, Command, EvaluateArgs, ExperimentArgs, KArg, PreprocessArgs, SynthArgs,
    TrainArgs,
};
use crate::store::{load_epochs, write_epochs};
use crate::CliError;

type CliResult = Result<(), CliError>;

pub fn dispatch(cmd: Command) -> CliResult {
    match cmd {
        Command::Synth(a) => synth(a),
        Command::Preprocess(a) => preprocess(a),
        Command::Attention(a) => attention(a),
        Command::Train(a) => train(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Experiment(a) => experiment(a),
        Command::Alphamap(a) => alphamap(a),
    }
}

fn require_dir(path: &Path, what: &str) -> CliResult {
    if path.is_dir() {
        Ok(())
    } else {
        Err(CliError::Validation(format!("{what} {} is not a directory", path.display())))
    }
}

fn require_file(path: &Path, what: &str) -> CliResult {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Validation(format!("{what} {} does not exist", path.display())))
    }
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> CliResult {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Validation(format!("cannot serialize {}: {e}", path.display())))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::Runtime(statefilter::Error::Io {
        path: path.to_path_buf(),
        source: e,
    }))
}

fn synth(a: SynthArgs) -> CliResult {
    let cfg = SynthConfig {
        n_subjects: a.subjects,
        n_sessions: a.sessions,
        n_trials: a.trials,
        n_channels: a.channels,
        distract_frac: a.distract_frac,
        seed: a.seed,
        ..SynthConfig::default()
    };
    cfg.validate()?;
    for rec in synth_dataset(&cfg)? {
        let m = &rec.manifest;
        write_recording(&rec, &a.out.join(&m.subject_id).join(&m.session_id))?;
    }
    eprintln!(
        "wrote {} subjects x {} sessions to {}",
        cfg.n_subjects,
        cfg.n_sessions,
        a.out.display()
    );
    Ok(())
}

fn preprocess(a: PreprocessArgs) -> CliResult {
    require_dir(&a.input, "input session")?;
    let (epochs, manifest) = load_epochs(&a.input, &a.signal.config())?;
    write_epochs(&epochs, &manifest.label_names, &manifest.dataset_id, &a.out)?;
    eprintln!("wrote {} epochs to {}", epochs.len(), a.out.display());
    Ok(())
}

fn training_set(input: &Path, signal: &crate::args::SignalArgs) -> Result<EpochSet, CliError> {
    require_dir(input, "input session")?;
    Ok(load_epochs(input, &signal.config())?.0.with_partition(Partition::Training))
}

fn attention(a: AttentionArgs) -> CliResult {
    let epochs = training_set(&a.input, &a.signal)?;
    let unit = FilterUnit::from(a.unit);
    let k = match a.k {
        KArg::Fixed(k) => k,
        KArg::Auto => {
            let bands = BandTable::default();
            let preprocess = a.signal.config();
            let sched = a.train.schedule(a.seed);
            let search = KSearchConfig {
                grid: a.k_grid.0.clone(),
                val_fraction: a.val_frac,
                seed: a.seed,
                unit,
            };
            let result = select_k(
                &epochs,
                &search,
                |fit| fit_decoder(fit, &bands, &preprocess, &sched, a.train.l2).map(|(d, _)| d),
                |model, val| model.score(val, ScoreUnit::Window),
            )?;
            for (k, acc) in result.grid.iter().zip(&result.val_accuracy) {
                eprintln!("k = {k}: validation accuracy {acc:.4}");
            }
            result.k_selected
        }
    };
    let profile = attention_profile(&epochs, k, unit)?;
    profile.write_json(&a.out)?;
    eprintln!(
        "k = {k}: kept {}/{} epochs (fence {:.4})",
        profile.n_kept, profile.n_total, profile.fence_upper
    );
    Ok(())
}

fn read_profile(path: &Path, epochs: &EpochSet) -> Result<AttentionProfile, CliError> {
    require_file(path, "attention file")?;
    let profile = AttentionProfile::read_json(path)?;
    if profile.mask.len() != epochs.len() {
        return Err(CliError::Validation(format!(
            "{} holds {} mask entries for {} epochs",
            path.display(),
            profile.mask.len(),
            epochs.len()
        )));
    }
    Ok(profile)
}

fn train(a: TrainArgs) -> CliResult {
    let mut epochs = training_set(&a.input, &a.signal)?;
    if let Some(path) = &a.attention {
        let profile = read_profile(path, &epochs)?;
        epochs = apply_mask(&epochs, &profile)?;
    }
    let sched = a.train.schedule(a.seed);
    let (decoder, trace) = fit_decoder(&epochs, &BandTable::default(), &a.signal.config(), &sched, a.train.l2)?;
    decoder.write_json(&a.out)?;
    if let Some(last) = trace.epochs.last() {
        eprintln!(
            "trained on {} epochs: final loss {:.4}, training accuracy {:.4}",
            epochs.len(),
            last.mean_active_loss,
            last.accuracy
        );
    }
    Ok(())
}

#[derive(Serialize)]
struct Evaluation {
    session: String,
    subject: String,
    score_unit: ScoreUnit,
    n_epochs: usize,
    accuracy: f64,
}

fn evaluate(a: EvaluateArgs) -> CliResult {
    require_file(&a.model, "model")?;
    require_dir(&a.input, "input session")?;
    let decoder = Decoder::read_json(&a.model)?;
    let (epochs, _) = load_epochs(&a.input, &decoder.preprocess)?;
    let epochs = epochs.with_partition(Partition::Evaluation);
    let unit = ScoreUnit::from(a.score_unit);
    let report = Evaluation {
        session: epochs.session_id.clone(),
        subject: epochs.subject_id.clone(),
        score_unit: unit,
        n_epochs: epochs.len(),
        accuracy: decoder.score(&epochs, unit)?,
    };
    write_json(&report, &a.report)?;
    eprintln!("accuracy {:.4} on {} epochs", report.accuracy, report.n_epochs);
    Ok(())
}

fn experiment(a: ExperimentArgs) -> CliResult {
    require_file(&a.config, "experiment config")?;
    let cfg = ExperimentConfig::read_json(&a.config)
        .map_err(|e| CliError::Validation(format!("experiment config {}: {e}", a.config.display())))?;
    if a.jobs == 0 {
        return Err(CliError::Validation("--jobs must be at least 1".into()));
    }
    require_dir(&cfg.dataset_root, "dataset root")?;
    let report = run_protocol(&cfg, a.jobs)?;
    emit_report(&report, &a.out)?;
    eprintln!(
        "baseline {:.4} ± {:.4}, proposed {:.4} ± {:.4}, p = {:.4}{}",
        report.baseline.mean,
        report.baseline.std,
        report.proposed.mean,
        report.proposed.std,
        report.p_value,
        report.stars
    );
    Ok(())
}

fn alphamap(a: AlphamapArgs) -> CliResult {
    let epochs = training_set(&a.input, &a.signal)?;
    let profile = match &a.attention {
        Some(path) => read_profile(path, &epochs)?,
        None => attention_profile(&epochs, a.k, FilterUnit::from(a.unit))?,
    };
    alpha_map_export(&epochs, &profile, &a.out)?;
    eprintln!("wrote {} rows to {}", epochs.len() * epochs.n_channels, a.out.display());
    Ok(())
}

