use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use statefilter::curriculum::CurriculumSchedule;
use statefilter::pipeline::ScoreUnit;
use statefilter::signal::{PreprocessConfig, StandardizeScope};
use statefilter::state_filter::FilterUnit;

#[derive(Debug, Parser)]
#[command(name = "statefilter", version, about = "Attention-aware EEG epoch filtering and curriculum training")]
#[command(args_override_self = true)]
pub struct Cli {
    /// JSON object of flag values for the chosen subcommand; flags given on
    /// the command line win.
    #[arg(long, global = true, value_name = "PATH")]
    pub config_file: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset as <out>/<subject>/<session>/ EEGB directories.
    Synth(SynthArgs),
    /// Filter, resample, segment and standardize one session into an epoch EEGB directory.
    Preprocess(PreprocessArgs),
    /// Score epochs by alpha/theta ratio and write the fence and mask.
    Attention(AttentionArgs),
    /// Train a decoder on one session and write model.json.
    Train(TrainArgs),
    /// Score a trained model on a session.
    Evaluate(EvaluateArgs),
    /// Cross-session baseline-vs-proposed comparison over a dataset.
    Experiment(ExperimentArgs),
    /// Per-channel alpha power next to each epoch's attention score and mask.
    Alphamap(AlphamapArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Output dataset root.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 4)]
    pub subjects: usize,
    #[arg(long, default_value_t = 2)]
    pub sessions: usize,
    /// Trials per session.
    #[arg(long, default_value_t = 80)]
    pub trials: usize,
    #[arg(long, default_value_t = 4)]
    pub channels: usize,
    /// Fraction of trials generated in the distracted state.
    #[arg(long, default_value_t = 0.3)]
    pub distract_frac: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScopeArg {
    Epoch,
    Session,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum UnitArg {
    Window,
    Trial,
}

impl From<UnitArg> for FilterUnit {
    fn from(u: UnitArg) -> Self {
        match u {
            UnitArg::Window => FilterUnit::Window,
            UnitArg::Trial => FilterUnit::Trial,
        }
    }
}

impl From<UnitArg> for ScoreUnit {
    fn from(u: UnitArg) -> Self {
        match u {
            UnitArg::Window => ScoreUnit::Window,
            UnitArg::Trial => ScoreUnit::Trial,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Switch {
    On,
    Off,
}

/// Range `lo:hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandArg(pub f64, pub f64);

fn parse_band(s: &str) -> Result<BandArg, String> {
    let (lo, hi) = s.split_once(':').ok_or("expected lo:hi")?;
    let lo: f64 = lo.trim().parse().map_err(|e| format!("{lo}: {e}"))?;
    let hi: f64 = hi.trim().parse().map_err(|e| format!("{hi}: {e}"))?;
    if !(lo > 0.0 && lo < hi) {
        return Err(format!("need 0 < lo < hi, got {lo}:{hi}"));
    }
    Ok(BandArg(lo, hi))
}

/// Candidate list written as `lo:hi:step`, expanded inclusively.
#[derive(Debug, Clone, PartialEq)]
pub struct KGrid(pub Vec<f64>);

fn parse_grid(s: &str) -> Result<KGrid, String> {
    let parts: Vec<f64> = s
        .split(':')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p}: {e}")))
        .collect::<Result<_, _>>()?;
    let [lo, hi, step] = parts[..] else {
        return Err("expected lo:hi:step".into());
    };
    if !(lo >= 0.0 && hi >= lo && step > 0.0) {
        return Err(format!("need 0 <= lo <= hi and step > 0, got {s}"));
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    Ok(KGrid((0..=n).map(|i| lo + i as f64 * step).collect()))
}

/// Either a fixed multiplier or `auto` for the per-subject search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KArg {
    Fixed(f64),
    Auto,
}

fn parse_k(s: &str) -> Result<KArg, String> {
    if s == "auto" {
        return Ok(KArg::Auto);
    }
    let k: f64 = s.parse().map_err(|_| format!("expected a number or 'auto', got {s}"))?;
    if !(k >= 0.0 && k.is_finite()) {
        return Err(format!("k must be >= 0, got {k}"));
    }
    Ok(KArg::Fixed(k))
}

#[derive(Debug, Clone, Args)]
pub struct SignalArgs {
    /// Band-pass edges in Hz.
    #[arg(long, default_value = "1:40", value_parser = parse_band)]
    pub band: BandArg,
    /// Butterworth prototype order.
    #[arg(long, default_value_t = 4)]
    pub order: usize,
    /// Extra low-pass cutoff in Hz applied after the band-pass.
    #[arg(long)]
    pub lowpass: Option<f64>,
    /// Output sampling rate; must divide the input rate.
    #[arg(long, default_value_t = 250.0)]
    pub fs_out: f64,
    #[arg(long, default_value_t = 2.0)]
    pub window_sec: f64,
    #[arg(long, value_enum, default_value_t = ScopeArg::Epoch)]
    pub standardize_scope: ScopeArg,
}

impl SignalArgs {
    pub fn config(&self) -> PreprocessConfig {
        PreprocessConfig {
            band_low_hz: self.band.0,
            band_high_hz: self.band.1,
            prototype_order: self.order,
            extra_lowpass_hz: self.lowpass,
            fs_out_hz: self.fs_out,
            window_sec: self.window_sec,
            standardize_scope: match self.standardize_scope {
                ScopeArg::Epoch => StandardizeScope::Epoch,
                ScopeArg::Session => StandardizeScope::Session,
            },
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct CurriculumArgs {
    #[arg(long, value_enum, default_value_t = Switch::On)]
    pub curriculum: Switch,
    /// Fraction of samples active at the first epoch.
    #[arg(long, default_value_t = 0.5)]
    pub q0: f64,
    /// Fraction of the run after which every sample is active.
    #[arg(long, default_value_t = 0.5)]
    pub ramp_frac: f64,
    #[arg(long, default_value_t = 300)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.1)]
    pub lr: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub l2: f64,
}

impl CurriculumArgs {
    pub fn schedule(&self, seed: u64) -> CurriculumSchedule {
        CurriculumSchedule {
            enabled: self.curriculum == Switch::On,
            q0: self.q0,
            ramp_frac: self.ramp_frac,
            epochs: self.epochs,
            lr: self.lr,
            seed,
        }
    }
}

#[derive(Debug, Args)]
pub struct PreprocessArgs {
    /// Raw EEGB session directory.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Output EEGB directory holding one "trial" per epoch.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub signal: SignalArgs,
}

#[derive(Debug, Args)]
pub struct AttentionArgs {
    /// EEGB session directory, raw or preprocessed.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Fence multiplier, or `auto` to search --k-grid.
    #[arg(long, default_value = "auto", value_parser = parse_k)]
    pub k: KArg,
    /// Candidate multipliers for `--k auto`.
    #[arg(long, default_value = "0.5:3.0:0.5", value_parser = parse_grid)]
    pub k_grid: KGrid,
    /// Share of trials held out per class during the search.
    #[arg(long, default_value_t = 0.2)]
    pub val_frac: f64,
    #[arg(long, value_enum, default_value_t = UnitArg::Window)]
    pub unit: UnitArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "attention.json")]
    pub out: PathBuf,
    #[command(flatten)]
    pub signal: SignalArgs,
    #[command(flatten)]
    pub train: CurriculumArgs,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// EEGB session directory, raw or preprocessed.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// attention.json whose mask selects the training epochs.
    #[arg(long)]
    pub attention: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "model.json")]
    pub out: PathBuf,
    #[command(flatten)]
    pub signal: SignalArgs,
    #[command(flatten)]
    pub train: CurriculumArgs,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// EEGB session directory; raw sessions are preprocessed as the model was.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, default_value = "evaluation.json")]
    pub report: PathBuf,
    #[arg(long, value_enum, default_value_t = UnitArg::Window)]
    pub score_unit: UnitArg,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// Experiment configuration JSON; a relative dataset_root resolves against its directory.
    #[arg(long)]
    pub config: PathBuf,
    /// Directory for report.json and summary.csv.
    #[arg(long, default_value = "results")]
    pub out: PathBuf,
    /// Worker threads over subjects and seeds.
    #[arg(long, env = "STATEFILTER_JOBS", default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Args)]
pub struct AlphamapArgs {
    /// EEGB session directory, raw or preprocessed.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// attention.json for the same session; otherwise the fence is computed with --k.
    #[arg(long, conflicts_with = "k")]
    pub attention: Option<PathBuf>,
    #[arg(long, default_value_t = 1.5)]
    pub k: f64,
    #[arg(long, value_enum, default_value_t = UnitArg::Window)]
    pub unit: UnitArg,
    #[arg(long, default_value = "alpha_map.csv")]
    pub out: PathBuf,
    #[command(flatten)]
    pub signal: SignalArgs,
}
