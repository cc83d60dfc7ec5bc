mod args;
mod commands;
mod store;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;

use args::Cli;

/// Bad input, caught before or during argument checking.
const EXIT_VALIDATION: u8 = 1;
/// The pipeline itself failed.
const EXIT_RUNTIME: u8 = 2;

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Runtime(statefilter::Error),
}

impl From<statefilter::Error> for CliError {
    fn from(e: statefilter::Error) -> Self {
        use statefilter::Error as E;
        match e {
            E::InvalidSpec(_)
            | E::InvalidConfig(_)
            | E::InvalidArgument(_)
            | E::GridEmpty
            | E::NonIntegerFactor { .. }
            | E::InvalidBand { .. }
            | E::Protocol(_)
            | E::MissingData(_) => CliError::Validation(e.to_string()),
            other => CliError::Runtime(other),
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(m) => f.write_str(m),
            CliError::Runtime(e) => write!(f, "{e}"),
        }
    }
}

/// Value of `--config-file` anywhere in argv, in either `--flag v` or
/// `--flag=v` form.
fn find_config_file(argv: &[OsString]) -> Option<PathBuf> {
    let mut it = argv.iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config-file" {
            return it.next().map(PathBuf::from);
        }
        if let Some(v) = s.strip_prefix("--config-file=") {
            return Some(PathBuf::from(v));
        }
    }
    None
}

/// Flags from a JSON object: `{"k_grid": "0.5:2:0.5", "seed": 3}` becomes
/// `--k-grid 0.5:2:0.5 --seed 3`; `true` becomes a bare flag.
fn config_flags(path: &Path) -> Result<Vec<OsString>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read config file {}: {e}", path.display())))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Validation(format!("config file {}: {e}", path.display())))?;
    let serde_json::Value::Object(map) = value else {
        return Err(CliError::Validation(format!("config file {} must hold a JSON object", path.display())));
    };
    let mut out = Vec::new();
    for (key, v) in map {
        let flag = format!("--{}", key.replace('_', "-"));
        match v {
            serde_json::Value::Bool(true) => out.push(flag.into()),
            serde_json::Value::Bool(false) | serde_json::Value::Null => {}
            serde_json::Value::String(s) => out.extend([flag.into(), s.into()]),
            serde_json::Value::Number(n) => out.extend([flag.into(), n.to_string().into()]),
            other => {
                return Err(CliError::Validation(format!(
                    "config file {}: value for {key} must be a scalar, got {other}",
                    path.display()
                )))
            }
        }
    }
    Ok(out)
}

/// File-supplied flags go right after the subcommand name so that anything
/// the user typed later overrides them.
fn expand_argv(argv: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let Some(path) = find_config_file(&argv) else {
        return Ok(argv);
    };
    let extra = config_flags(&path)?;
    let names = ["synth", "preprocess", "attention", "train", "evaluate", "experiment", "alphamap"];
    let pos = argv.iter().position(|a| names.contains(&a.to_string_lossy().as_ref()));
    let mut out = argv;
    if let Some(p) = pos {
        out.splice(p + 1..p + 1, extra);
    }
    Ok(out)
}

fn run() -> Result<(), CliError> {
    let argv = expand_argv(std::env::args_os().collect())?;
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return Ok(());
        }
        Err(e) => return Err(CliError::Validation(e.render().to_string().trim_end().to_string())),
    };
    commands::dispatch(cli.command)
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("statefilter: {e}");
            ExitCode::from(match e {
                CliError::Validation(_) => EXIT_VALIDATION,
                CliError::Runtime(_) => EXIT_RUNTIME,
            })
        }
    }
}
