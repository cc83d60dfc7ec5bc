use std::fmt::Write as _;
use std::path::Path;

use super::protocol::EvalReport;
use crate::error::{Error, Result};
use crate::signal::{alpha_band, band_power_per_channel, EpochSet};
use crate::state_filter::{write_json, AttentionProfile};

pub const REPORT_JSON: &str = "report.json";
pub const SUMMARY_CSV: &str = "summary.csv";

/// 17 significant digits.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// One row per (epoch, channel): alpha-band periodogram power next to the
/// epoch's attention score and mask bit.
pub fn alpha_map_export(epochs: &EpochSet, profile: &AttentionProfile, out: &Path) -> Result<()> {
    if profile.mask.len() != epochs.len() || profile.atr.len() != epochs.len() {
        return Err(Error::LengthMismatch {
            expected: epochs.len(),
            got: profile.mask.len(),
        });
    }
    let power = band_power_per_channel(epochs, &alpha_band())?;
    let mut csv = String::from("epoch,channel,alpha_power,atr,mask\n");
    for e in 0..epochs.len() {
        for (c, name) in epochs.channel_names.iter().enumerate() {
            let _ = writeln!(
                csv,
                "{e},{name},{},{},{}",
                fmt17(power[e * epochs.n_channels + c]),
                fmt17(profile.atr[e]),
                profile.mask[e] as u8
            );
        }
    }
    std::fs::write(out, csv).map_err(|e| Error::io(out, e))
}

/// Writes `report.json` and `summary.csv` into `dir`.
pub fn emit_report(report: &EvalReport, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_json(report, &dir.join(REPORT_JSON))?;

    let mut csv = String::from("subject,baseline,proposed,diff,p_value,stars\n");
    for (i, s) in report.subjects.iter().enumerate() {
        let _ = writeln!(
            csv,
            "{s},{},{},{},,",
            fmt17(report.baseline.per_subject[i]),
            fmt17(report.proposed.per_subject[i]),
            fmt17(report.diffs[i])
        );
    }
    let _ = writeln!(
        csv,
        "mean±std,{}±{},{}±{},{},{},{}",
        fmt17(report.baseline.mean),
        fmt17(report.baseline.std),
        fmt17(report.proposed.mean),
        fmt17(report.proposed.std),
        fmt17(report.mean_diff),
        fmt17(report.p_value),
        report.stars
    );
    let path = dir.join(SUMMARY_CSV);
    std::fs::write(&path, csv).map_err(|e| Error::io(&path, e))
}
