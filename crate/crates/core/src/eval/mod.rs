//! Cross-session baseline-vs-proposed protocol, significance and exports.

mod export;
mod protocol;
mod stats;

pub use export::{alpha_map_export, emit_report, fmt17, REPORT_JSON, SUMMARY_CSV};
pub use protocol::{
    run_protocol, run_protocol_with, AccuracyRecord, Baseline, EvalReport, ExperimentConfig,
    FilterOutcome, FilterRecord, Method, MethodKind, MethodSummary, Predictor, Proposed,
    SessionSummary,
};
pub use stats::{paired_sign_flip_test, significance_stars, MAX_EXACT_PAIRS};
