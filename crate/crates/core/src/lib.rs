//! User state-aware EEG filtering.
//!
//! The pipeline estimates per-epoch attention from the alpha/theta energy
//! ratio, drops distracted epochs above an upper Tukey fence whose multiplier
//! is tuned per subject, trains a softmax decoder under a loss-thresholded
//! curriculum, and compares the result against an unfiltered baseline on
//! later sessions.
//!
//! Modules, bottom-up:
//!
//! - [`eeg_io`]: EEGB v1 session directories and the synthetic generator
//! - [`signal`]: Butterworth filtering, decimation, epoching, FFT features
//! - [`state_filter`]: attention index, Tukey mask, fence search
//! - [`curriculum`]: decoder, per-sample losses, curriculum trainer
//! - [`pipeline`]: feature scaling and the serializable [`pipeline::Decoder`]
//! - [`eval`]: cross-session protocol, sign-flip test, reports

pub mod curriculum;
pub mod eeg_io;
mod error;
pub mod eval;
mod matrix;
pub mod pipeline;
pub mod signal;
pub mod state_filter;

pub use error::{Error, Result};
pub use matrix::Matrix;
