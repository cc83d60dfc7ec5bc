//! Attention index, upper Tukey fence and subject-specific fence search.

mod attention;
mod ksearch;

pub use attention::{
    apply_mask, attention_index, attention_profile, profile_from_scores, quantile, tukey_mask,
    AttentionProfile, FilterUnit,
};
pub(crate) use attention::{quantile_sorted, write_json};
pub use ksearch::{select_k, split_trials, KSearchConfig, KSearchResult, DEFAULT_K_GRID};
