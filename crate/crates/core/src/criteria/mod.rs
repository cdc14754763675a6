//! Threshold families and the series classifiers built on them.

mod family;
mod regularity;
mod series;

pub use family::{FamilyForm, MonotoneReport, ThresholdFamily, DEFAULT_N0};
pub use regularity::{family_regularity, rn_regularity_check, RegularityReport, RegularityRow};
pub use series::{
    classify_log_terms, condensation_terms, decide, fit_tail, rs_classify,
    rs_classify_condensation, sum_mu_classify, Classification, CondensationTerms, Evidence,
    Method, SeriesVerdict, TailFit, DEAD_ZONE, DEFAULT_K_MAX, EXACT_SLOPE_TOL, MIN_TABLE_LEN,
};
