//! Exact rational interval sets and the exact engine built on them.

mod engine;
mod set;
mod transfer;

pub use engine::{
    appendix_a_check, blocking_report, exact_aq_theta, exact_mn_law, exact_recurrence_measure,
    exact_xi, survivor_set, AppendixAReport, BlockingReport, ExactEngine, ExactLawTable, GammaTerm,
    LawRow, DEFAULT_BRANCH_CAP,
};
pub use set::{IntervalSet, DEFAULT_FRAGMENT_CAP};
pub use transfer::StepFunction;
