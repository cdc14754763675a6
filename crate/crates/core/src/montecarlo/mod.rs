//! Orbit simulation and estimators.

mod driver;
mod estimators;
mod io;
mod moving_max_mc;
mod philipp;
mod scaling;
mod source;
mod stats;
mod theta;

pub use driver::{
    eah_fraction, eah_from_records, estimate_mn_law, estimate_survivor, ext_f64,
    simulate_max_process, simulate_sweep, with_workers, RunRecord, SimConfig, Threshold, ViolationScan,
};
pub use estimators::{estimate_correlation, estimate_recurrence, estimate_xi, Sampling};
pub use io::{read_records_bin, write_records_bin, write_records_csv, EstimatorReport};
pub use moving_max_mc::{moving_max_mc, MovingMaxCell};
pub use philipp::{
    philipp_fixed, philipp_row, philipp_statistic, philipp_summary, PhilippRow, PhilippSummary,
    DEFAULT_N_START,
};
pub use scaling::{estimate_theta_zero_scaling, ScalingConfig, ScalingFit, ScalingRow, MIN_EXITS};
pub use source::{FloatKnobs, System};
pub use stats::EstimateWithCI;
pub use theta::{
    closed_form_theta, estimate_theta, theta_from_series, ThetaEstimate, ThetaMethod,
    MIN_EXCEEDANCES, MIN_GROUPS,
};
