//! Stationary processes with closed forms: Pareto, moving maxima, continued-fraction digits.

mod cf;
mod moving_max;

pub use cf::{cf_coefficients, write_coefficients_csv, CfPrefix, CfSource, CfStream};
pub use moving_max::{
    moving_max_from, moving_max_mn_law, moving_max_tail, moving_max_theta, moving_max_threshold,
    pareto_from_uniform, pareto_sample, sample_path, sample_path_stream, write_series_csv, Process,
};
