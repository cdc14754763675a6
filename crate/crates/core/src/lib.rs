//! Maximum processes of interval maps and stationary sequences: exact survivor
//! measures for piecewise-affine maps, Monte Carlo estimators, series criteria
//! for almost-sure growth of maxima, and reproducible experiment recipes.

pub mod criteria;
pub mod error;
pub mod experiments;
pub mod hashing;
pub mod intervals;
pub mod maps;
pub mod montecarlo;
pub mod precision;
pub mod processes;
pub mod rational;
pub mod real;
pub mod rng;

pub use error::{Error, Result};
