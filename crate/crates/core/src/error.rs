use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("point {0} lies outside the map domain")]
    OutOfDomain(String),

    #[error("map is discontinuous at {0}; exact evaluation is undefined there")]
    Discontinuity(String),

    #[error("fragment cap of {cap} intervals exceeded")]
    FragmentCap { cap: usize },

    #[error("branch cap of {cap} composite branches exceeded")]
    BranchCap { cap: u64 },

    #[error("first-return time exceeded cap {cap}")]
    ReturnTimeCap { cap: u64 },

    #[error("target mass {0} is unattainable for this ball")]
    Unattainable(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("n * mu_n is not non-decreasing: first violation at n = {n}")]
    NotMonotone { n: u64 },

    #[error("series has no exceedances")]
    NoExceedances,

    #[error("continued fraction terminated after {len} coefficients")]
    Terminated { len: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Errors that signal a configured resource cap rather than bad input.
    pub fn is_resource_cap(&self) -> bool {
        matches!(
            self,
            Error::FragmentCap { .. } | Error::BranchCap { .. } | Error::ReturnTimeCap { .. }
        )
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
