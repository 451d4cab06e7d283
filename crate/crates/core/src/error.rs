use thiserror::Error;

use crate::hj::PicardTrace;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("unsupported time grid: {0}")]
    UnsupportedGrid(String),

    /// The discrete solution left the a priori envelope.
    #[error("stability abort at t = {time}: sup norm {norm:e} exceeds {limit:e}")]
    Stability { time: f64, norm: f64, limit: f64 },

    #[error("upwind step restriction violated: dt = {dt:e}, admissible dt <= {admissible:e}")]
    StepRestriction { dt: f64, admissible: f64 },

    #[error("Picard iteration stopped contracting at t = {time_reached} after {} iterations", trace.len())]
    NonContraction {
        trace: Box<PicardTrace>,
        time_reached: f64,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn mismatch(msg: impl Into<String>) -> Self {
        Error::GridMismatch(msg.into())
    }
}
