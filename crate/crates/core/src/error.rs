use alloc::string::String;

use crate::spike_maps::Scale;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An argument lies outside the set where the function is defined.
    #[error("domain error: {0}")]
    Domain(String),
    /// A spike was given on the wrong coordinate scale for the framework.
    #[error("scale mismatch: expected {expected:?} spike, got {found:?}")]
    ScaleMismatch { expected: Scale, found: Scale },
    /// The caller broke a usage contract (missing context, rank too large, ...).
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },
    #[error("matrix is singular; pivot {pivot} needs an invertible matrix")]
    Singular { pivot: u8 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

macro_rules! domain {
    ($($arg:tt)*) => { $crate::error::Error::Domain(alloc::format!($($arg)*)) };
}
macro_rules! contract {
    ($($arg:tt)*) => { $crate::error::Error::Contract(alloc::format!($($arg)*)) };
}
pub(crate) use {contract, domain};
