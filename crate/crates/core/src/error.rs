use thiserror::Error;

/// Errors raised by the exact and numerical routines of this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid alpha: {0}")]
    InvalidAlpha(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("size guard exceeded: {what} = {value} > {limit}")]
    SizeGuard {
        what: &'static str,
        value: usize,
        limit: usize,
    },

    #[error("series has zero constant term")]
    ZeroConstantTerm,

    #[error("distribution is not normalized: total mass {0}")]
    NotNormalized(String),

    #[error("negative mass {0}")]
    NegativeMass(String),

    #[error("integration failed: {0}")]
    Integration(String),

    #[error("export failed: {0}")]
    Export(String),
}

pub type Result<T> = core::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
