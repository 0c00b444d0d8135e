use thiserror::Error;

/// Errors produced by the numerical routines.
///
/// The variants are coarse on purpose: the CLI maps them onto exit codes, so
/// each one corresponds to a distinct class of failure rather than a call site.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// User-supplied data (a probability table, a spec file) is malformed.
    #[error("validation error: {0}")]
    Validation(String),

    /// The operation cannot deliver the requested accuracy for this input,
    /// e.g. a truncated table without a tail model was asked for a tighter
    /// tolerance than its recorded omitted mass allows.
    #[error("capability error: {0}")]
    Capability(String),

    /// The extremal distribution could not be built for these parameters.
    #[error("construction error: {0}")]
    Construction(String),

    /// A sampled tree exceeded the configured node cap.
    #[error("size error: tree exceeds {cap} nodes")]
    Size { cap: usize },

    /// An internal consistency check failed.
    #[error("diagnostic error: {0}")]
    Diagnostic(String),
}

impl Error {
    /// Short machine-readable tag for the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Validation(_) => "validation",
            Error::Capability(_) => "capability",
            Error::Construction(_) => "construction",
            Error::Size { .. } => "size",
            Error::Diagnostic(_) => "diagnostic",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

macro_rules! domain {
    ($($arg:tt)*) => { $crate::error::Error::Domain(format!($($arg)*)) };
}
pub(crate) use domain;
