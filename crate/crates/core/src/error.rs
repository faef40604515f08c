use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    /// Leave-one-out pooling was requested with a single subject.
    #[error("no donor subjects: {0}")]
    NoDonors(String),

    #[error("no feasible design under the requested budget")]
    EmptyDesign,

    #[error("degenerate sweep: {0}")]
    DegenerateSweep(String),

    /// Cells that must carry a value but do not, as `(n, m)` pairs.
    #[error("ragged coverage; missing cells {0:?}")]
    RaggedCoverage(Vec<(u64, u64)>),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
