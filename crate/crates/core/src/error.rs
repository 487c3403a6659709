use thiserror::Error;

/// Failure modes shared by every stage of the reconstruction stack.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("inconsistent residues: {0}")]
    InconsistentResidues(String),
    #[error("ambiguous reconstruction: candidates {0:?}")]
    Ambiguous(Vec<(i64, i64)>),
    #[error("remainder {value} matches neither cluster")]
    ClusterMembership { value: i64 },
    #[error("quotient estimate outside the dynamic range: {0}")]
    OutOfRange(String),
    #[error("resource limit: {0}")]
    ResourceLimit(String),
    #[error("integer overflow while computing {0}")]
    Overflow(&'static str),
    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// Stable machine-readable tag, used in CLI error objects and trial records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "invalid-argument",
            Error::InconsistentResidues(_) => "inconsistent-residues",
            Error::Ambiguous(_) => "ambiguous",
            Error::ClusterMembership { .. } => "cluster-membership-violation",
            Error::OutOfRange(_) => "out-of-range",
            Error::ResourceLimit(_) => "resource-limit",
            Error::Overflow(_) => "overflow",
            Error::Io(_) => "io-error",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
