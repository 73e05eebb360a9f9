use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation (times out of range,
    /// unordered intervals, index sets violated).
    #[error("domain error: {0}")]
    Domain(String),

    /// A test function cannot supply the derivative order the computation needs.
    #[error("capability error: {0}")]
    Capability(String),

    /// A covariance table produced values no Gram matrix can have.
    #[error("kernel integrity error: {0}")]
    KernelIntegrity(String),

    #[error("matrix is not positive semidefinite: {0}")]
    NonPsd(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("at mesh level n = {n}: {source}")]
    AtMesh { n: usize, source: Box<Error> },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error("invalid json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn capability(msg: impl Into<String>) -> Self {
        Error::Capability(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn at_mesh(self, n: usize) -> Self {
        Error::AtMesh { n, source: Box::new(self) }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Domain(_) | Error::Capability(_) | Error::Config(_) | Error::Json(_) => 2,
            Error::KernelIntegrity(_) | Error::NonPsd(_) => 3,
            Error::AtMesh { source, .. } => source.exit_code(),
            Error::Io(_) | Error::Csv(_) => 1,
        }
    }
}
