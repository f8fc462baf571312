use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Tensor or core dimensions do not agree.
    #[error("shape error: {0}")]
    Shape(String),

    /// Operands live over different scalar fields.
    #[error("field mismatch: {0}")]
    Field(String),

    /// A configured size limit would be exceeded.
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// Normalization of an all-zero tensor was requested.
    #[error("tensor has zero Euclidean norm")]
    ZeroTensor,

    /// A model, state or optimizer description is invalid.
    #[error("invalid configuration: {0}")]
    Spec(String),

    /// The loss became non-finite during descent.
    #[error("optimizer diverged at epoch {epoch}: non-finite loss")]
    Divergence { epoch: usize },

    /// A least-squares design matrix does not have full column rank.
    #[error("rank-deficient design: {0}")]
    Rank(String),

    #[error("index out of range: {0}")]
    Index(String),

    /// Malformed serialized tensor, config or CSV input.
    #[error("format error: {0}")]
    Format(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Short stable identifier, used in machine-readable error output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Shape(_) => "shape",
            Error::Field(_) => "field",
            Error::Capacity(_) => "capacity",
            Error::ZeroTensor => "zero_tensor",
            Error::Spec(_) => "spec",
            Error::Divergence { .. } => "divergence",
            Error::Rank(_) => "rank",
            Error::Index(_) => "index",
            Error::Format(_) => "format",
            Error::Io(_) => "io",
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}

impl From<toml::de::Error> for Error {
    fn from(e: toml::de::Error) -> Self {
        Error::Format(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Format(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
