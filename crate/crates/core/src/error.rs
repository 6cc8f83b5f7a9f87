use thiserror::Error;

/// Errors produced anywhere in the laboratory.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("green kernel is singular on the diagonal (v == w)")]
    DiagonalSingularity,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("resolution error: {0}")]
    Resolution(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("trial {index}: {source}")]
    Trial {
        index: u64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.into(),
            reason: reason.into(),
        }
    }
}

impl Error {
    /// Stable snake_case name of the variant, for machine-readable diagnostics.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameter { .. } => "invalid_parameter",
            Error::DiagonalSingularity => "diagonal_singularity",
            Error::Domain(_) => "domain",
            Error::Resolution(_) => "resolution",
            Error::Numerical(_) => "numerical",
            Error::InsufficientData(_) => "insufficient_data",
            Error::Format(_) => "format",
            Error::Config { .. } => "config",
            Error::Trial { source, .. } => source.kind(),
            Error::Io(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
