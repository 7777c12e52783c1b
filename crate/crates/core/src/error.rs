use std::path::PathBuf;

/// Errors raised by the noise engine and the command-line front end.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error in {op}: {detail}")]
    Domain { op: &'static str, detail: String },

    /// The configuration is physically degenerate for the requested operation.
    #[error("singular configuration in {op}: {detail}")]
    Singular { op: &'static str, detail: String },

    /// No candidate satisfies the loss budget or calibration bounds.
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// Malformed user input (flags, grid specs, config values).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("failed to parse {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn domain(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            op,
            detail: detail.into(),
        }
    }

    pub(crate) fn singular(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Singular {
            op,
            detail: detail.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 2 for input problems, 3 for physics or feasibility problems.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidInput(_) | Error::Parse { .. } | Error::Io { .. } => 2,
            Error::Domain { .. } | Error::Singular { .. } | Error::Infeasible(_) => 3,
        }
    }
}
