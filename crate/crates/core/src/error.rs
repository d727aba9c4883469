use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Bad model or layer configuration (qubit counts, widths, parameter lengths).
    #[error("configuration error: {0}")]
    Config(String),

    /// A caller passed arguments that do not fit the operation.
    #[error("usage error: {0}")]
    Usage(String),

    /// A workload record violates an invariant; carries the query id when one is known.
    #[error("workload error{}: {message}", query_id.as_ref().map(|q| format!(" (query {q})")).unwrap_or_default())]
    Workload {
        query_id: Option<String>,
        message: String,
    },

    /// SQL text outside the supported subset.
    #[error("parse error at byte {position} near `{token}`: {message}")]
    Parse {
        message: String,
        token: String,
        position: usize,
    },

    /// CSV table data or predicate constants that do not line up.
    #[error("ingestion error: {0}")]
    Ingest(String),

    /// Training produced a non-finite loss.
    #[error("numeric failure at episode {episode}: {message}")]
    Numeric { episode: usize, message: String },

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn workload(query_id: impl Into<Option<String>>, message: impl Into<String>) -> Self {
        Error::Workload {
            query_id: query_id.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 1 usage, 2 data/parse, 3 numeric failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Usage(_) => 1,
            Error::Workload { .. } | Error::Parse { .. } | Error::Ingest(_) | Error::Io { .. } => 2,
            Error::Numeric { .. } => 3,
        }
    }
}
