use std::path::PathBuf;

/// Errors surfaced by every stage of the pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid timestamp {raw:?}: {reason}")]
    Timestamp { raw: String, reason: String },

    #[error("lake I/O failure at {}: {source}", path.display())]
    Lake {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("I/O failure at {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("format error: {0}")]
    Format(String),

    #[error("normalization error{}: {reason}", item_id.as_ref().map(|id| format!(" for {id:?}")).unwrap_or_default())]
    Normalization {
        item_id: Option<String>,
        reason: String,
    },

    #[error("embedding error: {0}")]
    Embed(String),

    #[error("index build error: {0}")]
    Build(String),

    #[error("query error: {0}")]
    Query(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("not found: {0}")]
    NotFound(String),

    #[error("missing coverage for {} id(s): {}", missing.len(), missing.join(", "))]
    Coverage { missing: Vec<String> },

    #[error("join error: {0}")]
    Join(String),

    #[error("no sweep point reaches precision {min_precision}")]
    Selection { min_precision: f64 },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn lake(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Lake {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn norm(item_id: Option<&str>, reason: impl Into<String>) -> Self {
        Error::Normalization {
            item_id: item_id.map(str::to_owned),
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
