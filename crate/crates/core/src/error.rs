use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the corpus forge.
#[derive(Debug, Error)]
pub enum ForgeError {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },

    #[error("unknown table: {0}")]
    UnknownTable(String),

    #[error("unknown column: {0}")]
    UnknownColumn(String),

    #[error("ambiguous column: {0}")]
    AmbiguousColumn(String),

    #[error("type mismatch: {0}")]
    TypeMismatch(String),

    #[error("subquery nesting deeper than {max}")]
    NestingTooDeep { max: usize },

    #[error("invalid query: {0}")]
    InvalidQuery(String),

    #[error("invalid schema {schema_id}: {msg}")]
    InvalidSchema { schema_id: String, msg: String },

    #[error("unsatisfiable grammar config: {0}")]
    Unsatisfiable(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("I/O error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: malformed JSON: {msg}")]
    Json {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("duplicate schema_id {schema_id:?} in {first} and {second}")]
    DuplicateSchema {
        schema_id: String,
        first: PathBuf,
        second: PathBuf,
    },

    #[error("stage {stage} failed on record {record}")]
    Stage {
        stage: &'static str,
        record: String,
        #[source]
        source: Box<ForgeError>,
    },
}

impl ForgeError {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        ForgeError::Contract(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        ForgeError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = ForgeError> = std::result::Result<T, E>;
