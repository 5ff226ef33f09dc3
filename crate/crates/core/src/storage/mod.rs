//! Record store with the security pipeline applied on every write and
//! reversed on every read.

mod csv;
mod store;

use thiserror::Error;

use crate::authentication::AuthError;
use crate::codec::CodecError;
use crate::config::ConfigError;
use crate::keys::{KeyError, KeyKind};
use crate::model::ModelError;
use crate::provider::CryptoError;

pub use self::csv::{read_table_csv, write_table_csv};
pub use store::{SecureStore, Selection};

/// Coarse error classes, for callers that branch on the kind of failure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Authentication,
    Integrity,
    Confidentiality,
    ConfigMismatch,
    Corrupt,
    NotFound,
    Other,
}

impl ErrorClass {
    /// Failures that integrity-lock select semantics may filter out.
    pub fn is_verification(self) -> bool {
        matches!(
            self,
            ErrorClass::Authentication | ErrorClass::Integrity | ErrorClass::Confidentiality | ErrorClass::Corrupt
        )
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ErrorClass::Authentication => "authentication",
            ErrorClass::Integrity => "integrity",
            ErrorClass::Confidentiality => "confidentiality",
            ErrorClass::ConfigMismatch => "config-mismatch",
            ErrorClass::Corrupt => "corrupt",
            ErrorClass::NotFound => "not-found",
            ErrorClass::Other => "other",
        }
    }
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("record {id}: origin is not authentic")]
    Authentication { id: u64 },
    #[error("record {id}: integrity stamp does not match")]
    Integrity { id: u64 },
    #[error("record {id}: decryption failed")]
    Confidentiality { id: u64 },
    #[error("record {id}: {reason}")]
    ConfigMismatch { id: u64, reason: &'static str },
    #[error("record {id}: malformed envelope: {source}")]
    Envelope {
        id: u64,
        #[source]
        source: CodecError,
    },
    #[error("record {id}: stored record is malformed: {source}")]
    Corrupt {
        id: u64,
        #[source]
        source: ModelError,
    },
    #[error("no record {id} in `{table}`")]
    NotFound { table: String, id: u64 },
    #[error("no table `{0}`")]
    UnknownTable(String),
    #[error("table `{0}` already exists")]
    TableExists(String),
    #[error("invalid table name `{0}`")]
    InvalidTableName(String),
    #[error("table `{0}` files are damaged")]
    CorruptTable(String),
    #[error("CSV schema differs from table `{0}`")]
    SchemaMismatch(String),
    #[error("{0}")]
    UnsupportedMode(&'static str),
    #[error("{aspect} key must be {expected}, found {got}")]
    KeyKind {
        aspect: &'static str,
        expected: KeyKind,
        got: KeyKind,
    },
    #[error("CSV line {line}: {source}")]
    CsvRow {
        line: usize,
        #[source]
        source: ModelError,
    },
    #[error("CSV: {0}")]
    CsvFormat(String),
    #[error(transparent)]
    Csv(#[from] ::csv::Error),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Key(#[from] KeyError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Crypto(#[from] CryptoError),
    #[error(transparent)]
    Auth(#[from] AuthError),
}

impl StoreError {
    pub fn class(&self) -> ErrorClass {
        match self {
            StoreError::Authentication { .. } => ErrorClass::Authentication,
            StoreError::Integrity { .. } => ErrorClass::Integrity,
            StoreError::Confidentiality { .. } => ErrorClass::Confidentiality,
            StoreError::ConfigMismatch { .. } => ErrorClass::ConfigMismatch,
            StoreError::Envelope { .. } | StoreError::Corrupt { .. } => ErrorClass::Corrupt,
            StoreError::NotFound { .. } => ErrorClass::NotFound,
            _ => ErrorClass::Other,
        }
    }
}
