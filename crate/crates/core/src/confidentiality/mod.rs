//! Confidentiality aspect: searchable encryption and anonymization.

mod hierarchy;
mod kanon;
mod ldiv;
pub mod search;

use thiserror::Error;

use crate::model::ModelError;

pub use hierarchy::{generalize, lattice, GeneralizationHierarchy, GeneralizationVector};
pub use kanon::{
    binary_search, discernibility_metric, equivalence_classes, k_anonymity_check,
    minimal_generalization, naive_search, EquivalenceClass, KAnonymity, MinimalGeneralization,
};
pub use ldiv::{l_diversity_check, LDiversity};
pub use search::{
    canonical_word, index_build, index_search, EncryptedIndex, SearchError, SearchKeys,
    SearchParams, Trapdoor,
};

#[derive(Debug, Error)]
pub enum AnonError {
    #[error("k must be at least 2, got {0}")]
    KTooSmall(usize),
    #[error("l must be at least 1")]
    LZero,
    #[error("quasi-identifier set is empty")]
    EmptyQi,
    #[error("hierarchy for `{attribute}`: {reason}")]
    Hierarchy { attribute: String, reason: String },
    #[error("value `{value}` of `{attribute}` is not a ground value of its hierarchy")]
    MissingValue { attribute: String, value: String },
    #[error("generalization vector does not fit the hierarchies")]
    VectorOutOfRange,
    #[error("no generalization satisfies k-anonymity within the suppression budget")]
    NoSolution,
    #[error("search strategies disagree: naive {naive:?}, binary {binary:?}")]
    StrategyMismatch { naive: Vec<usize>, binary: Vec<usize> },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("hierarchy csv: {0}")]
    Csv(#[from] csv::Error),
}
