//! Authentication aspect: payload tags, Merkle membership proofs and
//! authenticated range aggregates.

pub mod aggregate;
pub mod merkle;
mod tag;

use thiserror::Error;

use crate::codec::CodecError;
use crate::provider::CryptoError;

pub use aggregate::{
    agg_build, agg_query, agg_verify, AggAnswer, Aggregate, AggregateProof, AggregateTree, NodeSummary,
    ProofItem, ProofNode,
};
pub use merkle::{merkle_build, merkle_prove, merkle_update, merkle_verify, MembershipProof, MerkleTree};
pub use tag::{auth_tag, auth_verify, AuthScheme, AuthenticationTag};

/// A root hash with the owner's signature over it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignedRoot {
    pub root: Vec<u8>,
    pub signature: Vec<u8>,
}

#[derive(Debug, Error)]
pub enum AuthError {
    #[error("no entries")]
    Empty,
    #[error("keys must be strictly increasing; {key} follows {prev}")]
    Unsorted { prev: u64, key: u64 },
    #[error("index {index} out of range for {len} entries")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("range [{a}, {b}] is inverted")]
    InvertedRange { a: u64, b: u64 },
    #[error("MIN and MAX are undefined on an empty range")]
    EmptyRange,
    #[error("unsupported aggregate: {0}")]
    UnsupportedAggregate(&'static str),
    #[error(transparent)]
    Crypto(#[from] CryptoError),
    #[error(transparent)]
    Codec(#[from] CodecError),
}

pub(crate) fn check_sorted(keys: impl Iterator<Item = u64>) -> Result<(), AuthError> {
    let mut prev: Option<u64> = None;
    let mut any = false;
    for key in keys {
        any = true;
        if let Some(p) = prev {
            if key <= p {
                return Err(AuthError::Unsorted { prev: p, key });
            }
        }
        prev = Some(key);
    }
    if any {
        Ok(())
    } else {
        Err(AuthError::Empty)
    }
}
