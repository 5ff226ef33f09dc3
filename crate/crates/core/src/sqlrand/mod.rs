//! SQL keyword randomization: a secret decimal suffix is appended to every
//! keyword of trusted query templates, and a proxy strips it again, refusing
//! any query in which a keyword arrives without the current suffix.

mod keys;
mod keywords;
pub mod lexer;
pub mod protocol;
mod proxy;
mod rewrite;

use thiserror::Error;

pub use keys::{
    expand_password, key_update_apply, key_update_compose, keygen, suffix_from_key, KeyChain,
    RandomizationKey, EXPANSION_LEN,
};
pub use keywords::{KeywordSet, WordClass, STANDARD_KEYWORDS};
pub use protocol::{Request, Response};
pub use proxy::{run_proxy, spawn_proxy, EchoUpstream, Proxy, ProxyClient, ProxyMode, Upstream};
pub use rewrite::{derandomize, randomize, RejectReason};

#[derive(Debug, Error)]
pub enum SqlRandError {
    #[error("password is empty")]
    EmptyPassword,
    #[error("invalid keyword set: {0}")]
    Keywords(String),
    #[error("query already contains a randomized keyword at byte {offset}")]
    AlreadyRandomized { offset: usize },
    #[error("unterminated quoted literal at byte {offset}")]
    Unterminated { offset: usize },
    #[error("key must be {expected} bytes, got {got}")]
    KeyLength { expected: usize, got: usize },
    #[error("key-change message must be at least {min} bytes, got {got}")]
    MessageLength { min: usize, got: usize },
}
