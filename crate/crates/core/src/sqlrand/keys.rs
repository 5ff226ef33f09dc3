//! Password-derived keys and the key-change exchange.
//!
//! The password is repeated to exactly 2^20 bytes and hashed (`digest0`).
//! `digest1 = hashA(digest0)`, and the deployment-local key is
//! `digest2 = hashA(digest1 || localizer)`. The keyword suffix is the first
//! four bytes of a key, big-endian, reduced mod 2^32 - 1, plus one.

use super::SqlRandError;
use crate::provider::{AlgorithmProvider, HashChoice};

pub const EXPANSION_LEN: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyChain {
    pub digest0: Vec<u8>,
    pub digest1: Vec<u8>,
    /// The localized key.
    pub digest2: Vec<u8>,
}

/// The suffix appended to keywords, and the epoch it belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RandomizationKey {
    /// Always in `1..=2^32 - 1`.
    pub suffix: u32,
    pub epoch: u64,
}

/// Hash of the password repeated to [`EXPANSION_LEN`] bytes.
pub fn expand_password(provider: &dyn AlgorithmProvider, password: &[u8]) -> Result<Vec<u8>, SqlRandError> {
    if password.is_empty() {
        return Err(SqlRandError::EmptyPassword);
    }
    let mut h = provider.hasher(HashChoice::A);
    let mut chunk = [0u8; 64];
    let mut pos = 0usize;
    for _ in 0..EXPANSION_LEN / 64 {
        for b in chunk.iter_mut() {
            *b = password[pos % password.len()];
            pos += 1;
        }
        h.update(&chunk);
    }
    Ok(h.finalize().to_vec())
}

pub fn suffix_from_key(key: &[u8]) -> u32 {
    let mut first = [0u8; 4];
    let n = key.len().min(4);
    first[..n].copy_from_slice(&key[..n]);
    let v = u32::from_be_bytes(first) as u64;
    (v % (u32::MAX as u64) + 1) as u32
}

pub fn keygen(
    provider: &dyn AlgorithmProvider,
    password: &str,
    localizer: &[u8],
) -> Result<(KeyChain, RandomizationKey), SqlRandError> {
    let digest0 = expand_password(provider, password.as_bytes())?;
    let digest1 = provider.hash(HashChoice::A, &digest0);
    let digest2 = provider.hash_parts(HashChoice::A, &[&digest1, localizer]);
    let key = RandomizationKey {
        suffix: suffix_from_key(&digest2),
        epoch: 0,
    };
    Ok((
        KeyChain {
            digest0,
            digest1,
            digest2,
        },
        key,
    ))
}

fn check_len(provider: &dyn AlgorithmProvider, key: &[u8]) -> Result<(), SqlRandError> {
    let expected = provider.hash_len(HashChoice::A);
    if key.len() != expected {
        return Err(SqlRandError::KeyLength {
            expected,
            got: key.len(),
        });
    }
    Ok(())
}

/// `random || (hashA(key_old || random) xor key_new)`.
pub fn key_update_compose(
    provider: &dyn AlgorithmProvider,
    key_old: &[u8],
    key_new: &[u8],
    random: &[u8],
) -> Result<Vec<u8>, SqlRandError> {
    check_len(provider, key_old)?;
    check_len(provider, key_new)?;
    let digest = provider.hash_parts(HashChoice::A, &[key_old, random]);
    let mut msg = random.to_vec();
    msg.extend(digest.iter().zip(key_new).map(|(d, k)| d ^ k));
    Ok(msg)
}

/// Recovers `key_new` from a key-change message.
pub fn key_update_apply(
    provider: &dyn AlgorithmProvider,
    key_old: &[u8],
    message: &[u8],
) -> Result<Vec<u8>, SqlRandError> {
    check_len(provider, key_old)?;
    let ha = provider.hash_len(HashChoice::A);
    if message.len() < ha {
        return Err(SqlRandError::MessageLength {
            min: ha,
            got: message.len(),
        });
    }
    let (random, delta) = message.split_at(message.len() - ha);
    let digest = provider.hash_parts(HashChoice::A, &[key_old, random]);
    Ok(digest.iter().zip(delta).map(|(d, x)| d ^ x).collect())
}
