//! Keyed pseudorandom functions built from HMAC over hash A.
//!
//! `prf_bits(k, x, n)` concatenates `HMAC_k(j || n || x)` for block counters
//! `j = 0, 1, ...` (both 32-bit big-endian) and truncates to `n` bits. The
//! requested length is mixed into every block, so outputs for different `n`
//! are unrelated rather than prefixes of each other.

use bitvec::prelude::*;

use super::{require_kind, AlgorithmProvider, CryptoError, HashChoice};
use crate::keys::{KeyKind, KeyMaterial};

/// Bit string, most significant bit of each byte first.
pub type Bits = BitVec<u8, Msb0>;

pub fn prf_bits_raw(
    provider: &dyn AlgorithmProvider,
    key: &[u8],
    input: &[u8],
    nbits: usize,
) -> Result<Bits, CryptoError> {
    if nbits == 0 {
        return Err(CryptoError::ZeroBits);
    }
    let nbits32 = u32::try_from(nbits).map_err(|_| CryptoError::ZeroBits)?;
    let mut bytes = Vec::with_capacity(nbits.div_ceil(8) + 64);
    let mut counter = 0u32;
    while bytes.len() * 8 < nbits {
        let mut msg = Vec::with_capacity(8 + input.len());
        msg.extend_from_slice(&counter.to_be_bytes());
        msg.extend_from_slice(&nbits32.to_be_bytes());
        msg.extend_from_slice(input);
        bytes.extend(provider.hmac(HashChoice::A, key, &msg));
        counter += 1;
    }
    let mut bits = Bits::from_vec(bytes);
    bits.truncate(nbits);
    Ok(bits)
}

/// Deterministic `nbits` output per `(key, input, nbits)`.
pub fn prf_bits(
    provider: &dyn AlgorithmProvider,
    key: &KeyMaterial,
    input: &[u8],
    nbits: usize,
) -> Result<Bits, CryptoError> {
    require_kind(key, KeyKind::Prf)?;
    prf_bits_raw(provider, key.bytes(), input, nbits)
}

/// Pseudorandom stream segment number `index`, `nbits` long.
pub fn stream_bits(
    provider: &dyn AlgorithmProvider,
    seed: &KeyMaterial,
    index: u64,
    nbits: usize,
) -> Result<Bits, CryptoError> {
    prf_bits(provider, seed, &index.to_be_bytes(), nbits)
}
