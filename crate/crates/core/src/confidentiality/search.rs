//! Searchable encryption over fixed-width words (the "Scheme IV" construction
//! for practical search on encrypted data).
//!
//! For the word `W_i` at position `i`:
//!
//! ```text
//! X_i      = E_{k''}(W_i)            deterministic n-bit encryption
//! L_i, R_i = X_i split at n - m bits
//! k_i      = f_{k'}(L_i)
//! S_i      = G(seed, i)              n - m pseudorandom bits
//! C_i      = X_i XOR (S_i || F_{k_i}(S_i))
//! ```
//!
//! A searcher holding `(X, k)` for a word tests each cell: if `C_i XOR X`
//! splits into `s || t` with `t == F_k(s)` the position matches. Unrelated
//! cells pass with probability `2^-m`; true positions always pass.
//!
//! `E` is a four-round Feistel network with PRF round functions so that any
//! byte-aligned `n` is supported and the owner can invert it to recover words.

use bitvec::prelude::*;
use thiserror::Error;

use crate::codec::{CodecError, Reader, Writer};
use crate::envelope::SecurityEnvelope;
use crate::keys::{KeyKind, KeyMaterial};
use crate::provider::{prf_bits_raw, require_kind, stream_bits, AlgorithmProvider, Bits, CryptoError};

const FEISTEL_ROUNDS: u8 = 4;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SearchError {
    #[error("invalid search parameters: {0}")]
    Params(&'static str),
    #[error("word at position {position} is {bits} bits, index words are {n} bits")]
    WordTooLong { position: usize, bits: usize, n: usize },
    #[error(transparent)]
    Crypto(#[from] CryptoError),
    #[error("index encoding: {0}")]
    Codec(#[from] CodecError),
}

/// Word and check-part sizes in bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchParams {
    pub n: usize,
    pub m: usize,
}

impl SearchParams {
    pub fn new(n: usize, m: usize) -> Result<Self, SearchError> {
        if n == 0 || !n.is_multiple_of(8) {
            return Err(SearchError::Params("word size n must be a positive multiple of 8"));
        }
        if m == 0 || m >= n {
            return Err(SearchError::Params("check size m must satisfy 1 <= m <= n-1"));
        }
        Ok(Self { n, m })
    }

    fn left_bits(&self) -> usize {
        self.n - self.m
    }
}

/// The owner's secrets: `k''` encrypts words, `k'` derives per-cell check
/// keys, and the stream seed drives `S_i`.
#[derive(Debug, Clone)]
pub struct SearchKeys {
    pub word_key: KeyMaterial,
    pub left_key: KeyMaterial,
    pub stream_seed: KeyMaterial,
}

impl SearchKeys {
    pub fn new(
        word_key: KeyMaterial,
        left_key: KeyMaterial,
        stream_seed: KeyMaterial,
    ) -> Result<Self, SearchError> {
        for k in [&word_key, &left_key, &stream_seed] {
            require_kind(k, KeyKind::Prf)?;
        }
        Ok(Self {
            word_key,
            left_key,
            stream_seed,
        })
    }
}

/// What a client hands the server to search for one word.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trapdoor {
    pub x: Bits,
    pub check_key: Vec<u8>,
}

/// Server-side ciphertext cells. Holds no key material.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncryptedIndex {
    pub params: SearchParams,
    pub cells: Vec<Bits>,
}

fn pack(bits: &BitSlice<u8, Msb0>) -> Vec<u8> {
    let mut out = Bits::repeat(false, bits.len().div_ceil(8) * 8);
    out[..bits.len()].copy_from_bitslice(bits);
    out.into_vec()
}

fn xor(a: &BitSlice<u8, Msb0>, b: &BitSlice<u8, Msb0>) -> Bits {
    debug_assert_eq!(a.len(), b.len());
    a.iter().by_vals().zip(b.iter().by_vals()).map(|(x, y)| x ^ y).collect()
}

/// UTF-8 encodes `word`, then truncates or zero-pads it to `n` bits.
pub fn canonical_word(word: &str, n: usize) -> Bits {
    let mut bytes = word.as_bytes().to_vec();
    bytes.resize(n / 8, 0);
    Bits::from_vec(bytes)
}

fn pad_word(word: &BitSlice<u8, Msb0>, position: usize, n: usize) -> Result<Bits, SearchError> {
    if word.len() > n {
        return Err(SearchError::WordTooLong {
            position,
            bits: word.len(),
            n,
        });
    }
    let mut w = Bits::from_bitslice(word);
    w.resize(n, false);
    Ok(w)
}

fn round_fn(
    provider: &dyn AlgorithmProvider,
    key: &[u8],
    round: u8,
    half: &BitSlice<u8, Msb0>,
    out_bits: usize,
) -> Result<Bits, CryptoError> {
    let mut input = vec![round];
    input.extend(pack(half));
    prf_bits_raw(provider, key, &input, out_bits)
}

fn feistel_encrypt(
    provider: &dyn AlgorithmProvider,
    key: &[u8],
    word: &BitSlice<u8, Msb0>,
) -> Result<Bits, CryptoError> {
    let half = word.len() / 2;
    let (mut l, mut r) = (Bits::from_bitslice(&word[..half]), Bits::from_bitslice(&word[half..]));
    for round in 0..FEISTEL_ROUNDS {
        let f = round_fn(provider, key, round, &r, l.len())?;
        let next_r = xor(&l, &f);
        l = r;
        r = next_r;
    }
    l.extend_from_bitslice(&r);
    Ok(l)
}

fn feistel_decrypt(
    provider: &dyn AlgorithmProvider,
    key: &[u8],
    block: &BitSlice<u8, Msb0>,
) -> Result<Bits, CryptoError> {
    let half = block.len() / 2;
    let (mut l, mut r) = (Bits::from_bitslice(&block[..half]), Bits::from_bitslice(&block[half..]));
    for round in (0..FEISTEL_ROUNDS).rev() {
        let f = round_fn(provider, key, round, &l, r.len())?;
        let prev_l = xor(&r, &f);
        r = l;
        l = prev_l;
    }
    l.extend_from_bitslice(&r);
    Ok(l)
}

fn check_key(
    provider: &dyn AlgorithmProvider,
    keys: &SearchKeys,
    left: &BitSlice<u8, Msb0>,
) -> Result<Vec<u8>, CryptoError> {
    let nbits = provider.key_len(KeyKind::Prf) * 8;
    Ok(prf_bits_raw(provider, keys.left_key.bytes(), &pack(left), nbits)?.into_vec())
}

/// Computes the search token for a word already padded to `n` bits.
pub fn trapdoor(
    provider: &dyn AlgorithmProvider,
    params: SearchParams,
    keys: &SearchKeys,
    word: &BitSlice<u8, Msb0>,
) -> Result<Trapdoor, SearchError> {
    let w = pad_word(word, 0, params.n)?;
    let x = feistel_encrypt(provider, keys.word_key.bytes(), &w)?;
    let check_key = check_key(provider, keys, &x[..params.left_bits()])?;
    Ok(Trapdoor { x, check_key })
}

/// Encrypts `words` position by position. Words shorter than `n` bits are
/// zero-padded; longer ones are rejected.
pub fn index_build(
    provider: &dyn AlgorithmProvider,
    params: SearchParams,
    keys: &SearchKeys,
    words: &[Bits],
) -> Result<EncryptedIndex, SearchError> {
    let left = params.left_bits();
    let mut cells = Vec::with_capacity(words.len());
    for (i, word) in words.iter().enumerate() {
        let w = pad_word(word, i, params.n)?;
        let x = feistel_encrypt(provider, keys.word_key.bytes(), &w)?;
        let k_i = check_key(provider, keys, &x[..left])?;
        let mut mask = stream_bits(provider, &keys.stream_seed, i as u64, left)?;
        let t = prf_bits_raw(provider, &k_i, &pack(&mask), params.m)?;
        mask.extend_from_bitslice(&t);
        cells.push(xor(&x, &mask));
    }
    Ok(EncryptedIndex { params, cells })
}

impl EncryptedIndex {
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Server-side scan: every position whose cell passes the check for the
    /// trapdoor. A superset of the true positions.
    pub fn search(&self, provider: &dyn AlgorithmProvider, td: &Trapdoor) -> Result<Vec<usize>, SearchError> {
        let left = self.params.left_bits();
        let mut hits = Vec::new();
        for (i, cell) in self.cells.iter().enumerate() {
            let y = xor(cell, &td.x);
            let (s, t) = y.split_at(left);
            if prf_bits_raw(provider, &td.check_key, &pack(s), self.params.m)? == t {
                hits.push(i);
            }
        }
        Ok(hits)
    }

    /// Owner-side decryption of the cell at `position`.
    pub fn recover(
        &self,
        provider: &dyn AlgorithmProvider,
        keys: &SearchKeys,
        position: usize,
    ) -> Result<Bits, SearchError> {
        let cell = self
            .cells
            .get(position)
            .ok_or(SearchError::Params("position out of range"))?;
        let left = self.params.left_bits();
        let s = stream_bits(provider, &keys.stream_seed, position as u64, left)?;
        let l = xor(&cell[..left], &s);
        let k_i = check_key(provider, keys, &l)?;
        let t = prf_bits_raw(provider, &k_i, &pack(&s), self.params.m)?;
        let r = xor(&cell[left..], &t);
        let mut x = l;
        x.extend_from_bitslice(&r);
        Ok(feistel_decrypt(provider, keys.word_key.bytes(), &x)?)
    }

    /// Wraps the index in a plain envelope (record id 0).
    pub fn to_envelope(&self) -> Result<SecurityEnvelope, SearchError> {
        let mut w = Writer::new();
        w.u32(self.params.n as u32)
            .u32(self.params.m as u32)
            .u32(self.cells.len() as u32);
        for c in &self.cells {
            w.raw(&pack(c));
        }
        Ok(SecurityEnvelope::plain(0, w.finish()))
    }

    pub fn from_envelope(env: &SecurityEnvelope) -> Result<Self, SearchError> {
        let mut r = Reader::new(&env.payload);
        let params = SearchParams::new(r.u32()? as usize, r.u32()? as usize)?;
        let count = r.u32()? as usize;
        let mut cells = Vec::with_capacity(count.min(1 << 20));
        for _ in 0..count {
            cells.push(Bits::from_slice(r.take(params.n / 8)?));
        }
        r.finish()?;
        Ok(Self { params, cells })
    }
}

/// Convenience wrapper: trapdoor then scan.
pub fn index_search(
    provider: &dyn AlgorithmProvider,
    index: &EncryptedIndex,
    keys: &SearchKeys,
    word: &BitSlice<u8, Msb0>,
) -> Result<Vec<usize>, SearchError> {
    let td = trapdoor(provider, index.params, keys, word)?;
    index.search(provider, &td)
}
