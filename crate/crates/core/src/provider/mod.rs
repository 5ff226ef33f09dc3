//! Algorithm providers.
//!
//! Every cryptographic primitive the framework uses goes through
//! [`AlgorithmProvider`], so the concrete cipher, hashes and signature scheme
//! can be swapped without touching the aspects built on top. Two providers
//! ship with the crate:
//!
//! | provider  | block cipher | hash A  | hash B  | signer  |
//! |-----------|--------------|---------|---------|---------|
//! | `classic` | AES-128      | SHA-1   | MD5     | Ed25519 |
//! | `modern`  | AES-256      | SHA-256 | SHA-512 | Ed25519 |
//!
//! Both are checked by the same conformance suite in `tests/provider_conformance.rs`.

mod cbc;
mod prf;

use std::fmt;
use std::str::FromStr;

use aes::cipher::{generic_array::GenericArray, BlockDecrypt, BlockEncrypt, KeyInit};
use aes::{Aes128, Aes256};
use digest::{core_api::BlockSizeUser, Digest, DynDigest};
use ed25519_dalek::{Signer as _, SigningKey, VerifyingKey};
use hmac::{Mac, SimpleHmac};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

use crate::keys::{KeyKind, KeyMaterial};

pub use cbc::{cbc_decrypt, cbc_encrypt};
pub use prf::{prf_bits, prf_bits_raw, stream_bits, Bits};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CryptoError {
    #[error("key `{id}` is a {got} key, operation needs {expected}")]
    WrongKeyKind {
        id: String,
        expected: KeyKind,
        got: KeyKind,
    },
    #[error("raw key is {got} bytes, algorithm needs {expected}")]
    KeyLength { expected: usize, got: usize },
    #[error("iv is {got} bytes, block size is {expected}")]
    IvLength { expected: usize, got: usize },
    #[error("ciphertext length {0} is not a positive multiple of the block size")]
    CiphertextLength(usize),
    #[error("invalid padding")]
    BadPadding,
    #[error("requested zero output bits")]
    ZeroBits,
    #[error("malformed signature key")]
    SignatureKey,
}

/// Selects one of the provider's two hash functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HashChoice {
    A,
    B,
}

pub trait AlgorithmProvider: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;

    /// Block size of the block cipher, in bytes.
    fn block_size(&self) -> usize;
    fn encrypt_block(&self, key: &[u8], block: &mut [u8]) -> Result<(), CryptoError>;
    fn decrypt_block(&self, key: &[u8], block: &mut [u8]) -> Result<(), CryptoError>;

    fn hash_len(&self, choice: HashChoice) -> usize;
    fn hasher(&self, choice: HashChoice) -> Box<dyn DynDigest>;
    fn hmac(&self, choice: HashChoice, key: &[u8], data: &[u8]) -> Vec<u8>;

    fn sign(&self, secret: &[u8], message: &[u8]) -> Result<Vec<u8>, CryptoError>;
    fn verify_signature(&self, public: &[u8], message: &[u8], signature: &[u8]) -> bool;
    fn public_key(&self, secret: &[u8]) -> Result<Vec<u8>, CryptoError>;

    /// Required byte length for keys of `kind`.
    fn key_len(&self, kind: KeyKind) -> usize;

    fn hash(&self, choice: HashChoice, data: &[u8]) -> Vec<u8> {
        let mut h = self.hasher(choice);
        h.update(data);
        h.finalize().into_vec()
    }

    /// Hash of the concatenation of `parts`.
    fn hash_parts(&self, choice: HashChoice, parts: &[&[u8]]) -> Vec<u8> {
        let mut h = self.hasher(choice);
        for p in parts {
            h.update(p);
        }
        h.finalize().into_vec()
    }
}

fn hmac_with<D>(key: &[u8], data: &[u8]) -> Vec<u8>
where
    D: Digest + BlockSizeUser + Clone,
{
    let mut mac = <SimpleHmac<D> as Mac>::new_from_slice(key).expect("hmac accepts any key length");
    mac.update(data);
    mac.finalize().into_bytes().to_vec()
}

fn ed25519_secret(secret: &[u8]) -> Result<SigningKey, CryptoError> {
    let bytes: [u8; 32] = secret.try_into().map_err(|_| CryptoError::SignatureKey)?;
    Ok(SigningKey::from_bytes(&bytes))
}

fn ed25519_sign(secret: &[u8], message: &[u8]) -> Result<Vec<u8>, CryptoError> {
    Ok(ed25519_secret(secret)?.sign(message).to_bytes().to_vec())
}

fn ed25519_verify(public: &[u8], message: &[u8], signature: &[u8]) -> bool {
    let Ok(pk) = <[u8; 32]>::try_from(public) else {
        return false;
    };
    let Ok(vk) = VerifyingKey::from_bytes(&pk) else {
        return false;
    };
    let Ok(sig) = ed25519_dalek::Signature::from_slice(signature) else {
        return false;
    };
    vk.verify_strict(message, &sig).is_ok()
}

fn ed25519_public(secret: &[u8]) -> Result<Vec<u8>, CryptoError> {
    Ok(ed25519_secret(secret)?.verifying_key().to_bytes().to_vec())
}

macro_rules! aes_block {
    ($cipher:ty, $key:expr, $block:expr, $op:ident) => {{
        let cipher = <$cipher>::new_from_slice($key).map_err(|_| CryptoError::KeyLength {
            expected: <$cipher as aes::cipher::KeySizeUser>::key_size(),
            got: $key.len(),
        })?;
        if $block.len() != 16 {
            return Err(CryptoError::CiphertextLength($block.len()));
        }
        cipher.$op(GenericArray::from_mut_slice($block));
        Ok(())
    }};
}

/// AES-128 / SHA-1 / MD5 / Ed25519: the algorithm family the framework's
/// parameter summary names.
#[derive(Debug, Clone, Copy, Default)]
pub struct Classic;

impl AlgorithmProvider for Classic {
    fn name(&self) -> &'static str {
        "classic"
    }

    fn block_size(&self) -> usize {
        16
    }

    fn encrypt_block(&self, key: &[u8], block: &mut [u8]) -> Result<(), CryptoError> {
        aes_block!(Aes128, key, block, encrypt_block)
    }

    fn decrypt_block(&self, key: &[u8], block: &mut [u8]) -> Result<(), CryptoError> {
        aes_block!(Aes128, key, block, decrypt_block)
    }

    fn hash_len(&self, choice: HashChoice) -> usize {
        match choice {
            HashChoice::A => 20,
            HashChoice::B => 16,
        }
    }

    fn hasher(&self, choice: HashChoice) -> Box<dyn DynDigest> {
        match choice {
            HashChoice::A => Box::new(sha1::Sha1::new()),
            HashChoice::B => Box::new(md5::Md5::new()),
        }
    }

    fn hmac(&self, choice: HashChoice, key: &[u8], data: &[u8]) -> Vec<u8> {
        match choice {
            HashChoice::A => hmac_with::<sha1::Sha1>(key, data),
            HashChoice::B => hmac_with::<md5::Md5>(key, data),
        }
    }

    fn sign(&self, secret: &[u8], message: &[u8]) -> Result<Vec<u8>, CryptoError> {
        ed25519_sign(secret, message)
    }

    fn verify_signature(&self, public: &[u8], message: &[u8], signature: &[u8]) -> bool {
        ed25519_verify(public, message, signature)
    }

    fn public_key(&self, secret: &[u8]) -> Result<Vec<u8>, CryptoError> {
        ed25519_public(secret)
    }

    fn key_len(&self, kind: KeyKind) -> usize {
        match kind {
            KeyKind::Cipher => 16,
            KeyKind::Hmac | KeyKind::Prf => 20,
            KeyKind::SignaturePrivate | KeyKind::SignaturePublic => 32,
        }
    }
}

/// AES-256 / SHA-256 / SHA-512 / Ed25519.
#[derive(Debug, Clone, Copy, Default)]
pub struct Modern;

impl AlgorithmProvider for Modern {
    fn name(&self) -> &'static str {
        "modern"
    }

    fn block_size(&self) -> usize {
        16
    }

    fn encrypt_block(&self, key: &[u8], block: &mut [u8]) -> Result<(), CryptoError> {
        aes_block!(Aes256, key, block, encrypt_block)
    }

    fn decrypt_block(&self, key: &[u8], block: &mut [u8]) -> Result<(), CryptoError> {
        aes_block!(Aes256, key, block, decrypt_block)
    }

    fn hash_len(&self, choice: HashChoice) -> usize {
        match choice {
            HashChoice::A => 32,
            HashChoice::B => 64,
        }
    }

    fn hasher(&self, choice: HashChoice) -> Box<dyn DynDigest> {
        match choice {
            HashChoice::A => Box::new(sha2::Sha256::new()),
            HashChoice::B => Box::new(sha2::Sha512::new()),
        }
    }

    fn hmac(&self, choice: HashChoice, key: &[u8], data: &[u8]) -> Vec<u8> {
        match choice {
            HashChoice::A => hmac_with::<sha2::Sha256>(key, data),
            HashChoice::B => hmac_with::<sha2::Sha512>(key, data),
        }
    }

    fn sign(&self, secret: &[u8], message: &[u8]) -> Result<Vec<u8>, CryptoError> {
        ed25519_sign(secret, message)
    }

    fn verify_signature(&self, public: &[u8], message: &[u8], signature: &[u8]) -> bool {
        ed25519_verify(public, message, signature)
    }

    fn public_key(&self, secret: &[u8]) -> Result<Vec<u8>, CryptoError> {
        ed25519_public(secret)
    }

    fn key_len(&self, kind: KeyKind) -> usize {
        match kind {
            KeyKind::Cipher => 32,
            KeyKind::Hmac | KeyKind::Prf => 32,
            KeyKind::SignaturePrivate | KeyKind::SignaturePublic => 32,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ProviderKind {
    #[default]
    Classic,
    Modern,
}

impl ProviderKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ProviderKind::Classic => "classic",
            ProviderKind::Modern => "modern",
        }
    }

    pub fn provider(self) -> &'static dyn AlgorithmProvider {
        match self {
            ProviderKind::Classic => &Classic,
            ProviderKind::Modern => &Modern,
        }
    }
}

impl FromStr for ProviderKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "classic" => Ok(ProviderKind::Classic),
            "modern" => Ok(ProviderKind::Modern),
            other => Err(other.to_string()),
        }
    }
}

pub(crate) fn require_kind(key: &KeyMaterial, expected: KeyKind) -> Result<(), CryptoError> {
    if key.kind() != expected {
        return Err(CryptoError::WrongKeyKind {
            id: key.id().to_string(),
            expected,
            got: key.kind(),
        });
    }
    Ok(())
}

/// Keyed MAC over the chosen hash.
pub fn hmac_tag(
    provider: &dyn AlgorithmProvider,
    key: &KeyMaterial,
    data: &[u8],
    choice: HashChoice,
) -> Result<Vec<u8>, CryptoError> {
    require_kind(key, KeyKind::Hmac)?;
    Ok(provider.hmac(choice, key.bytes(), data))
}

/// Constant-time equality for tags and digests.
pub fn ct_eq(a: &[u8], b: &[u8]) -> bool {
    use subtle::ConstantTimeEq;
    a.len() == b.len() && bool::from(a.ct_eq(b))
}

/// The seedable random source. Confine an instance to one thread.
pub type Rng = ChaCha20Rng;

pub fn seeded_rng(seed: u64) -> Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

pub fn entropy_rng() -> Rng {
    ChaCha20Rng::from_entropy()
}
