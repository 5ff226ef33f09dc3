//! Key material and the on-disk key store.
//!
//! The key store is a directory holding one binary file per key, named after
//! the key id. Each file is a one-byte kind tag followed by the raw key bytes.

use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::RngCore;
use thiserror::Error;

use crate::provider::AlgorithmProvider;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KeyKind {
    Cipher,
    Hmac,
    SignaturePrivate,
    SignaturePublic,
    Prf,
}

impl KeyKind {
    pub const ALL: [KeyKind; 5] = [
        KeyKind::Cipher,
        KeyKind::Hmac,
        KeyKind::SignaturePrivate,
        KeyKind::SignaturePublic,
        KeyKind::Prf,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            KeyKind::Cipher => "cipher",
            KeyKind::Hmac => "hmac",
            KeyKind::SignaturePrivate => "signature-private",
            KeyKind::SignaturePublic => "signature-public",
            KeyKind::Prf => "prf",
        }
    }

    fn tag(self) -> u8 {
        match self {
            KeyKind::Cipher => 1,
            KeyKind::Hmac => 2,
            KeyKind::SignaturePrivate => 3,
            KeyKind::SignaturePublic => 4,
            KeyKind::Prf => 5,
        }
    }

    fn from_tag(tag: u8) -> Option<Self> {
        KeyKind::ALL.into_iter().find(|k| k.tag() == tag)
    }
}

impl fmt::Display for KeyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for KeyKind {
    type Err = KeyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        KeyKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| KeyError::UnknownKind(s.to_string()))
    }
}

#[derive(Debug, Error)]
pub enum KeyError {
    #[error("key `{0}` not found in key store")]
    NotFound(String),
    #[error("invalid key id `{0}`")]
    InvalidId(String),
    #[error("unknown key kind `{0}`")]
    UnknownKind(String),
    #[error("key `{id}` is {got} bytes, {kind} keys need {expected}")]
    Length {
        id: String,
        kind: KeyKind,
        expected: usize,
        got: usize,
    },
    #[error("key file `{0}` is corrupt")]
    Corrupt(String),
    #[error("key store I/O: {0}")]
    Io(#[from] io::Error),
}

/// A named key with its declared kind. Construction checks the byte length
/// against what the provider's algorithm for that kind requires.
#[derive(Clone, PartialEq, Eq)]
pub struct KeyMaterial {
    id: String,
    kind: KeyKind,
    bytes: Vec<u8>,
}

impl fmt::Debug for KeyMaterial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KeyMaterial")
            .field("id", &self.id)
            .field("kind", &self.kind)
            .field("len", &self.bytes.len())
            .finish()
    }
}

impl KeyMaterial {
    pub fn new(
        provider: &dyn AlgorithmProvider,
        id: impl Into<String>,
        kind: KeyKind,
        bytes: Vec<u8>,
    ) -> Result<Self, KeyError> {
        let id = id.into();
        let expected = provider.key_len(kind);
        if bytes.len() != expected {
            return Err(KeyError::Length {
                id,
                kind,
                expected,
                got: bytes.len(),
            });
        }
        Ok(Self { id, kind, bytes })
    }

    pub fn generate(
        provider: &dyn AlgorithmProvider,
        id: impl Into<String>,
        kind: KeyKind,
        rng: &mut dyn RngCore,
    ) -> Self {
        let mut bytes = vec![0u8; provider.key_len(kind)];
        rng.fill_bytes(&mut bytes);
        if kind == KeyKind::SignaturePublic {
            // a public key is only meaningful as the image of a private key
            let secret = bytes.clone();
            bytes = provider
                .public_key(&secret)
                .expect("generated private key has provider length");
        }
        Self {
            id: id.into(),
            kind,
            bytes,
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn kind(&self) -> KeyKind {
        self.kind
    }

    pub fn bytes(&self) -> &[u8] {
        &self.bytes
    }

    /// Public half of a signature-private key.
    pub fn public_half(&self, provider: &dyn AlgorithmProvider) -> Option<KeyMaterial> {
        match self.kind {
            KeyKind::SignaturePrivate => Some(KeyMaterial {
                id: self.id.clone(),
                kind: KeyKind::SignaturePublic,
                bytes: provider.public_key(&self.bytes).ok()?,
            }),
            KeyKind::SignaturePublic => Some(self.clone()),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct KeyStore {
    dir: PathBuf,
}

pub(crate) fn valid_id(id: &str) -> bool {
    !id.is_empty()
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
        && !id.starts_with('.')
}

impl KeyStore {
    /// Opens (creating if needed) a key directory.
    pub fn open(dir: impl AsRef<Path>) -> Result<Self, KeyError> {
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir)?;
        #[cfg(unix)]
        {
            use std::os::unix::fs::PermissionsExt;
            fs::set_permissions(&dir, fs::Permissions::from_mode(0o700))?;
        }
        Ok(Self { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, id: &str) -> Result<PathBuf, KeyError> {
        if !valid_id(id) {
            return Err(KeyError::InvalidId(id.to_string()));
        }
        Ok(self.dir.join(id))
    }

    pub fn contains(&self, id: &str) -> bool {
        self.path(id).map(|p| p.is_file()).unwrap_or(false)
    }

    pub fn put(&self, key: &KeyMaterial) -> Result<(), KeyError> {
        let path = self.path(key.id())?;
        let mut data = Vec::with_capacity(key.bytes.len() + 1);
        data.push(key.kind.tag());
        data.extend_from_slice(&key.bytes);
        let mut opts = fs::OpenOptions::new();
        opts.write(true).create(true).truncate(true);
        #[cfg(unix)]
        {
            use std::os::unix::fs::OpenOptionsExt;
            opts.mode(0o600);
        }
        io::Write::write_all(&mut opts.open(&path)?, &data)?;
        Ok(())
    }

    pub fn get(&self, provider: &dyn AlgorithmProvider, id: &str) -> Result<KeyMaterial, KeyError> {
        let path = self.path(id)?;
        let data = match fs::read(&path) {
            Ok(d) => d,
            Err(e) if e.kind() == io::ErrorKind::NotFound => {
                return Err(KeyError::NotFound(id.to_string()))
            }
            Err(e) => return Err(e.into()),
        };
        let (&tag, bytes) = data
            .split_first()
            .ok_or_else(|| KeyError::Corrupt(id.to_string()))?;
        let kind = KeyKind::from_tag(tag).ok_or_else(|| KeyError::Corrupt(id.to_string()))?;
        KeyMaterial::new(provider, id, kind, bytes.to_vec())
    }
}
